//! Binary field snapshots.
//!
//! Layout (all integers u32 and all reals f64, little-endian):
//!
//! | field        | content                                                |
//! |--------------|--------------------------------------------------------|
//! | magic        | the bytes `ACHN`                                       |
//! | version      | [`FORMAT_VERSION`]                                     |
//! | nx, ny       | grid size                                              |
//! | lx, ly       | box lengths                                            |
//! | n_u, n_phi   | number of retained velocity and phase modes            |
//! | t            | time                                                   |
//! | ρ            | nx·ny grid values, row-major (index iy·nx + ix)        |
//! | u            | n_u × (Re û₁, Im û₁, Re û₂, Im û₂)                     |
//! | φ            | n_phi × (Re φ̂, Im φ̂)                                   |
//!
//! Modes are listed in ascending (|k|², k₁, k₂) order.

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::basis::{Basis, ModeSet, TorusGrid};
use crate::dynamics::{FlowState, Model};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ACHN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
    pub rho: Vec<f64>,
    /// Velocity coefficients per retained mode.
    pub u: Vec<[Complex64; 2]>,
    /// Phase coefficients per retained mode.
    pub phi: Vec<Complex64>,
}

fn coefficients<T>(set: &ModeSet, f: impl Fn(usize) -> T) -> Vec<T> {
    set.order().iter().map(|&i| f(i)).collect()
}

impl Snapshot {
    pub fn from_state(model: &Model, state: &FlowState) -> Self {
        let g = model.basis.grid();
        Self {
            nx: g.nx,
            ny: g.ny,
            lx: g.lx,
            ly: g.ly,
            t: state.t,
            rho: state.rho.values.clone(),
            u: coefficients(&model.u_modes, |i| [state.u.c[0][i], state.u.c[1][i]]),
            phi: coefficients(&model.phi_modes, |i| state.phi.c[i]),
        }
    }

    /// Integer modes (m₁, m₂) of the velocity and phase coefficients.
    pub fn modes(&self) -> Result<(Vec<(i64, i64)>, Vec<(i64, i64)>)> {
        let basis = Basis::new(TorusGrid::new(self.lx, self.ly, self.nx, self.ny)?);
        let list = |n: usize| -> Result<Vec<(i64, i64)>> {
            let set = basis.shell_modes(n);
            if set.len() != n {
                return Err(Error::Format(format!("{n} modes do not form a complete shell set")));
            }
            Ok(set.order().iter().map(|&i| basis.integer_mode(i)).collect())
        };
        Ok((list(self.u.len())?, list(self.phi.len())?))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(48 + 8 * (self.rho.len() + 4 * self.u.len() + 2 * self.phi.len()));
        b.extend_from_slice(MAGIC);
        for v in [FORMAT_VERSION, self.nx as u32, self.ny as u32] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.lx, self.ly] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.u.len() as u32, self.phi.len() as u32] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&self.t.to_le_bytes());
        for v in &self.rho {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for [a, c] in &self.u {
            for v in [a.re, a.im, c.re, c.im] {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        for z in &self.phi {
            for v in [z.re, z.im] {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("missing ACHN magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let (nx, ny) = (r.u32()? as usize, r.u32()? as usize);
        let (lx, ly) = (r.f64()?, r.f64()?);
        let (n_u, n_phi) = (r.u32()? as usize, r.u32()? as usize);
        let t = r.f64()?;
        let expected = nx
            .checked_mul(ny)
            .and_then(|n| n.checked_add(n_u.checked_mul(4)?)?.checked_add(n_phi.checked_mul(2)?))
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Format("snapshot dimensions overflow".into()))?;
        if bytes.len() - r.pos != expected {
            return Err(Error::Format(format!(
                "payload has {} bytes, header implies {expected}",
                bytes.len() - r.pos
            )));
        }
        let rho = (0..nx * ny).map(|_| r.f64()).collect::<Result<_>>()?;
        let u = (0..n_u)
            .map(|_| Ok([Complex64::new(r.f64()?, r.f64()?), Complex64::new(r.f64()?, r.f64()?)]))
            .collect::<Result<_>>()?;
        let phi = (0..n_phi).map(|_| Ok(Complex64::new(r.f64()?, r.f64()?))).collect::<Result<_>>()?;
        Ok(Self { nx, ny, lx, ly, t, rho, u, phi })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Format(format!("truncated snapshot at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

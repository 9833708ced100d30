//! Preconditioned conjugate gradients for the ρ-weighted Galerkin mass
//! systems P(ρ a) = P b on a retained scalar space or its divergence-free
//! vector counterpart.

use rustfft::num_complex::Complex64;

use crate::basis::{Basis, ModeSet, VectorSpectral};
use crate::error::{Error, Result};

/// Relative residual targeted by the mass solves.
pub(crate) const MASS_TOL: f64 = 1e-13;
const MAX_ITER: usize = 400;

/// Trial space of a mass solve.
#[derive(Debug, Clone, Copy)]
pub enum Space<'a> {
    Scalar(&'a ModeSet),
    Solenoidal(&'a ModeSet),
}

type Field = Vec<Vec<Complex64>>;

fn project(basis: &Basis, space: Space, f: &mut Field) {
    match space {
        Space::Scalar(set) => basis.truncate(&mut f[0], set),
        Space::Solenoidal(set) => {
            basis.truncate(&mut f[0], set);
            basis.truncate(&mut f[1], set);
            let mut v = VectorSpectral { c: [std::mem::take(&mut f[0]), std::mem::take(&mut f[1])] };
            basis.leray_in_place(&mut v);
            let [a, b] = v.c;
            f[0] = a;
            f[1] = b;
        }
    }
}

fn dot(a: &Field, b: &Field) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p.conj() * q).re).sum::<f64>()).sum()
}

fn apply(basis: &Basis, space: Space, rho: &[f64], x: &Field) -> Field {
    let mut out: Field = x
        .iter()
        .map(|c| {
            let mut g = basis.inverse(c).expect("layout size");
            g.iter_mut().zip(rho).for_each(|(v, r)| *v *= r);
            basis.forward(&g).expect("layout size")
        })
        .collect();
    project(basis, space, &mut out);
    out
}

/// Solves P(ρ a) = P b for a in the trial space; `b` holds one coefficient
/// array per component (one for scalars, two for vectors).
pub fn solve_weighted(basis: &Basis, space: Space, rho: &[f64], b: Field) -> Result<Field> {
    let mut b = b;
    project(basis, space, &mut b);
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    let inv = 1.0 / mean;
    let b_norm = dot(&b, &b).sqrt();
    let zero = || -> Field { b.iter().map(|c| vec![Complex64::new(0.0, 0.0); c.len()]).collect() };
    if !b_norm.is_finite() {
        return Err(Error::NonFinite("right-hand side of the mass solve".into()));
    }
    if b_norm == 0.0 {
        return Ok(zero());
    }
    let mut x: Field = b.iter().map(|c| c.iter().map(|z| z * inv).collect()).collect();
    let ax = apply(basis, space, rho, &x);
    let mut r: Field = b.iter().zip(&ax).map(|(p, q)| p.iter().zip(q).map(|(u, v)| u - v).collect()).collect();
    let mut z: Field = r.iter().map(|c| c.iter().map(|v| v * inv).collect()).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..MAX_ITER {
        let res = dot(&r, &r).sqrt() / b_norm;
        if res <= MASS_TOL {
            return Ok(x);
        }
        if !res.is_finite() {
            return Err(Error::NonFinite("mass solve residual".into()));
        }
        let ap = apply(basis, space, rho, &p);
        let alpha = rz / dot(&p, &ap);
        for (xc, pc) in x.iter_mut().zip(&p) {
            xc.iter_mut().zip(pc).for_each(|(a, b)| *a += b * alpha);
        }
        for (rc, apc) in r.iter_mut().zip(&ap) {
            rc.iter_mut().zip(apc).for_each(|(a, b)| *a -= b * alpha);
        }
        z = r.iter().map(|c| c.iter().map(|v| v * inv).collect()).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pc, zc) in p.iter_mut().zip(&z) {
            pc.iter_mut().zip(zc).for_each(|(a, b)| *a = b + *a * beta);
        }
        if it + 1 == MAX_ITER {
            break;
        }
    }
    let res = dot(&r, &r).sqrt() / b_norm;
    if res <= MASS_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence { residual: res, iterations: MAX_ITER })
    }
}

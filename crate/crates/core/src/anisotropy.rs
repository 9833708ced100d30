//! Degree-one homogeneous surface-energy laws Γ, their capillary vector
//! Γξ = ½∇_p Γ², the capillary stress Γξ ⊗ ∇φ and numerical checks of the
//! structural hypotheses used by the dynamics:
//!
//! * H1: r|p|² ≤ Γ²(p) ≤ R|p|² with 0 < r ≤ R,
//! * H2: p ↦ Γξ(p) is linear,
//! * H3: p · Γξ(p) ≥ 0.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const SAMPLING_SEED: u64 = 0x5eed_a115;

#[derive(Debug, Clone, PartialEq)]
pub enum AnisotropyKind {
    /// Γ²(p) = pᵀ M p with M symmetric.
    QuadraticForm(DMatrix<f64>),
    /// Three-dimensional Taylor–Cahn family
    /// Γ² = |p|² + 2α Σ_{i<j} |p_i p_j| + 2β Σ_{i<j} (p_i − p_j)².
    TaylorCahn { alpha: f64, beta: f64 },
}

/// An immutable surface-energy law in dimension 2 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyModel {
    kind: AnisotropyKind,
    dim: usize,
}

/// Which structural hypothesis a witness violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
}

/// A point (or pair of points, for additivity) where a hypothesis fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub hypothesis: Hypothesis,
    pub p: Vec<f64>,
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// Lower spectral bound of Γ²(p)/|p|² (negative for indefinite laws).
    pub r: f64,
    /// Upper spectral bound of Γ²(p)/|p|².
    pub big_r: f64,
    pub h1_holds: bool,
    pub h2_holds: bool,
    pub h3_holds: bool,
    /// First violated hypothesis, if any.
    pub witness: Option<Witness>,
}

impl HypothesisReport {
    pub const CSV_HEADER: &'static str = "r,R,h1,h2,h3";

    pub fn all_hold(&self) -> bool {
        self.h1_holds && self.h2_holds && self.h3_holds
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{},{},{}",
            self.r, self.big_r, self.h1_holds, self.h2_holds, self.h3_holds
        )
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |b: bool| if b { "holds" } else { "FAILS" };
        writeln!(f, "lower bound r = {:.12}", self.r)?;
        writeln!(f, "upper bound R = {:.12}", self.big_r)?;
        writeln!(f, "H1 (r|p|^2 <= G^2 <= R|p|^2, r > 0): {}", mark(self.h1_holds))?;
        writeln!(f, "H2 (linear capillary vector):        {}", mark(self.h2_holds))?;
        write!(f, "H3 (p . Gxi(p) >= 0):                 {}", mark(self.h3_holds))?;
        if let Some(w) = &self.witness {
            write!(f, "\nwitness for {:?}: p = {:?}", w.hypothesis, w.p)?;
            if let Some(q) = &w.q {
                write!(f, ", q = {q:?}")?;
            }
        }
        Ok(())
    }
}

impl AnisotropyModel {
    /// Quadratic law Γ²(p) = pᵀMp; `m` must be symmetric, of size 2 or 3.
    pub fn quadratic_form(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: m.ncols() });
        }
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidParameter(format!(
                "anisotropy dimension must be 2 or 3, got {d}"
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("anisotropy matrix".into()));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "anisotropy matrix is not symmetric (max |M - M^T| = {asym:e})"
            )));
        }
        Ok(Self { kind: AnisotropyKind::QuadraticForm(m), dim: d })
    }

    /// Quadratic law from row-major rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        Self::quadratic_form(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn isotropic(dim: usize) -> Result<Self> {
        Self::quadratic_form(DMatrix::identity(dim, dim))
    }

    /// The (non-quadratic for α ≠ 0) Taylor–Cahn law in three dimensions.
    pub fn taylor_cahn(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::NonFinite("Taylor-Cahn parameters".into()));
        }
        if alpha <= -1.0 || beta <= -1.0 {
            return Err(Error::InvalidParameter(format!(
                "Taylor-Cahn parameters must exceed -1 (alpha = {alpha}, beta = {beta})"
            )));
        }
        Ok(Self { kind: AnisotropyKind::TaylorCahn { alpha, beta }, dim: 3 })
    }

    pub fn kind(&self) -> &AnisotropyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The matrix of a quadratic law.
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            AnisotropyKind::QuadraticForm(m) => Some(m),
            AnisotropyKind::TaylorCahn { .. } => None,
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient {p:?}")));
        }
        Ok(())
    }

    /// Γ²(p).
    pub fn gamma_sq(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(match &self.kind {
            AnisotropyKind::QuadraticForm(m) => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s += p[i] * m[(i, j)] * p[j];
                    }
                }
                s
            }
            AnisotropyKind::TaylorCahn { alpha, beta } => {
                let mut s: f64 = p.iter().map(|x| x * x).sum();
                for i in 0..3 {
                    for j in i + 1..3 {
                        s += 2.0 * alpha * (p[i] * p[j]).abs();
                        s += 2.0 * beta * (p[i] - p[j]).powi(2);
                    }
                }
                s
            }
        })
    }

    /// Γξ(p) = ½∇_p Γ²(p).
    pub fn xi_cap(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        match &self.kind {
            AnisotropyKind::QuadraticForm(m) => {
                Ok((0..self.dim).map(|i| (0..self.dim).map(|j| m[(i, j)] * p[j]).sum()).collect())
            }
            AnisotropyKind::TaylorCahn { alpha, beta } => {
                if *alpha != 0.0 {
                    for i in 0..3 {
                        for j in i + 1..3 {
                            if p[i] * p[j] == 0.0 {
                                return Err(Error::Kink { p: p.to_vec(), i, j });
                            }
                        }
                    }
                }
                Ok((0..3)
                    .map(|i| {
                        let mut g = p[i];
                        for j in (0..3).filter(|&j| j != i) {
                            if *alpha != 0.0 {
                                g += alpha * p[i].signum() * p[j].abs();
                            }
                            g += 2.0 * beta * (p[i] - p[j]);
                        }
                        g
                    })
                    .collect())
            }
        }
    }

    /// The stress tensor Γξ(∇φ) ⊗ ∇φ, entry (i, j) = (Γξ)_i (∇φ)_j.
    pub fn capillary_stress(&self, grad_phi: &[f64]) -> Result<DMatrix<f64>> {
        let xi = self.xi_cap(grad_phi)?;
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| xi[i] * grad_phi[j]))
    }

    /// Numerical check of H1–H3. Quadratic laws are decided exactly by an
    /// eigen-solve; Taylor–Cahn laws by sampling `n_samples` (≥ 100) unit
    /// vectors followed by local refinement.
    pub fn check_hypotheses(&self, n_samples: usize) -> HypothesisReport {
        match &self.kind {
            AnisotropyKind::QuadraticForm(m) => quadratic_report(m),
            AnisotropyKind::TaylorCahn { .. } => self.sampled_report(n_samples.max(100)),
        }
    }

    fn rayleigh(&self, p: &[f64]) -> f64 {
        let n2: f64 = p.iter().map(|x| x * x).sum();
        self.gamma_sq(p).unwrap_or(f64::NAN) / n2
    }

    fn sampled_report(&self, n_samples: usize) -> HypothesisReport {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        };
        let samples: Vec<Vec<f64>> = (0..n_samples).map(|_| draw(&mut rng)).collect();

        let (mut p_min, mut p_max) = (samples[0].clone(), samples[0].clone());
        for p in &samples {
            if self.rayleigh(p) < self.rayleigh(&p_min) {
                p_min = p.clone();
            }
            if self.rayleigh(p) > self.rayleigh(&p_max) {
                p_max = p.clone();
            }
        }
        let p_min = self.refine(p_min, 1.0);
        let p_max = self.refine(p_max, -1.0);
        let r = self.rayleigh(&p_min);
        let big_r = self.rayleigh(&p_max);

        // Additivity of Γξ on random pairs (H2) and p·Γξ(p) ≥ 0 (H3).
        let mut h2_witness = None;
        let mut h3_witness = None;
        for pair in samples.chunks_exact(2) {
            let (p, q) = (&pair[0], &pair[1]);
            let s: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
            if let (Ok(xp), Ok(xq), Ok(xs)) = (self.xi_cap(p), self.xi_cap(q), self.xi_cap(&s)) {
                let gap = (0..self.dim).map(|i| (xs[i] - xp[i] - xq[i]).abs()).fold(0.0, f64::max);
                if h2_witness.is_none() && gap > 1e-9 {
                    h2_witness = Some(Witness { hypothesis: Hypothesis::H2, p: p.clone(), q: Some(q.clone()) });
                }
            }
        }
        for p in samples.iter().chain([&p_min]) {
            if let Ok(x) = self.xi_cap(p) {
                let dot: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
                if h3_witness.is_none() && dot < 0.0 {
                    h3_witness = Some(Witness { hypothesis: Hypothesis::H3, p: p.clone(), q: None });
                }
            }
        }
        let h1 = r > 0.0;
        let witness = if !h1 {
            Some(Witness { hypothesis: Hypothesis::H1, p: p_min.clone(), q: None })
        } else {
            h2_witness.clone().or(h3_witness.clone())
        };
        HypothesisReport {
            r,
            big_r,
            h1_holds: h1,
            h2_holds: h2_witness.is_none(),
            h3_holds: h3_witness.is_none(),
            witness,
        }
    }

    /// Pattern search on the unit sphere minimising `sign * Γ²(p)`.
    fn refine(&self, mut p: Vec<f64>, sign: f64) -> Vec<f64> {
        let normalize = |v: &mut Vec<f64>| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
        };
        let mut best = sign * self.rayleigh(&p);
        let mut step = 0.1;
        while step > 1e-12 {
            let mut improved = false;
            for i in 0..self.dim {
                for dir in [-1.0, 1.0] {
                    let mut trial = p.clone();
                    trial[i] += dir * step;
                    normalize(&mut trial);
                    let v = sign * self.rayleigh(&trial);
                    if v < best {
                        best = v;
                        p = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        p
    }
}

fn quadratic_report(m: &DMatrix<f64>) -> HypothesisReport {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let (mut imin, mut imax) = (0, 0);
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    let r = eig.eigenvalues[imin];
    let big_r = eig.eigenvalues[imax];
    let h1 = r > 0.0;
    let h3 = r >= 0.0;
    let witness = (!h1).then(|| {
        let v: DVector<f64> = eig.eigenvectors.column(imin).into_owned();
        // Canonical sign: largest-magnitude component positive.
        let k = v.iamax();
        let s = if v[k] < 0.0 { -1.0 } else { 1.0 };
        let p: Vec<f64> = v.iter().map(|x| {
            let y = s * x;
            if y.abs() < 1e-15 { 0.0 } else { y }
        }).collect();
        Witness { hypothesis: Hypothesis::H1, p, q: None }
    });
    HypothesisReport { r, big_r, h1_holds: h1, h2_holds: true, h3_holds: h3, witness }
}

/// Quadratic form reproducing the α = 0 Taylor–Cahn law in three dimensions:
/// M = (1 + 6β) I − 2β J.
pub fn taylor_cahn_matrix(beta: f64) -> AnisotropyModel {
    taylor_cahn_matrix_in(beta, 3)
}

/// Dimension-generic version: Γ² = |p|² + 2β Σ_{i<j} (p_i − p_j)², i.e.
/// M = (1 + 2dβ) I − 2β J. Its eigenvalues are 1 (along (1,…,1)) and 1 + 2dβ.
pub fn taylor_cahn_matrix_in(beta: f64, dim: usize) -> AnisotropyModel {
    let d = dim as f64;
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j { 1.0 + 2.0 * d * beta - 2.0 * beta } else { -2.0 * beta }
    });
    AnisotropyModel { kind: AnisotropyKind::QuadraticForm(m), dim }
}

//! Fourier pseudo-spectral discretization of the periodic box
//! [0, L₁) × [0, L₂): transforms, spectral differentiation, 2/3-rule
//! dealiasing, retained mode sets, Leray projection and exact trigonometric
//! evaluation at arbitrary points.
//!
//! Conventions: grid values are stored row-major with index `iy * nx + ix`;
//! spectral coefficients use the same layout (FFT order) and are normalized so
//! that f(x) = Σ_k f̂(k) e^{ik·x}, i.e. a constant c has zero-mode coefficient c.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic collocation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl TorusGrid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "box lengths must be positive (got {lx}, {ly})"
            )));
        }
        for n in [nx, ny] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidParameter(format!(
                    "grid sizes must be powers of two >= 8 (got {n})"
                )));
            }
        }
        Ok(Self { lx, ly, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Quadrature weight of one collocation point.
    pub fn cell_area(&self) -> f64 {
        self.area() / self.len() as f64
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        [(idx % self.nx) as f64 * self.hx(), (idx / self.nx) as f64 * self.hy()]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Grid samples of an analytic function.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| {
            let [x, y] = self.point(i);
            f(x, y)
        }).collect()
    }
}

/// Signed integer wavenumber of FFT index `i` on an axis of `n` points
/// (the Nyquist index maps to −n/2).
fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 { i as i64 } else { i as i64 - n as i64 }
}

/// Scalar field in spectral form (full FFT layout, zero outside its mode set).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSpectral {
    pub c: Vec<Complex64>,
}

/// Vector field in spectral form, one coefficient array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSpectral {
    pub c: [Vec<Complex64>; 2],
}

impl ScalarSpectral {
    pub fn zeros(n: usize) -> Self {
        Self { c: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// self + a·other
    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        Self { c: self.c.iter().zip(&other.c).map(|(x, y)| x + y * a).collect() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { c: self.c.iter().map(|x| x * a).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl VectorSpectral {
    pub fn zeros(n: usize) -> Self {
        Self { c: [vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]] }
    }

    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        let f = |x: &Vec<Complex64>, y: &Vec<Complex64>| x.iter().zip(y).map(|(p, q)| p + q * a).collect();
        Self { c: [f(&self.c[0], &other.c[0]), f(&self.c[1], &other.c[1])] }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { c: [0, 1].map(|i| self.c[i].iter().map(|x| x * a).collect()) }
    }

    /// Σ_i w_i · fields_i
    pub fn combination(weights: &[f64], fields: &[&VectorSpectral]) -> Self {
        let n = fields[0].c[0].len();
        let mut out = Self::zeros(n);
        for (w, f) in weights.iter().zip(fields) {
            if *w == 0.0 {
                continue;
            }
            for d in 0..2 {
                for (o, v) in out.c[d].iter_mut().zip(&f.c[d]) {
                    *o += v * *w;
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// A set of retained Fourier modes, stored as a mask over the FFT layout and
/// as the list of layout indices in ascending (|k|², k₁, k₂) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    mask: Vec<bool>,
    order: Vec<usize>,
}

impl ModeSet {
    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Layout indices in mode order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Spectral basis on a torus grid.
pub struct Basis {
    grid: TorusGrid,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    mx: Vec<i64>,
    my: Vec<i64>,
    /// Differentiation wavenumbers per axis (Nyquist zeroed).
    kx: Vec<f64>,
    ky: Vec<f64>,
    dealiased: ModeSet,
}

impl std::fmt::Debug for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Basis").field("grid", &self.grid).finish()
    }
}

impl Basis {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let mx: Vec<i64> = (0..grid.nx).map(|i| signed_index(i, grid.nx)).collect();
        let my: Vec<i64> = (0..grid.ny).map(|i| signed_index(i, grid.ny)).collect();
        let kx = mx.iter().map(|&m| {
            if m == -(grid.nx as i64) / 2 { 0.0 } else { 2.0 * PI * m as f64 / grid.lx }
        }).collect();
        let ky = my.iter().map(|&m| {
            if m == -(grid.ny as i64) / 2 { 0.0 } else { 2.0 * PI * m as f64 / grid.ly }
        }).collect();
        let mut basis = Self {
            grid,
            fwd_x: planner.plan_fft_forward(grid.nx),
            inv_x: planner.plan_fft_inverse(grid.nx),
            fwd_y: planner.plan_fft_forward(grid.ny),
            inv_y: planner.plan_fft_inverse(grid.ny),
            mx,
            my,
            kx,
            ky,
            dealiased: ModeSet { mask: vec![], order: vec![] },
        };
        let (cx, cy) = (grid.nx as i64 / 3, grid.ny as i64 / 3);
        let mask: Vec<bool> = (0..grid.len())
            .map(|i| {
                let (a, b) = basis.integer_mode(i);
                a.abs() <= cx && b.abs() <= cy
            })
            .collect();
        basis.dealiased = basis.mode_set_from_mask(mask);
        basis
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Integer wavenumbers (m₁, m₂) of layout index `idx`.
    pub fn integer_mode(&self, idx: usize) -> (i64, i64) {
        (self.mx[idx % self.grid.nx], self.my[idx / self.grid.nx])
    }

    /// Layout index of integer wavenumbers, if representable on the grid.
    pub fn index_of(&self, m1: i64, m2: i64) -> Option<usize> {
        let (nx, ny) = (self.grid.nx as i64, self.grid.ny as i64);
        if m1 < -nx / 2 || m1 >= nx / 2 || m2 < -ny / 2 || m2 >= ny / 2 {
            return None;
        }
        Some((m2.rem_euclid(ny) * nx + m1.rem_euclid(nx)) as usize)
    }

    /// Physical wavevector of layout index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let (a, b) = self.integer_mode(idx);
        [2.0 * PI * a as f64 / self.grid.lx, 2.0 * PI * b as f64 / self.grid.ly]
    }

    /// Differentiation wavevector (Nyquist components zeroed).
    pub fn diff_wavevector(&self, idx: usize) -> [f64; 2] {
        [self.kx[idx % self.grid.nx], self.ky[idx / self.grid.nx]]
    }

    pub fn k_sq(&self, idx: usize) -> f64 {
        let [a, b] = self.wavevector(idx);
        a * a + b * b
    }

    fn mode_cmp(&self, i: usize, j: usize) -> Ordering {
        let (a1, b1) = self.integer_mode(i);
        let (a2, b2) = self.integer_mode(j);
        let shell = if self.grid.lx == self.grid.ly && self.grid.nx == self.grid.ny {
            (a1 * a1 + b1 * b1).cmp(&(a2 * a2 + b2 * b2))
        } else {
            self.k_sq(i).total_cmp(&self.k_sq(j))
        };
        let [k1, k2] = self.wavevector(i);
        let [q1, q2] = self.wavevector(j);
        shell.then(k1.total_cmp(&q1)).then(k2.total_cmp(&q2))
    }

    fn same_shell(&self, i: usize, j: usize) -> bool {
        let (a1, b1) = self.integer_mode(i);
        let (a2, b2) = self.integer_mode(j);
        if self.grid.lx == self.grid.ly && self.grid.nx == self.grid.ny {
            a1 * a1 + b1 * b1 == a2 * a2 + b2 * b2
        } else {
            self.k_sq(i) == self.k_sq(j)
        }
    }

    fn mode_set_from_mask(&self, mask: Vec<bool>) -> ModeSet {
        let mut order: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        order.sort_by(|&i, &j| self.mode_cmp(i, j));
        ModeSet { mask, order }
    }

    /// The 2/3-rule band |m_i| ≤ N_i/3.
    pub fn dealiased(&self) -> &ModeSet {
        &self.dealiased
    }

    /// The first `n_modes` dealiased modes in mode order, extended to the end
    /// of the last |k|² shell so the set is closed under k ↦ −k.
    pub fn shell_modes(&self, n_modes: usize) -> ModeSet {
        let order = self.dealiased.order();
        let mut n = n_modes.min(order.len());
        while n > 0 && n < order.len() && self.same_shell(order[n - 1], order[n]) {
            n += 1;
        }
        let mut mask = vec![false; self.len()];
        for &i in &order[..n] {
            mask[i] = true;
        }
        ModeSet { mask, order: order[..n].to_vec() }
    }

    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let (fx, fy) = if forward { (&self.fwd_x, &self.fwd_y) } else { (&self.inv_x, &self.inv_y) };
        fx.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                t[ix * ny + iy] = data[iy * nx + ix];
            }
        }
        fy.process(&mut t);
        for iy in 0..ny {
            for ix in 0..nx {
                data[iy * nx + ix] = t[ix * ny + iy];
            }
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: n });
        }
        Ok(())
    }

    /// Full set of Fourier coefficients of grid values.
    pub fn forward(&self, f: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        Ok(self.forward_unchecked(f))
    }

    fn forward_unchecked(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut data, true);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
        data
    }

    /// Grid values (real part) of a coefficient array.
    pub fn inverse(&self, c: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(c.len())?;
        Ok(self.inverse_unchecked(c))
    }

    fn inverse_unchecked(&self, c: &[Complex64]) -> Vec<f64> {
        let mut data = c.to_vec();
        self.fft2(&mut data, false);
        data.into_iter().map(|z| z.re).collect()
    }

    /// Spectral form of grid values (no truncation).
    pub fn to_spectral(&self, f: &[f64]) -> Result<ScalarSpectral> {
        Ok(ScalarSpectral { c: self.forward(f)? })
    }

    pub fn to_grid(&self, f: &ScalarSpectral) -> Vec<f64> {
        self.inverse_unchecked(&f.c)
    }

    pub fn vector_to_grid(&self, v: &VectorSpectral) -> [Vec<f64>; 2] {
        [self.inverse_unchecked(&v.c[0]), self.inverse_unchecked(&v.c[1])]
    }

    /// Leray-projected spectral form of a grid vector field.
    pub fn vector_to_spectral(&self, v: [&[f64]; 2]) -> Result<VectorSpectral> {
        let c = [self.forward(v[0])?, self.forward(v[1])?];
        Ok(self.leray_project(&VectorSpectral { c }))
    }

    /// Orthogonal projection onto divergence-free fields:
    /// v̂ ← (I − kkᵀ/|k|²) v̂ for k ≠ 0.
    pub fn leray_project(&self, v: &VectorSpectral) -> VectorSpectral {
        let mut out = v.clone();
        self.leray_in_place(&mut out);
        out
    }

    pub fn leray_in_place(&self, v: &mut VectorSpectral) {
        for i in 0..self.len() {
            let [a, b] = self.diff_wavevector(i);
            let k2 = a * a + b * b;
            if k2 == 0.0 {
                continue;
            }
            let dot = (v.c[0][i] * a + v.c[1][i] * b) / k2;
            v.c[0][i] -= dot * a;
            v.c[1][i] -= dot * b;
        }
    }

    /// Zero all coefficients outside `set`.
    pub fn truncate(&self, c: &mut [Complex64], set: &ModeSet) {
        for (z, &keep) in c.iter_mut().zip(set.mask()) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Galerkin projection of grid values onto the span of `set`.
    pub fn project(&self, f: &[f64], set: &ModeSet) -> Result<ScalarSpectral> {
        let mut c = self.forward(f)?;
        self.truncate(&mut c, set);
        Ok(ScalarSpectral { c })
    }

    /// Galerkin projection of a grid vector field onto the divergence-free
    /// span of `set`.
    pub fn project_vector(&self, v: [&[f64]; 2], set: &ModeSet) -> Result<VectorSpectral> {
        let mut c = [self.forward(v[0])?, self.forward(v[1])?];
        self.truncate(&mut c[0], set);
        self.truncate(&mut c[1], set);
        Ok(self.leray_project(&VectorSpectral { c }))
    }

    /// Truncation to the `n_modes` lowest modes in (|k|², k₁, k₂) order.
    pub fn project_scalar(&self, f: &ScalarSpectral, n_modes: usize) -> ScalarSpectral {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.mode_cmp(i, j));
        let mut out = ScalarSpectral::zeros(self.len());
        for &i in order.iter().take(n_modes) {
            out.c[i] = f.c[i];
        }
        out
    }

    /// Spectral gradient (multiplication by ik).
    pub fn grad(&self, f: &ScalarSpectral) -> VectorSpectral {
        let mut out = VectorSpectral::zeros(self.len());
        for i in 0..self.len() {
            let [a, b] = self.diff_wavevector(i);
            out.c[0][i] = f.c[i] * Complex64::new(0.0, a);
            out.c[1][i] = f.c[i] * Complex64::new(0.0, b);
        }
        out
    }

    pub fn div(&self, v: &VectorSpectral) -> ScalarSpectral {
        let c = (0..self.len())
            .map(|i| {
                let [a, b] = self.diff_wavevector(i);
                Complex64::new(0.0, 1.0) * (v.c[0][i] * a + v.c[1][i] * b)
            })
            .collect();
        ScalarSpectral { c }
    }

    /// ∂f/∂x_axis of a coefficient array, as a coefficient array.
    pub fn derivative(&self, c: &[Complex64], axis: usize) -> Vec<Complex64> {
        (0..self.len())
            .map(|i| c[i] * Complex64::new(0.0, self.diff_wavevector(i)[axis]))
            .collect()
    }

    /// Grid values of ∂f/∂x_axis for grid values f.
    pub fn grid_derivative(&self, f: &[f64], axis: usize) -> Result<Vec<f64>> {
        let c = self.forward(f)?;
        Ok(self.inverse_unchecked(&self.derivative(&c, axis)))
    }

    /// Collocation quadrature ∫ f g.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.grid.cell_area() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Collocation quadrature ∫ f.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.grid.cell_area() * f.iter().sum::<f64>()
    }

    /// |Ω| Σ_k Re(f̂ conj ĝ): equals the grid quadrature by Parseval.
    pub fn spectral_inner(&self, f: &[Complex64], g: &[Complex64]) -> f64 {
        self.grid.area() * f.iter().zip(g).map(|(a, b)| (a * b.conj()).re).sum::<f64>()
    }

    /// Squared L² norm of a vector field from its coefficients.
    pub fn vector_norm_sq(&self, v: &VectorSpectral) -> f64 {
        self.spectral_inner(&v.c[0], &v.c[0]) + self.spectral_inner(&v.c[1], &v.c[1])
    }

    /// Squared H¹ norm ‖f‖² + ‖∇f‖² from coefficients.
    pub fn h1_norm_sq(&self, f: &ScalarSpectral) -> f64 {
        self.grid.area()
            * f.c.iter().enumerate().map(|(i, z)| {
                let [a, b] = self.diff_wavevector(i);
                z.norm_sqr() * (1.0 + a * a + b * b)
            }).sum::<f64>()
    }

    /// max_k |k·v̂(k)| / (|k| max_k |v̂(k)|): zero for a divergence-free field.
    pub fn divergence_defect(&self, v: &VectorSpectral) -> f64 {
        let scale = v.c.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (0..self.len())
            .map(|i| {
                let [a, b] = self.diff_wavevector(i);
                let k = (a * a + b * b).sqrt();
                if k == 0.0 { 0.0 } else { (v.c[0][i] * a + v.c[1][i] * b).norm() / k }
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// Evaluator for the exact trigonometric polynomials with the given
    /// coefficient arrays, restricted to `set` (or the full grid band, with
    /// the Nyquist terms symmetrized, when `set` is `None`).
    pub fn evaluator(&self, fields: &[&[Complex64]], set: Option<&ModeSet>) -> PointEvaluator {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let keep = |i: usize| set.map_or(true, |s| s.contains(i));
        let used: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        let mut cols: Vec<i64> = used.iter().map(|&i| self.mx[i % nx]).collect();
        let mut rows: Vec<i64> = used.iter().map(|&i| self.my[i / nx]).collect();
        cols.sort_unstable();
        cols.dedup();
        rows.sort_unstable();
        rows.dedup();
        let (nc, nr) = (cols.len(), rows.len());
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); nc * nr]; fields.len()];
        for &i in &used {
            let c = cols.binary_search(&self.mx[i % nx]).unwrap();
            let r = rows.binary_search(&self.my[i / nx]).unwrap();
            for (f, out) in fields.iter().zip(coeffs.iter_mut()) {
                out[r * nc + c] = f[i];
            }
        }
        PointEvaluator {
            cols,
            rows,
            nyq_x: -(nx as i64) / 2,
            nyq_y: -(ny as i64) / 2,
            base: [2.0 * PI / self.grid.lx, 2.0 * PI / self.grid.ly],
            coeffs,
        }
    }
}

/// Direct evaluation of trigonometric polynomials at arbitrary points.
/// Nyquist terms e^{−iπx/h} are replaced by cos(πx/h), which makes the full
/// grid interpolant real and symmetric.
pub struct PointEvaluator {
    cols: Vec<i64>,
    rows: Vec<i64>,
    nyq_x: i64,
    nyq_y: i64,
    base: [f64; 2],
    coeffs: Vec<Vec<Complex64>>,
}

impl PointEvaluator {
    pub fn n_fields(&self) -> usize {
        self.coeffs.len()
    }

    fn phases(m: &[i64], nyq: i64, base: f64, x: f64) -> Vec<Complex64> {
        m.iter()
            .map(|&k| {
                let (s, c) = (base * k as f64 * x).sin_cos();
                if k == nyq { Complex64::new(c, 0.0) } else { Complex64::new(c, s) }
            })
            .collect()
    }

    /// Values of every field at `p`, written into `out`.
    pub fn eval_into(&self, p: [f64; 2], out: &mut [f64]) {
        let ex = Self::phases(&self.cols, self.nyq_x, self.base[0], p[0]);
        let ey = Self::phases(&self.rows, self.nyq_y, self.base[1], p[1]);
        let nc = self.cols.len();
        for (f, o) in self.coeffs.iter().zip(out.iter_mut()) {
            let mut acc = 0.0;
            for (r, w) in ey.iter().enumerate() {
                let row = &f[r * nc..(r + 1) * nc];
                let mut inner = Complex64::new(0.0, 0.0);
                for (c, e) in row.iter().zip(&ex) {
                    inner += c * e;
                }
                acc += (inner * w).re;
            }
            *o = acc;
        }
    }

    pub fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_fields()];
        self.eval_into(p, &mut out);
        out
    }

    /// Values at many points, `result[field][point]`.
    pub fn eval_many(&self, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        let nf = self.n_fields();
        let flat: Vec<f64> = points
            .par_iter()
            .flat_map_iter(|&p| self.eval(p))
            .collect();
        (0..nf).map(|f| flat.iter().skip(f).step_by(nf).copied().collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, l: f64) -> Basis {
        Basis::new(TorusGrid::new(l, l, n, n).unwrap())
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(1.0, 1.0, 12, 16).is_err());
        assert!(TorusGrid::new(1.0, 1.0, 4, 4).is_err());
        assert!(TorusGrid::new(-1.0, 1.0, 8, 8).is_err());
        assert!(TorusGrid::new(1.0, 2.0, 8, 32).is_ok());
    }

    #[test]
    fn constant_and_cosine_coefficients() {
        let b = basis(16, 3.0);
        let c = b.forward(&vec![2.5; 256]).unwrap();
        assert!((c[0].re - 2.5).abs() < 1e-15);
        assert!(c[1..].iter().all(|z| z.norm() < 1e-15));
        let f = b.grid().sample(|x, _| (2.0 * PI * x / 3.0).cos());
        let c = b.forward(&f).unwrap();
        let (p, m) = (b.index_of(1, 0).unwrap(), b.index_of(-1, 0).unwrap());
        assert!((c[p].re - 0.5).abs() < 1e-15 && (c[m].re - 0.5).abs() < 1e-15);
        let rest: f64 = (0..256).filter(|&i| i != p && i != m).map(|i| c[i].norm()).sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn dealias_band_sizes() {
        assert_eq!(basis(32, 1.0).dealiased().len(), 21 * 21);
        assert_eq!(basis(8, 1.0).dealiased().len(), 25);
        assert_eq!(basis(16, 1.0).dealiased().len(), 121);
    }

    #[test]
    fn mode_order_is_by_shell_then_components() {
        let b = basis(16, 2.0 * PI);
        let ord: Vec<(i64, i64)> = b.dealiased().order().iter().map(|&i| b.integer_mode(i)).collect();
        assert_eq!(ord[0], (0, 0));
        assert_eq!(&ord[1..5], &[(-1, 0), (0, -1), (0, 1), (1, 0)]);
        let shells = b.shell_modes(2);
        assert_eq!(shells.len(), 5);
        for &i in shells.order() {
            let (a, c) = b.integer_mode(i);
            assert!(shells.contains(b.index_of(-a, -c).unwrap()));
        }
    }

    #[test]
    fn leray_examples() {
        let b = basis(8, 2.0 * PI);
        let mut v = VectorSpectral::zeros(64);
        let (i, j) = (b.index_of(1, 0).unwrap(), b.index_of(0, 1).unwrap());
        v.c[0][i] = Complex64::new(1.0, 0.0);
        v.c[0][j] = Complex64::new(1.0, 0.0);
        let p = b.leray_project(&v);
        assert_eq!(p.c[0][i], Complex64::new(0.0, 0.0));
        assert_eq!(p.c[0][j], Complex64::new(1.0, 0.0));
        assert_eq!(p.c[1][j], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gradient_projects_to_zero() {
        let b = basis(16, 5.0);
        let f = b.grid().sample(|x, y| (2.0 * PI * x / 5.0).sin() * (4.0 * PI * y / 5.0).cos());
        let g = b.grad(&b.to_spectral(&f).unwrap());
        let p = b.leray_project(&g);
        assert!(p.c.iter().flatten().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn derivative_of_cosine() {
        let b = basis(16, 2.0);
        let k = 2.0 * PI * 3.0 / 2.0;
        let f = b.grid().sample(|x, _| (k * x).cos());
        let d = b.grid_derivative(&f, 0).unwrap();
        let want = b.grid().sample(|x, _| -k * (k * x).sin());
        for (a, w) in d.iter().zip(&want) {
            assert!((a - w).abs() < 1e-12);
        }
        let dy = b.grid_derivative(&f, 1).unwrap();
        assert!(dy.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn laplacian_symbol() {
        let b = basis(8, 3.0);
        let f = b.grid().sample(|x, y| (x * 0.7).sin() + (y * 1.3).cos() * x.cos());
        let s = b.to_spectral(&f).unwrap();
        let lap = b.div(&b.grad(&s));
        for i in 0..64 {
            let [a, c] = b.diff_wavevector(i);
            assert!((lap.c[i] + s.c[i] * (a * a + c * c)).norm() < 1e-12);
        }
    }

    #[test]
    fn project_scalar_all_modes_is_identity() {
        let b = basis(8, 1.0);
        let f = b.grid().sample(|x, y| (6.0 * x).sin() + y);
        let s = b.to_spectral(&f).unwrap();
        assert_eq!(b.project_scalar(&s, 64), s);
        let one = b.project_scalar(&s, 1);
        assert!(one.c[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn point_evaluation_interpolates() {
        let b = basis(16, 4.0);
        let f = b.grid().sample(|x, y| (x * 3.1).sin() * (y + 0.3).cos().exp());
        let c = b.forward(&f).unwrap();
        let ev = b.evaluator(&[&c], None);
        for i in [0, 17, 100, 255] {
            let v = ev.eval(b.grid().point(i))[0];
            assert!((v - f[i]).abs() < 1e-12);
        }
        // Band-limited fields are reproduced exactly off the grid.
        let g = |x: f64, y: f64| 0.3 + (PI * x / 2.0).cos() - 0.7 * (PI * (x + 2.0 * y)).sin();
        let gv = b.grid().sample(g);
        let gc = b.forward(&gv).unwrap();
        let ev = b.evaluator(&[&gc], Some(b.dealiased()));
        for p in [[0.123, 3.7], [2.2, 0.01], [3.99, 1.5]] {
            assert!((ev.eval(p)[0] - g(p[0], p[1])).abs() < 1e-13);
        }
    }
}

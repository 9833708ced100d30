//! Density transport ∂ₜρ + u·∇ρ = 0 by backward characteristics.
//!
//! The density is always represented through a label map A(x, t) (the foot of
//! the characteristic through x, traced back to t = 0) as ρ(x, t) = ρ₀(A(x, t))
//! with ρ₀ an analytic profile. Values therefore stay inside the range of ρ₀
//! by construction. The map is stored as the periodic displacement
//! d = x − A at the collocation points.

use rustfft::num_complex::Complex64;

use crate::basis::{Basis, PointEvaluator, VectorSpectral};
use crate::error::{Error, Result};

/// Analytic initial density profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityProfile {
    Constant { value: f64 },
    /// mean + amplitude · sin(k·x)
    Sinusoidal { mean: f64, amplitude: f64, k: [f64; 2] },
    /// background + amplitude · Σ_images exp(−|x − c − nL|² / (2·variance))
    Blob { background: f64, amplitude: f64, center: [f64; 2], variance: f64, lengths: [f64; 2] },
}

impl DensityProfile {
    /// Sinusoid with integer wavenumbers (m₁, m₂) on a box of the given size.
    pub fn sinusoidal(mean: f64, amplitude: f64, mode: [i64; 2], lengths: [f64; 2]) -> Self {
        let k = [0, 1].map(|i| 2.0 * std::f64::consts::PI * mode[i] as f64 / lengths[i]);
        DensityProfile::Sinusoidal { mean, amplitude, k }
    }

    /// Periodic Gaussian bump rising from `background` to `peak` at `center`.
    pub fn blob(background: f64, peak: f64, center: [f64; 2], radius: f64, lengths: [f64; 2]) -> Self {
        let mut b = DensityProfile::Blob { background, amplitude: 1.0, center, variance: radius * radius, lengths };
        let top = b.gaussian_sum(center);
        if let DensityProfile::Blob { amplitude, .. } = &mut b {
            *amplitude = (peak - background) / top;
        }
        b
    }

    fn gaussian_sum(&self, p: [f64; 2]) -> f64 {
        self.gaussian_sum_grad(p).0
    }

    fn gaussian_sum_grad(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let DensityProfile::Blob { center, variance, lengths, .. } = self else {
            return (0.0, [0.0; 2]);
        };
        let reach = |l: f64| ((80.0 * variance).sqrt() / l).ceil() as i64 + 1;
        let (rx, ry) = (reach(lengths[0]), reach(lengths[1]));
        let wrap = |x: f64, c: f64, l: f64| (x - c).rem_euclid(l);
        let (dx0, dy0) = (wrap(p[0], center[0], lengths[0]), wrap(p[1], center[1], lengths[1]));
        let mut s = 0.0;
        let mut g = [0.0; 2];
        for i in -rx..=rx {
            let dx = dx0 + i as f64 * lengths[0];
            for j in -ry..=ry {
                let dy = dy0 + j as f64 * lengths[1];
                let e = (-(dx * dx + dy * dy) / (2.0 * variance)).exp();
                s += e;
                g[0] -= e * dx / variance;
                g[1] -= e * dy / variance;
            }
        }
        (s, g)
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        match self {
            DensityProfile::Constant { value } => *value,
            DensityProfile::Sinusoidal { mean, amplitude, k } => mean + amplitude * (k[0] * p[0] + k[1] * p[1]).sin(),
            DensityProfile::Blob { background, amplitude, .. } => background + amplitude * self.gaussian_sum(p),
        }
    }

    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            DensityProfile::Constant { .. } => [0.0; 2],
            DensityProfile::Sinusoidal { amplitude, k, .. } => {
                let c = amplitude * (k[0] * p[0] + k[1] * p[1]).cos();
                [c * k[0], c * k[1]]
            }
            DensityProfile::Blob { amplitude, .. } => {
                let (_, g) = self.gaussian_sum_grad(p);
                [amplitude * g[0], amplitude * g[1]]
            }
        }
    }

    /// Exact (min, max) of the profile over the torus.
    pub fn range(&self) -> (f64, f64) {
        match self {
            DensityProfile::Constant { value } => (*value, *value),
            DensityProfile::Sinusoidal { mean, amplitude, k } => {
                if k[0] == 0.0 && k[1] == 0.0 {
                    (*mean, *mean)
                } else {
                    (mean - amplitude.abs(), mean + amplitude.abs())
                }
            }
            DensityProfile::Blob { center, lengths, .. } => {
                let top = self.value(*center);
                let far = self.value([center[0] + 0.5 * lengths[0], center[1] + 0.5 * lengths[1]]);
                (top.min(far), top.max(far))
            }
        }
    }

    /// Mean value over the torus.
    pub fn mean(&self) -> f64 {
        match self {
            DensityProfile::Constant { value } => *value,
            DensityProfile::Sinusoidal { mean, .. } => *mean,
            DensityProfile::Blob { background, amplitude, variance, lengths, .. } => {
                background + amplitude * 2.0 * std::f64::consts::PI * variance / (lengths[0] * lengths[1])
            }
        }
    }
}

/// Periodic convolution with a normalized Gaussian of standard deviation
/// `width`; closed form for every profile.
pub fn mollify_initial_density(rho0: &DensityProfile, width: f64) -> DensityProfile {
    let s2 = width * width;
    match rho0 {
        DensityProfile::Constant { .. } => rho0.clone(),
        DensityProfile::Sinusoidal { mean, amplitude, k } => DensityProfile::Sinusoidal {
            mean: *mean,
            amplitude: amplitude * (-(k[0] * k[0] + k[1] * k[1]) * s2 / 2.0).exp(),
            k: *k,
        },
        DensityProfile::Blob { background, amplitude, center, variance, lengths } => DensityProfile::Blob {
            background: *background,
            amplitude: amplitude * variance / (variance + s2),
            center: *center,
            variance: variance + s2,
            lengths: *lengths,
        },
    }
}

/// Time-indexed velocity samples with cubic Lagrange interpolation in time.
#[derive(Debug, Clone, Default)]
pub struct VelocityHistory {
    times: Vec<f64>,
    fields: Vec<VectorSpectral>,
}

impl VelocityHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// A history holding a single steady field (valid at all times).
    pub fn steady(u: VectorSpectral) -> Self {
        Self { times: vec![f64::NEG_INFINITY], fields: vec![u] }
    }

    pub fn push(&mut self, t: f64, u: VectorSpectral) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::Precondition(format!(
                    "history times must increase ({t} after {last})"
                )));
            }
        }
        self.times.push(t);
        self.fields.push(u);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn covers(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = (a.min(b), a.max(b));
        match (self.times.first(), self.times.last()) {
            (Some(&f), _) if f == f64::NEG_INFINITY => true,
            (Some(&f), Some(&l)) => {
                let tol = 1e-12 * (1.0 + l.abs().max(f.abs()));
                lo >= f - tol && hi <= l + tol
            }
            _ => false,
        }
    }

    /// Interpolation weights at time t over (at most) four neighbouring samples.
    fn weights(&self, t: f64) -> Vec<(usize, f64)> {
        let n = self.times.len();
        if n == 1 {
            return vec![(0, 1.0)];
        }
        let m = n.min(4);
        // First sample index j ≥ 0 such that t lies as central as possible.
        let upper = self.times.partition_point(|&s| s < t);
        let j0 = upper.saturating_sub(m / 2).min(n - m);
        let idx: Vec<usize> = (j0..j0 + m).collect();
        idx.iter()
            .map(|&i| {
                let mut w = 1.0;
                for &j in &idx {
                    if j != i {
                        w *= (t - self.times[j]) / (self.times[i] - self.times[j]);
                    }
                }
                (i, w)
            })
            .collect()
    }

    /// Interpolated velocity field at time t.
    pub fn field_at(&self, t: f64) -> Result<VectorSpectral> {
        if !self.covers(t, t) {
            return Err(Error::HistoryGap { from: t, to: t });
        }
        let ws = self.weights(t);
        if let Some(&(i, _)) = ws.iter().find(|(i, _)| self.times[*i] == t) {
            return Ok(self.fields[i].clone());
        }
        let w: Vec<f64> = ws.iter().map(|p| p.1).collect();
        let f: Vec<&VectorSpectral> = ws.iter().map(|p| &self.fields[p.0]).collect();
        Ok(VectorSpectral::combination(&w, &f))
    }
}

fn velocity_evaluator(basis: &Basis, u: &VectorSpectral) -> PointEvaluator {
    basis.evaluator(&[&u.c[0], &u.c[1]], Some(basis.dealiased()))
}

fn axpy_points(points: &[[f64; 2]], a: f64, v: &[Vec<f64>]) -> Vec<[f64; 2]> {
    points.iter().enumerate().map(|(j, p)| [p[0] + a * v[0][j], p[1] + a * v[1][j]]).collect()
}

/// Integrates dy/dτ = u(y, τ) from `t_from` to `t_to` (either direction) for
/// every point with classical RK4; positions are not wrapped.
pub fn trace_points(
    basis: &Basis,
    history: &VelocityHistory,
    points: &[[f64; 2]],
    t_from: f64,
    t_to: f64,
    dt_char: f64,
) -> Result<Vec<[f64; 2]>> {
    if !(dt_char > 0.0) {
        return Err(Error::InvalidParameter(format!("dt_char must be positive (got {dt_char})")));
    }
    if !history.covers(t_from, t_to) {
        return Err(Error::HistoryGap { from: t_to.min(t_from), to: t_to.max(t_from) });
    }
    let span = t_to - t_from;
    if span == 0.0 {
        return Ok(points.to_vec());
    }
    let n = (span.abs() / dt_char * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut y = points.to_vec();
    let mut ev_start = velocity_evaluator(basis, &history.field_at(t_from)?);
    for s in 0..n {
        let t0 = t_from + s as f64 * h;
        let t1 = if s + 1 == n { t_to } else { t0 + h };
        let ev_mid = velocity_evaluator(basis, &history.field_at(t0 + 0.5 * h)?);
        let ev_end = velocity_evaluator(basis, &history.field_at(t1)?);
        let k1 = ev_start.eval_many(&y);
        let k2 = ev_mid.eval_many(&axpy_points(&y, 0.5 * h, &k1));
        let k3 = ev_mid.eval_many(&axpy_points(&y, 0.5 * h, &k2));
        let k4 = ev_end.eval_many(&axpy_points(&y, h, &k3));
        for (j, p) in y.iter_mut().enumerate() {
            for d in 0..2 {
                p[d] += h / 6.0 * (k1[d][j] + 2.0 * k2[d][j] + 2.0 * k3[d][j] + k4[d][j]);
            }
        }
        ev_start = ev_end;
    }
    Ok(y)
}

fn wrap(basis: &Basis, p: [f64; 2]) -> [f64; 2] {
    let g = basis.grid();
    [p[0].rem_euclid(g.lx), p[1].rem_euclid(g.ly)]
}

/// Foot at time `t_to ≤ t_from` of the characteristic through `x` at
/// `t_from`, wrapped into the box.
pub fn trace_back(
    basis: &Basis,
    history: &VelocityHistory,
    x: [f64; 2],
    t_from: f64,
    t_to: f64,
    dt_char: f64,
) -> Result<[f64; 2]> {
    if t_to > t_from {
        return Err(Error::Precondition(format!("trace_back needs t_to <= t_from ({t_to} > {t_from})")));
    }
    Ok(wrap(basis, trace_points(basis, history, &[x], t_from, t_to, dt_char)?[0]))
}

/// Image of points under the time-one backward flow of a frozen field W,
/// dy/dτ = −W(y), using `substeps` RK4 steps.
pub fn backward_flow(ev: &PointEvaluator, points: &[[f64; 2]], substeps: usize) -> Vec<[f64; 2]> {
    let n = substeps.max(1);
    let h = -1.0 / n as f64;
    let mut y = points.to_vec();
    for _ in 0..n {
        let k1 = ev.eval_many(&y);
        let k2 = ev.eval_many(&axpy_points(&y, 0.5 * h, &k1));
        let k3 = ev.eval_many(&axpy_points(&y, 0.5 * h, &k2));
        let k4 = ev.eval_many(&axpy_points(&y, h, &k3));
        for (j, p) in y.iter_mut().enumerate() {
            for d in 0..2 {
                p[d] += h / 6.0 * (k1[d][j] + 2.0 * k2[d][j] + 2.0 * k3[d][j] + k4[d][j]);
            }
        }
    }
    y
}

/// Label map stored as nodal displacement d = x − A(x).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub disp: [Vec<f64>; 2],
}

impl LabelMap {
    pub fn identity(n: usize) -> Self {
        Self { disp: [vec![0.0; n], vec![0.0; n]] }
    }

    /// Trigonometric interpolant of the displacement.
    pub fn interpolant(&self, basis: &Basis) -> PointEvaluator {
        let c0 = basis.forward(&self.disp[0]).expect("label map size");
        let c1 = basis.forward(&self.disp[1]).expect("label map size");
        basis.evaluator(&[&c0, &c1], None)
    }

    /// The map x ↦ A(foot(x)) where `feet[j]` is the image of node j and `ev`
    /// the interpolant of `self`.
    pub fn compose(basis: &Basis, ev: &PointEvaluator, feet: &[[f64; 2]]) -> Self {
        let d = ev.eval_many(feet);
        let g = basis.grid();
        let mut disp = [vec![0.0; feet.len()], vec![0.0; feet.len()]];
        for (j, f) in feet.iter().enumerate() {
            let x = g.point(j);
            for a in 0..2 {
                disp[a][j] = x[a] - f[a] + d[a][j];
            }
        }
        Self { disp }
    }

    /// Labels A(x_j) at the nodes.
    pub fn labels(&self, basis: &Basis) -> Vec<[f64; 2]> {
        (0..basis.len())
            .map(|j| {
                let x = basis.grid().point(j);
                [x[0] - self.disp[0][j], x[1] - self.disp[1][j]]
            })
            .collect()
    }
}

/// Density on the grid together with the chain-rule gradient
/// (∇A)ᵀ ∇ρ₀(A) used by the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Vec<f64>,
    pub grad: [Vec<f64>; 2],
    pub bounds: (f64, f64),
    /// Largest amount by which ρ₀(A) left `bounds` before clamping.
    pub overshoot: f64,
    pub map: LabelMap,
}

impl DensityField {
    pub fn from_map(basis: &Basis, profile: &DensityProfile, bounds: (f64, f64), map: LabelMap) -> Self {
        let labels = map.labels(basis);
        let n = basis.len();
        let mut values = vec![0.0; n];
        let mut overshoot: f64 = 0.0;
        let mut g0 = [vec![0.0; n], vec![0.0; n]];
        for (j, a) in labels.iter().enumerate() {
            let raw = profile.value(*a);
            overshoot = overshoot.max(bounds.0 - raw).max(raw - bounds.1);
            values[j] = raw.clamp(bounds.0, bounds.1);
            let g = profile.gradient(*a);
            g0[0][j] = g[0];
            g0[1][j] = g[1];
        }
        let grad = if matches!(profile, DensityProfile::Constant { .. }) {
            [vec![0.0; n], vec![0.0; n]]
        } else {
            // ∂_b ρ = Σ_a (δ_ab − ∂_b d_a) ∂_a ρ₀(A)
            let c: Vec<Vec<Complex64>> = map.disp.iter().map(|d| basis.forward(d).expect("size")).collect();
            let mut grad = [g0[0].clone(), g0[1].clone()];
            for (a, ca) in c.iter().enumerate() {
                for (b, gb) in grad.iter_mut().enumerate() {
                    let dd = basis.inverse(&basis.derivative(ca, b)).expect("size");
                    for j in 0..n {
                        gb[j] -= dd[j] * g0[a][j];
                    }
                }
            }
            grad
        };
        Self { values, grad, bounds, overshoot: overshoot.max(0.0), map }
    }

    pub fn initial(basis: &Basis, profile: &DensityProfile, bounds: (f64, f64)) -> Self {
        Self::from_map(basis, profile, bounds, LabelMap::identity(basis.len()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// ρ(x, t) = ρ₀(foot of the characteristic through x at time t, traced to 0),
/// clamped to `bounds`.
pub fn advect_density(
    basis: &Basis,
    rho0: &DensityProfile,
    bounds: (f64, f64),
    history: &VelocityHistory,
    t: f64,
    dt_char: f64,
) -> Result<DensityField> {
    let nodes = basis.grid().points();
    let feet = trace_points(basis, history, &nodes, t, 0.0, dt_char)?;
    let disp = [0, 1].map(|a| nodes.iter().zip(&feet).map(|(x, f)| x[a] - f[a]).collect());
    Ok(DensityField::from_map(basis, rho0, bounds, LabelMap { disp }))
}

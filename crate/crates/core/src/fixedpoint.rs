//! The map Λ: (ũ, φ̃) ↦ (u, φ) that solves the system linearized about a
//! frozen velocity/phase pair, and Picard iteration of Λ to a fixed point on
//! a short horizon.

use std::fmt::Write as _;

use crate::basis::{ScalarSpectral, VectorSpectral};
use crate::dynamics::{step_by, step_linearized, FlowState, Model};
use crate::error::{Error, Result};

/// Largest admissible divergence defect of a frozen velocity sample.
const DIV_FREE_TOL: f64 = 1e-12;

/// Velocity and phase sampled at t₀ + k·dt, k = 0..=K.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenPair {
    pub t0: f64,
    pub dt: f64,
    pub u: Vec<VectorSpectral>,
    pub phi: Vec<ScalarSpectral>,
}

impl FrozenPair {
    pub fn new(t0: f64, dt: f64, u: Vec<VectorSpectral>, phi: Vec<ScalarSpectral>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling dt must be positive (got {dt})")));
        }
        if u.len() != phi.len() {
            return Err(Error::DimensionMismatch { expected: u.len(), got: phi.len() });
        }
        if u.len() < 2 {
            return Err(Error::SeriesTooShort { len: u.len(), min: 2 });
        }
        Ok(Self { t0, dt, u, phi })
    }

    /// Constant-in-time extension of a state over `n_steps` intervals.
    pub fn constant(state: &FlowState, dt: f64, n_steps: usize) -> Result<Self> {
        let n = n_steps + 1;
        Self::new(state.t, dt, vec![state.u.clone(); n], vec![state.phi.clone(); n])
    }

    /// Number of sampling intervals.
    pub fn n_steps(&self) -> usize {
        self.u.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Cubic Lagrange interpolation over the four nearest samples.
    pub fn fields_at(&self, t: f64) -> Result<(VectorSpectral, ScalarSpectral)> {
        let s = (t - self.t0) / self.dt;
        let k = self.n_steps() as f64;
        if !(s >= -1e-9 && s <= k + 1e-9) {
            return Err(Error::HistoryGap { from: t, to: t });
        }
        let r = s.round();
        if (s - r).abs() < 1e-12 {
            let i = r as usize;
            return Ok((self.u[i].clone(), self.phi[i].clone()));
        }
        let m = self.u.len().min(4);
        let j0 = (s.floor() as isize - (m as isize / 2 - 1)).clamp(0, (self.u.len() - m) as isize) as usize;
        let idx: Vec<usize> = (j0..j0 + m).collect();
        let w: Vec<f64> = idx
            .iter()
            .map(|&i| idx.iter().filter(|&&j| j != i).map(|&j| (s - j as f64) / (i as f64 - j as f64)).product())
            .collect();
        let us: Vec<&VectorSpectral> = idx.iter().map(|&i| &self.u[i]).collect();
        let u = VectorSpectral::combination(&w, &us);
        let mut phi = ScalarSpectral::zeros(self.phi[0].c.len());
        for (&i, &wi) in idx.iter().zip(&w) {
            phi = phi.add_scaled(wi, &self.phi[i]);
        }
        Ok((u, phi))
    }

    fn check(&self, model: &Model) -> Result<()> {
        for (k, u) in self.u.iter().enumerate() {
            let d = model.basis.divergence_defect(u);
            if d > DIV_FREE_TOL {
                return Err(Error::Precondition(format!(
                    "frozen velocity at sample {k} is not divergence-free (defect {d:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Solution of the linearized system about `frozen`, started from `init`,
/// at every sample time of `frozen`.
pub fn lambda_trajectory(model: &Model, init: &FlowState, frozen: &FrozenPair, substeps: usize) -> Result<Vec<FlowState>> {
    frozen.check(model)?;
    if (init.t - frozen.t0).abs() > 1e-12 * (1.0 + init.t.abs()) {
        return Err(Error::Precondition(format!(
            "frozen pair starts at {} but the initial state is at {}",
            frozen.t0, init.t
        )));
    }
    let fields = |t: f64| frozen.fields_at(t);
    let mut states = Vec::with_capacity(frozen.u.len());
    states.push(init.clone());
    for k in 0..frozen.n_steps() {
        let mut next = step_linearized(model, &states[k], frozen.dt, substeps, &fields)?;
        next.t = frozen.time(k + 1);
        states.push(next);
    }
    Ok(states)
}

/// Λ(ũ, φ̃): the linearized solution sampled on the cadence of `frozen`.
pub fn lambda_map(model: &Model, init: &FlowState, frozen: &FrozenPair, substeps: usize) -> Result<FrozenPair> {
    let states = lambda_trajectory(model, init, frozen, substeps)?;
    pair_of(frozen, &states)
}

fn pair_of(like: &FrozenPair, states: &[FlowState]) -> Result<FrozenPair> {
    FrozenPair::new(
        like.t0,
        like.dt,
        states.iter().map(|s| s.u.clone()).collect(),
        states.iter().map(|s| s.phi.clone()).collect(),
    )
}

/// sup over samples of ‖Δu‖_{L²} + ‖Δφ‖_{H¹}.
pub fn distance(model: &Model, a: &FrozenPair, b: &FrozenPair) -> Result<f64> {
    if a.u.len() != b.u.len() {
        return Err(Error::DimensionMismatch { expected: a.u.len(), got: b.u.len() });
    }
    let basis = &model.basis;
    Ok((0..a.u.len())
        .map(|k| {
            let du = a.u[k].add_scaled(-1.0, &b.u[k]);
            let dp = a.phi[k].add_scaled(-1.0, &b.phi[k]);
            basis.vector_norm_sq(&du).sqrt() + basis.h1_norm_sq(&dp).sqrt()
        })
        .fold(0.0, f64::max))
}

/// R^ε = ∫ F_ε(φ)(u − ũ)·∇ρ, the energy source of the linearized system.
pub fn residual_r_eps(model: &Model, state: &FlowState, u_tilde: &VectorSpectral) -> f64 {
    let basis = &model.basis;
    let diff = basis.vector_to_grid(&state.u.add_scaled(-1.0, u_tilde));
    let phi = basis.to_grid(&state.phi);
    let g = &state.rho.grad;
    let sum: f64 = (0..basis.len())
        .map(|j| model.potential.value(phi[j]) * (diff[0][j] * g[0][j] + diff[1][j] * g[1][j]))
        .sum();
    basis.grid().cell_area() * sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Horizon T̃.
    pub t_tilde: f64,
    /// Sampling (and stepping) interval; shortened so that it divides T̃.
    pub dt: f64,
    /// Stop once successive iterates are this close.
    pub tol: f64,
    /// Bound on sup |R^ε| reported as part of convergence.
    pub tol_r: f64,
    pub max_iter: usize,
    pub flow_substeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterates: usize,
    pub distances: Vec<f64>,
    pub r_eps_history: Vec<f64>,
    pub converged: bool,
}

impl PicardReport {
    pub const CSV_HEADER: &'static str = "iterate,distance,r_eps";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (i, (d, r)) in self.distances.iter().zip(&self.r_eps_history).enumerate() {
            writeln!(out, "{},{:.16e},{:.16e}", i + 1, d, r).unwrap();
        }
        out
    }

    /// Ratios of consecutive distances.
    pub fn ratios(&self) -> Vec<f64> {
        self.distances.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Iterates Λ from the constant extension of `init` until successive
/// iterates are within `tol`; non-convergence is reported, not an error.
pub fn picard(model: &Model, init: &FlowState, cfg: &PicardConfig) -> Result<(FrozenPair, PicardReport)> {
    if !(cfg.t_tilde > 0.0 && cfg.t_tilde.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_tilde must be positive (got {})", cfg.t_tilde)));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive (got {})", cfg.tol)));
    }
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive (got {})", cfg.dt)));
    }
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    let n = (cfg.t_tilde / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = cfg.t_tilde / n as f64;
    let mut current = FrozenPair::constant(init, dt, n)?;
    let mut report = PicardReport { iterates: 0, distances: vec![], r_eps_history: vec![], converged: false };
    while report.iterates < cfg.max_iter {
        let states = lambda_trajectory(model, init, &current, cfg.flow_substeps)?;
        let next = pair_of(&current, &states)?;
        let d = distance(model, &next, &current)?;
        let r = states
            .iter()
            .zip(&current.u)
            .map(|(s, ut)| residual_r_eps(model, s, ut).abs())
            .fold(0.0, f64::max);
        report.iterates += 1;
        report.distances.push(d);
        report.r_eps_history.push(r);
        current = next;
        if !d.is_finite() {
            break;
        }
        if d <= cfg.tol {
            report.converged = r <= cfg.tol_r;
            break;
        }
    }
    Ok((current, report))
}

/// sup over samples of ‖Δu‖_{L²} + ‖Δφ‖_{L²} between `pair` and the
/// self-consistent nonlinear trajectory from `init` on the same cadence.
pub fn nonlinear_mismatch(model: &Model, init: &FlowState, pair: &FrozenPair, substeps: usize) -> Result<f64> {
    let basis = &model.basis;
    let mut state = init.clone();
    let mut worst: f64 = 0.0;
    for k in 0..pair.u.len() {
        if k > 0 {
            state = step_by(model, &state, pair.dt, substeps)?;
        }
        let du = state.u.add_scaled(-1.0, &pair.u[k]);
        let dp = state.phi.add_scaled(-1.0, &pair.phi[k]);
        let dp2 = basis.spectral_inner(&dp.c, &dp.c);
        worst = worst.max(basis.vector_norm_sq(&du).sqrt() + dp2.sqrt());
    }
    Ok(worst)
}

//! Time integration: classical RK4 on the velocity and phase coefficients,
//! coupled to a commutator-free fourth-order Lie-group scheme for the density
//! label map. Each stage density is obtained by composing the step-initial
//! label map with backward flows of frozen stage velocities:
//!
//!   A₂ = Aₙ∘Ψ(½U₁),  A₃ = Aₙ∘Ψ(½U₂),  A₄ = Aₙ∘Ψ(½U₁)∘Ψ(U₃ − ½U₁),
//!   Aₙ₊₁ = Aₙ∘Ψ(¼U₁ + ⅙U₂ + ⅙U₃ − 1/12 U₄)∘Ψ(−1/12 U₁ + ⅙U₂ + ⅙U₃ + ¼U₄),
//!
//! where Uᵢ = dt·uᵢ and Ψ(W) is the time-one flow of −W. The density stays a
//! composition of the analytic initial profile with a map, so its bounds are
//! preserved exactly, and the scheme is fourth order for the coupled system.

use super::assembly::{linearized_rhs, rhs, solve_mu, Tendency};
use super::{FlowState, Model};
use crate::basis::{PointEvaluator, ScalarSpectral, VectorSpectral};
use crate::error::{Error, Result};
use crate::transport::{backward_flow, DensityField, LabelMap};

/// Largest step of classical RK4 along the negative real axis.
const RK4_REAL_STABILITY: f64 = 2.785;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the stability bound that `dt` may use, in (0, 1].
    pub stability_safety: f64,
    /// Skip the stability check.
    pub override_stability: bool,
    /// RK4 substeps per backward flow of a frozen stage velocity.
    pub flow_substeps: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, stability_safety: 0.9, override_stability: false, flow_substeps: 1 }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be >= 0 (got {})", self.t_end)));
        }
        if !(self.stability_safety > 0.0 && self.stability_safety <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "stability_safety must lie in (0, 1] (got {})",
                self.stability_safety
            )));
        }
        if !self.override_stability {
            let bound = stability_bound(model, self.stability_safety);
            if self.dt > bound {
                return Err(Error::Unstable { dt: self.dt, bound });
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (the last one may be shorter).
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Explicit step restriction from the stiff linear parts: the viscous
/// operator (rate ≤ ν* k²/ρ*) and the fourth-order Cahn–Hilliard operator
/// (rate ≤ D* k² (R k²/ρ* + sup|F″|)/ρ*), with k² the largest retained
/// squared wavenumber, scaled by RK4's real-axis stability limit.
pub fn stability_bound(model: &Model, safety: f64) -> f64 {
    let b = &model.basis;
    let k2 = |set: &crate::basis::ModeSet| set.order().iter().map(|&i| b.k_sq(i)).fold(0.0, f64::max);
    let (k2u, k2p) = (k2(&model.u_modes), k2(&model.phi_modes));
    let rho_min = model.rho_bounds.0;
    let visc = model.laws.nu_max() * k2u / rho_min;
    let ch = model.laws.mobility_max() * k2p * (model.big_r * k2p / rho_min + model.potential.max_abs_second()) / rho_min;
    let rate = visc + ch;
    if rate == 0.0 { f64::INFINITY } else { safety * RK4_REAL_STABILITY / rate }
}

fn evaluator(model: &Model, w: &VectorSpectral) -> PointEvaluator {
    model.basis.evaluator(&[&w.c[0], &w.c[1]], Some(&model.u_modes))
}

/// Pulls the label map back through a sequence of backward flows: node x is
/// sent through `flows[0]` first, then `flows[1]`, …, and the result is
/// evaluated with the interpolant of `map`.
fn pull_back(model: &Model, map_ev: &PointEvaluator, flows: &[&VectorSpectral], substeps: usize) -> LabelMap {
    let mut pts = model.basis.grid().points();
    for w in flows {
        pts = backward_flow(&evaluator(model, w), &pts, substeps);
    }
    LabelMap::compose(&model.basis, map_ev, &pts)
}

fn density(model: &Model, map: LabelMap) -> DensityField {
    DensityField::from_map(&model.basis, &model.rho0, model.rho_bounds, map)
}

fn stage(model: &Model, t: f64, u: VectorSpectral, phi: ScalarSpectral, rho: DensityField) -> Result<FlowState> {
    for (ok, field) in [(u.is_finite(), "u"), (phi.is_finite(), "phi"), (rho.is_finite(), "rho")] {
        if !ok {
            return Err(Error::BlowUp { t, field });
        }
    }
    let mu = solve_mu(model, &phi, &rho).map_err(|e| match e {
        Error::NonFinite(_) => Error::BlowUp { t, field: "mu" },
        other => other,
    })?;
    let s = FlowState { t, u, phi, rho, mu };
    if let Some(field) = s.non_finite_field() {
        return Err(Error::BlowUp { t, field });
    }
    Ok(s)
}

/// One step of length `dt` from `state`.
pub fn step_by(model: &Model, state: &FlowState, dt: f64, substeps: usize) -> Result<FlowState> {
    cf4_step(model, state, dt, substeps, None).map_err(|e| blow_up(e, state.t + dt))
}

/// A non-finite intermediate inside a step is reported as a blow-up.
fn blow_up(e: Error, t: f64) -> Error {
    match e {
        Error::NonFinite(_) => Error::BlowUp { t, field: "tendency" },
        other => other,
    }
}

/// Frozen velocity and phase as functions of time.
pub type FrozenFields<'a> = dyn Fn(f64) -> Result<(VectorSpectral, ScalarSpectral)> + 'a;

/// One step of length `dt` of the system linearized about frozen fields:
/// the density is carried by the frozen velocity and the tendencies come
/// from [`linearized_rhs`] evaluated at the stage times.
pub fn step_linearized(
    model: &Model,
    state: &FlowState,
    dt: f64,
    substeps: usize,
    frozen: &FrozenFields,
) -> Result<FlowState> {
    cf4_step(model, state, dt, substeps, Some(frozen)).map_err(|e| blow_up(e, state.t + dt))
}

fn cf4_step(
    model: &Model,
    state: &FlowState,
    dt: f64,
    substeps: usize,
    frozen: Option<&FrozenFields>,
) -> Result<FlowState> {
    let map_ev = state.rho.map.interpolant(&model.basis);
    let t = state.t;
    // Advecting velocity and tendency of a stage.
    let eval = |s: &FlowState| -> Result<(VectorSpectral, Tendency)> {
        match frozen {
            None => Ok((s.u.clone(), rhs(model, s)?)),
            Some(f) => {
                let (w, psi) = f(s.t)?;
                let k = linearized_rhs(model, s, &w, &psi)?;
                Ok((w, k))
            }
        }
    };

    let (u1, k1) = eval(state)?;

    let w = u1.scaled(0.5 * dt);
    let s2 = stage(
        model,
        t + 0.5 * dt,
        state.u.add_scaled(0.5 * dt, &k1.du),
        state.phi.add_scaled(0.5 * dt, &k1.dphi),
        density(model, pull_back(model, &map_ev, &[&w], substeps)),
    )?;
    let (u2, k2) = eval(&s2)?;

    let w = u2.scaled(0.5 * dt);
    let s3 = stage(
        model,
        t + 0.5 * dt,
        state.u.add_scaled(0.5 * dt, &k2.du),
        state.phi.add_scaled(0.5 * dt, &k2.dphi),
        density(model, pull_back(model, &map_ev, &[&w], substeps)),
    )?;
    let (u3, k3) = eval(&s3)?;

    let first = VectorSpectral::combination(&[dt, -0.5 * dt], &[&u3, &u1]);
    let second = u1.scaled(0.5 * dt);
    let s4 = stage(
        model,
        t + dt,
        state.u.add_scaled(dt, &k3.du),
        state.phi.add_scaled(dt, &k3.dphi),
        density(model, pull_back(model, &map_ev, &[&first, &second], substeps)),
    )?;
    let (u4, k4) = eval(&s4)?;

    let us = [&u1, &u2, &u3, &u4];
    let a = VectorSpectral::combination(&[dt / 4.0, dt / 6.0, dt / 6.0, -dt / 12.0], &us);
    let b = VectorSpectral::combination(&[-dt / 12.0, dt / 6.0, dt / 6.0, dt / 4.0], &us);
    let rho = density(model, pull_back(model, &map_ev, &[&b, &a], substeps));

    let du = VectorSpectral::combination(&[1.0, 2.0, 2.0, 1.0], &[&k1.du, &k2.du, &k3.du, &k4.du]);
    let u = state.u.add_scaled(dt / 6.0, &du);
    let dphi = k1.dphi.add_scaled(2.0, &k2.dphi).add_scaled(2.0, &k3.dphi).add_scaled(1.0, &k4.dphi);
    let phi = state.phi.add_scaled(dt / 6.0, &dphi);
    stage(model, t + dt, u, phi, rho)
}

/// One step of `cfg.dt` (checked against the stability bound).
pub fn step(model: &Model, state: &FlowState, cfg: &StepperConfig) -> Result<FlowState> {
    cfg.validate(model)?;
    step_by(model, state, cfg.dt, cfg.flow_substeps)
}

/// Receives every state of a run, with its step index.
pub trait Sink {
    fn observe(&mut self, model: &Model, state: &FlowState, step: usize) -> Result<()>;

    /// Called once after the last state (also after a failed step).
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_state: FlowState,
}

/// Integrates from `init` to `cfg.t_end`, feeding every state to the sinks.
pub fn run(model: &Model, init: FlowState, cfg: &StepperConfig, sinks: &mut [&mut dyn Sink]) -> Result<RunSummary> {
    cfg.validate(model)?;
    let n = cfg.n_steps();
    let mut state = init;
    let t0 = state.t;
    let mut outcome = Ok(());
    for s in sinks.iter_mut() {
        s.observe(model, &state, 0)?;
    }
    for k in 0..n {
        let target = if k + 1 == n { t0 + cfg.t_end } else { t0 + (k + 1) as f64 * cfg.dt };
        let next = step_by(model, &state, target - state.t, cfg.flow_substeps).map(|mut s| {
            s.t = target;
            s
        });
        match next {
            Ok(s) => state = s,
            Err(e) => {
                outcome = Err(e);
                break;
            }
        }
        for s in sinks.iter_mut() {
            s.observe(model, &state, k + 1)?;
        }
    }
    for s in sinks.iter_mut() {
        s.finish()?;
    }
    outcome?;
    Ok(RunSummary { steps: n, final_state: state })
}

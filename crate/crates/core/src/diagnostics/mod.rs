//! Energy and dissipation accounting, conserved quantities, time-regularity
//! (Besov) estimates and the Bihari bound.

mod besov;
mod bihari;

pub use besov::{besov_seminorm, BesovExponent, BesovNorm};
pub use bihari::{bihari_check, bihari_horizon, BihariBound, BihariCheck};

use crate::basis::ScalarSpectral;
use crate::dynamics::{FlowState, Model};
use crate::error::{Error, Result};

/// Energy components, dissipation rates and conserved quantities of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// ∫ ½ρ|u|²
    pub e_kin: f64,
    /// ∫ ½Γ²(∇φ)
    pub e_surf: f64,
    /// ∫ ρF_ε(φ)
    pub e_pot: f64,
    pub e_total: f64,
    /// ∫ 2ν(φ)|𝔻u|²
    pub d_visc: f64,
    /// ∫ D(φ)|∇μ|²
    pub d_diff: f64,
    pub mass_rho: f64,
    pub mass_rhophi: f64,
    /// ‖F_ε′(φ)‖_{L⁶}
    pub f_eps_prime_l6: f64,
}

impl EnergyReport {
    pub fn dissipation(&self) -> f64 {
        self.d_visc + self.d_diff
    }
}

/// Energy report of a self-consistent state.
pub fn energy_report(model: &Model, state: &FlowState) -> EnergyReport {
    energy_report_with(model, state, &state.phi)
}

/// Energy report whose dissipation coefficients ν, D are evaluated at
/// `phi_coeff` (the frozen phase of a linearized system).
pub fn energy_report_with(model: &Model, state: &FlowState, phi_coeff: &ScalarSpectral) -> EnergyReport {
    let basis = &model.basis;
    let n = basis.len();
    let w = basis.grid().cell_area();
    let rho = &state.rho.values;
    let u = basis.vector_to_grid(&state.u);
    let phi = basis.to_grid(&state.phi);
    let psi = if std::ptr::eq(phi_coeff, &state.phi) { phi.clone() } else { basis.to_grid(phi_coeff) };
    let du: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|a| (0..2).map(|b| basis.inverse(&basis.derivative(&state.u.c[a], b)).unwrap()).collect())
        .collect();
    let dmu: Vec<Vec<f64>> = (0..2).map(|b| basis.inverse(&basis.derivative(&state.mu.c, b)).unwrap()).collect();

    let (mut e_kin, mut e_pot, mut d_visc, mut d_diff) = (0.0, 0.0, 0.0, 0.0);
    let (mut m_rho, mut m_rhophi, mut l6) = (0.0, 0.0, 0.0);
    for j in 0..n {
        e_kin += 0.5 * rho[j] * (u[0][j] * u[0][j] + u[1][j] * u[1][j]);
        e_pot += rho[j] * model.potential.value(phi[j]);
        let mut dd = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let s = 0.5 * (du[a][b][j] + du[b][a][j]);
                dd += s * s;
            }
        }
        d_visc += 2.0 * model.laws.nu(psi[j]) * dd;
        d_diff += model.laws.mobility(psi[j]) * (dmu[0][j] * dmu[0][j] + dmu[1][j] * dmu[1][j]);
        m_rho += rho[j];
        m_rhophi += rho[j] * phi[j];
        l6 += model.potential.derivative(phi[j]).powi(6);
    }
    let e_surf = 0.5
        * basis.grid().area()
        * state.phi.c.iter().enumerate().map(|(i, z)| model.anisotropy_symbol(i) * z.norm_sqr()).sum::<f64>();
    let (e_kin, e_pot) = (w * e_kin, w * e_pot);
    EnergyReport {
        t: state.t,
        e_kin,
        e_surf,
        e_pot,
        e_total: e_kin + e_surf + e_pot,
        d_visc: w * d_visc,
        d_diff: w * d_diff,
        mass_rho: w * m_rho,
        mass_rhophi: w * m_rhophi,
        f_eps_prime_l6: (w * l6).powf(1.0 / 6.0),
    }
}

/// Per-interval energy-law residuals and their maximum magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyResiduals {
    pub values: Vec<f64>,
    pub max_abs: f64,
}

/// residual_n = E(t_{n+1}) − E(t_n) + dt·½(D_n + D_{n+1}) with D the total
/// dissipation rate.
pub fn energy_law_residual(reports: &[EnergyReport], dt: f64) -> Result<EnergyResiduals> {
    energy_law_residual_with_source(reports, None, dt)
}

/// As [`energy_law_residual`], minus the trapezoidal integral of an energy
/// source (the remainder of a linearized system) when given.
pub fn energy_law_residual_with_source(
    reports: &[EnergyReport],
    source: Option<&[f64]>,
    dt: f64,
) -> Result<EnergyResiduals> {
    if reports.len() < 2 {
        return Err(Error::SeriesTooShort { len: reports.len(), min: 2 });
    }
    if let Some(s) = source {
        if s.len() != reports.len() {
            return Err(Error::DimensionMismatch { expected: reports.len(), got: s.len() });
        }
    }
    let values: Vec<f64> = reports
        .windows(2)
        .enumerate()
        .map(|(n, w)| {
            let mut r = w[1].e_total - w[0].e_total + 0.5 * dt * (w[0].dissipation() + w[1].dissipation());
            if let Some(s) = source {
                r -= 0.5 * dt * (s[n] + s[n + 1]);
            }
            r
        })
        .collect();
    let max_abs = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(EnergyResiduals { values, max_abs })
}

/// Unregularized initial energy ∫ ½ρ|u|² + ½Γ²(∇φ) + ρF(φ); `None` when φ
/// leaves (−1, 1) at some node.
pub fn unregularized_energy(model: &Model, state: &FlowState) -> Option<f64> {
    let rep = energy_report(model, state);
    let phi = model.basis.to_grid(&state.phi);
    let mut pot = 0.0;
    for (s, r) in phi.iter().zip(&state.rho.values) {
        pot += r * model.potential.unregularized(*s)?;
    }
    Some(rep.e_kin + rep.e_surf + model.basis.grid().cell_area() * pot)
}

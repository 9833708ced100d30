//! Pseudo-spectral assembly of the Galerkin right-hand sides.
//!
//! With Gρ the chain-rule density gradient, w the advecting velocity and ψ the
//! phase field entering transport, capillarity and the coefficients, the
//! momentum forcing is
//!
//!   g = −½ρ(w·∇)u − ½∇·(ρ w ⊗ u) + ½(w·Gρ)u + ∇·(2ν(ψ)𝔻u) + ρμ∇ψ + F(φ)Gρ
//!
//! (the advection written in skew-symmetric form, the capillary force as
//! ρμ∇ψ − ρ∇F(φ) up to a gradient), and the phase forcing is
//!
//!   r = −ρ u·∇ψ + ∇·(D(ψ)∇μ).
//!
//! The tendencies solve P_V(ρ ∂ₜu) = P_V g and P_S(ρ ∂ₜφ) = P_S r. Divergence
//! terms are formed in Fourier space, so discrete integration by parts
//! against retained modes is exact and the semi-discrete energy balance
//! holds without quadrature defect.

use rustfft::num_complex::Complex64;

use super::solver::{solve_weighted, Space};
use super::{FlowState, Model};
use crate::basis::{ScalarSpectral, VectorSpectral};
use crate::error::{Error, Result};
use crate::transport::DensityField;

/// Time derivatives of the velocity and phase coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub du: VectorSpectral,
    pub dphi: ScalarSpectral,
}

fn i_times(z: Complex64, k: f64) -> Complex64 {
    Complex64::new(-z.im * k, z.re * k)
}

/// Chemical potential: P_S(ρμ) = P_S(−∇·(M∇φ) + ρF′(φ)).
pub fn solve_mu(model: &Model, phi: &ScalarSpectral, rho: &DensityField) -> Result<ScalarSpectral> {
    let basis = &model.basis;
    let phi_g = basis.to_grid(phi);
    let fp: Vec<f64> = phi_g.iter().zip(&rho.values).map(|(&s, r)| r * model.potential.derivative(s)).collect();
    if fp.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("phase field entering the chemical potential".into()));
    }
    let mut b = basis.forward(&fp)?;
    for (i, z) in b.iter_mut().enumerate() {
        *z += phi.c[i] * model.anisotropy_symbol(i);
    }
    let mut sol = solve_weighted(basis, Space::Scalar(&model.phi_modes), &rho.values, vec![b])?;
    Ok(ScalarSpectral { c: sol.swap_remove(0) })
}

/// Right-hand side of the self-consistent system (uses `state.mu`).
pub fn rhs(model: &Model, state: &FlowState) -> Result<Tendency> {
    assemble(model, state, &state.u, &state.phi)
}

/// Right-hand side of the system linearized about a frozen velocity `u_tilde`
/// and phase `phi_tilde` (uses `state.mu`).
pub fn linearized_rhs(
    model: &Model,
    state: &FlowState,
    u_tilde: &VectorSpectral,
    phi_tilde: &ScalarSpectral,
) -> Result<Tendency> {
    assemble(model, state, u_tilde, phi_tilde)
}

fn assemble(model: &Model, state: &FlowState, w: &VectorSpectral, psi: &ScalarSpectral) -> Result<Tendency> {
    let basis = &model.basis;
    let n = basis.len();
    let rho = &state.rho.values;
    let grho = &state.rho.grad;

    let u_g = basis.vector_to_grid(&state.u);
    let w_g = if std::ptr::eq(w, &state.u) { u_g.clone() } else { basis.vector_to_grid(w) };
    // du[a][b] = ∂_b u_a
    let du: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|a| (0..2).map(|b| basis.inverse(&basis.derivative(&state.u.c[a], b)).unwrap()).collect())
        .collect();
    let psi_g = basis.to_grid(psi);
    let dpsi: Vec<Vec<f64>> = (0..2).map(|b| basis.inverse(&basis.derivative(&psi.c, b)).unwrap()).collect();
    let phi_g = if std::ptr::eq(psi, &state.phi) { psi_g.clone() } else { basis.to_grid(&state.phi) };
    let mu_g = basis.to_grid(&state.mu);
    let dmu: Vec<Vec<f64>> = (0..2).map(|b| basis.inverse(&basis.derivative(&state.mu.c, b)).unwrap()).collect();

    let nu: Vec<f64> = psi_g.iter().map(|&s| model.laws.nu(s)).collect();
    let mob: Vec<f64> = psi_g.iter().map(|&s| model.laws.mobility(s)).collect();
    let fval: Vec<f64> = phi_g.iter().map(|&s| model.potential.value(s)).collect();

    // Momentum forcing.
    let mut g = [Vec::new(), Vec::new()];
    for a in 0..2 {
        let mut point = vec![0.0; n];
        for j in 0..n {
            let adv = w_g[0][j] * du[a][0][j] + w_g[1][j] * du[a][1][j];
            let wg = w_g[0][j] * grho[0][j] + w_g[1][j] * grho[1][j];
            point[j] = -0.5 * rho[j] * adv
                + 0.5 * wg * u_g[a][j]
                + rho[j] * mu_g[j] * dpsi[a][j]
                + fval[j] * grho[a][j];
        }
        let mut ga = basis.forward(&point)?;
        for b in 0..2 {
            let flux: Vec<f64> = (0..n)
                .map(|j| -0.5 * rho[j] * w_g[b][j] * u_g[a][j] + nu[j] * (du[a][b][j] + du[b][a][j]))
                .collect();
            let fh = basis.forward(&flux)?;
            for (i, z) in ga.iter_mut().enumerate() {
                *z += i_times(fh[i], basis.diff_wavevector(i)[b]);
            }
        }
        g[a] = ga;
    }
    let [g0, g1] = g;
    let mut du_dt = solve_weighted(basis, Space::Solenoidal(&model.u_modes), rho, vec![g0, g1])?;

    // Phase forcing.
    let point: Vec<f64> = (0..n).map(|j| -rho[j] * (u_g[0][j] * dpsi[0][j] + u_g[1][j] * dpsi[1][j])).collect();
    let mut r = basis.forward(&point)?;
    for b in 0..2 {
        let flux: Vec<f64> = (0..n).map(|j| mob[j] * dmu[b][j]).collect();
        let fh = basis.forward(&flux)?;
        for (i, z) in r.iter_mut().enumerate() {
            *z += i_times(fh[i], basis.diff_wavevector(i)[b]);
        }
    }
    let mut dphi = solve_weighted(basis, Space::Scalar(&model.phi_modes), rho, vec![r])?;

    let d1 = du_dt.pop().unwrap();
    let d0 = du_dt.pop().unwrap();
    Ok(Tendency { du: VectorSpectral { c: [d0, d1] }, dphi: ScalarSpectral { c: dphi.pop().unwrap() } })
}

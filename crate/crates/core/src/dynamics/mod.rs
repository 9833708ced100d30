//! Galerkin ODE system for (u, φ, μ) with variable density, and its time
//! integration.

mod assembly;
mod solver;
mod stepper;

pub use assembly::{linearized_rhs, rhs, solve_mu, Tendency};
pub use solver::{solve_weighted, Space};
pub use stepper::{
    run, stability_bound, step, step_by, step_linearized, FrozenFields, RunSummary, Sink, StepperConfig,
};

use crate::anisotropy::AnisotropyModel;
use crate::basis::{Basis, ModeSet, ScalarSpectral, VectorSpectral};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::transport::{mollify_initial_density, DensityField, DensityProfile};

/// Phase-dependent viscosity ν(s) and mobility D(s): affine between the
/// values at s = −1 and s = +1, clamped to the endpoint range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialLaws {
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub d_minus: f64,
    pub d_plus: f64,
}

fn affine_clamped(lo: f64, hi: f64, s: f64) -> f64 {
    if s <= -1.0 {
        lo
    } else if s >= 1.0 {
        hi
    } else {
        (lo + 0.5 * (hi - lo) * (1.0 + s)).clamp(lo.min(hi), lo.max(hi))
    }
}

impl MaterialLaws {
    pub fn constant(nu: f64, d: f64) -> Self {
        Self { nu_minus: nu, nu_plus: nu, d_minus: d, d_plus: d }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu_minus", self.nu_minus),
            ("nu_plus", self.nu_plus),
            ("d_minus", self.d_minus),
            ("d_plus", self.d_plus),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive (got {v})")));
            }
        }
        Ok(())
    }

    pub fn nu(&self, s: f64) -> f64 {
        affine_clamped(self.nu_minus, self.nu_plus, s)
    }

    pub fn mobility(&self, s: f64) -> f64 {
        affine_clamped(self.d_minus, self.d_plus, s)
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_minus.max(self.nu_plus)
    }

    pub fn mobility_max(&self) -> f64 {
        self.d_minus.max(self.d_plus)
    }
}

/// A fully specified discrete model: basis, retained modes, material laws,
/// surface-energy law, bulk potential and initial density profile.
#[derive(Debug)]
pub struct Model {
    pub basis: Basis,
    pub u_modes: ModeSet,
    pub phi_modes: ModeSet,
    pub laws: MaterialLaws,
    pub anisotropy: AnisotropyModel,
    /// Entries of the 2×2 anisotropy matrix.
    pub(crate) m: [[f64; 2]; 2],
    /// Upper spectral bound R of the anisotropy.
    pub big_r: f64,
    pub potential: Potential,
    /// Initial density profile (already mollified).
    pub rho0: DensityProfile,
    pub rho_bounds: (f64, f64),
}

/// Inputs of [`Model::new`].
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub n_modes_u: Option<usize>,
    pub n_modes_phi: Option<usize>,
    pub laws: MaterialLaws,
    pub anisotropy: AnisotropyModel,
    pub potential: Potential,
    pub rho0: DensityProfile,
    pub rho_bounds: (f64, f64),
    pub mollify_width: f64,
}

impl Model {
    pub fn new(basis: Basis, spec: ModelSpec) -> Result<Self> {
        spec.laws.validate()?;
        let mat = spec.anisotropy.matrix().ok_or_else(|| {
            Error::InvalidParameter("the dynamics need a quadratic-form anisotropy".into())
        })?;
        if spec.anisotropy.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: spec.anisotropy.dim() });
        }
        let report = spec.anisotropy.check_hypotheses(100);
        if !report.all_hold() {
            return Err(Error::InvalidParameter(format!(
                "anisotropy violates the structural hypotheses (computed r = {:.6})",
                report.r
            )));
        }
        if let Potential::Logarithmic(p) = &spec.potential {
            crate::potential::PotentialSpec::new(p.lambda1, p.lambda2, p.eps)?;
        }
        let (lo, hi) = spec.rho_bounds;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "density bounds need 0 < rho_min <= rho_max (got {lo}, {hi})"
            )));
        }
        if !(spec.mollify_width >= 0.0) {
            return Err(Error::InvalidParameter("mollification width must be >= 0".into()));
        }
        let rho0 = mollify_initial_density(&spec.rho0, spec.mollify_width);
        let (plo, phi) = rho0.range();
        if plo < lo - 1e-14 * lo || phi > hi + 1e-14 * hi {
            return Err(Error::InvalidParameter(format!(
                "density profile range [{plo}, {phi}] exceeds bounds [{lo}, {hi}]"
            )));
        }
        let all = basis.dealiased().len();
        let u_modes = basis.shell_modes(spec.n_modes_u.unwrap_or(all));
        let phi_modes = basis.shell_modes(spec.n_modes_phi.unwrap_or(all));
        let m = [[mat[(0, 0)], mat[(0, 1)]], [mat[(1, 0)], mat[(1, 1)]]];
        Ok(Self {
            basis,
            u_modes,
            phi_modes,
            laws: spec.laws,
            anisotropy: spec.anisotropy,
            m,
            big_r: report.big_r,
            potential: spec.potential,
            rho0,
            rho_bounds: spec.rho_bounds,
        })
    }

    /// kᵀMk for layout index `idx`.
    pub fn anisotropy_symbol(&self, idx: usize) -> f64 {
        let [a, b] = self.basis.diff_wavevector(idx);
        self.m[0][0] * a * a + (self.m[0][1] + self.m[1][0]) * a * b + self.m[1][1] * b * b
    }

    /// Galerkin projection of a grid velocity field onto the retained
    /// divergence-free modes.
    pub fn project_velocity(&self, u: [&[f64]; 2]) -> Result<VectorSpectral> {
        self.basis.project_vector(u, &self.u_modes)
    }

    /// Galerkin projection of a grid scalar onto the retained modes.
    pub fn project_phase(&self, phi: &[f64]) -> Result<ScalarSpectral> {
        self.basis.project(phi, &self.phi_modes)
    }

    pub fn initial_density(&self) -> DensityField {
        DensityField::initial(&self.basis, &self.rho0, self.rho_bounds)
    }

    /// Initial state from grid data: velocity and phase are projected onto
    /// the retained modes, the density sampled from the profile and μ solved.
    pub fn initial_state(&self, u0: [&[f64]; 2], phi0: &[f64]) -> Result<FlowState> {
        let u = self.project_velocity(u0)?;
        let phi = self.project_phase(phi0)?;
        let rho = self.initial_density();
        let mu = solve_mu(self, &phi, &rho)?;
        Ok(FlowState { t: 0.0, u, phi, rho, mu })
    }
}

/// Time, velocity and phase coefficients, density and chemical potential.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub u: VectorSpectral,
    pub phi: ScalarSpectral,
    pub rho: DensityField,
    pub mu: ScalarSpectral,
}

impl FlowState {
    /// First non-finite field, if any.
    pub fn non_finite_field(&self) -> Option<&'static str> {
        if !self.u.is_finite() {
            Some("u")
        } else if !self.phi.is_finite() {
            Some("phi")
        } else if !self.rho.is_finite() {
            Some("rho")
        } else if !self.mu.is_finite() {
            Some("mu")
        } else {
            None
        }
    }
}

//! Run configuration: a sectioned TOML file with fixed key names.
//!
//! Every value is validated when the file is parsed; errors name the key, the
//! violated constraint and, when it can be located, the line.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::anisotropy::{taylor_cahn_matrix_in, AnisotropyModel};
use crate::basis::{Basis, TorusGrid};
use crate::dynamics::{FlowState, MaterialLaws, Model, ModelSpec, StepperConfig};
use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialSpec};
use crate::transport::DensityProfile;

/// The demonstration problem shipped with the library.
pub const DEMO_CONFIG: &str = include_str!("../configs/demo.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub anisotropy: AnisotropyConfig,
    pub potential: PotentialConfig,
    pub material: MaterialConfig,
    pub density: DensityConfig,
    #[serde(default)]
    pub phase: PhaseConfig,
    #[serde(default)]
    pub velocity: VelocityConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub n_modes_u: Option<usize>,
    pub n_modes_phi: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropyConfig {
    pub matrix: Option<Vec<Vec<f64>>>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default = "default_potential_kind")]
    pub kind: String,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub eps: Option<f64>,
    pub scale: Option<f64>,
}

fn default_potential_kind() -> String {
    "logarithmic".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub d_minus: f64,
    pub d_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub profile: String,
    pub rho_min: f64,
    pub rho_max: f64,
    #[serde(default)]
    pub mollify_width: f64,
    pub value: Option<f64>,
    pub mean: Option<f64>,
    pub amplitude: Option<f64>,
    pub mode: Option<[i64; 2]>,
    pub background: Option<f64>,
    pub peak: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    #[serde(default = "default_phase_profile")]
    pub profile: String,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub modes: Vec<[i64; 2]>,
    #[serde(default)]
    pub phases: Vec<f64>,
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default = "default_max_mode")]
    pub noise_max_mode: i64,
    #[serde(default)]
    pub seed: u64,
}

fn default_phase_profile() -> String {
    "constant".into()
}

fn default_max_mode() -> i64 {
    4
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            profile: default_phase_profile(),
            mean: 0.0,
            amplitudes: vec![],
            modes: vec![],
            phases: vec![],
            noise_amplitude: 0.0,
            noise_max_mode: default_max_mode(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityConfig {
    #[serde(default = "default_velocity_profile")]
    pub profile: String,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_velocity_mode")]
    pub mode: [i64; 2],
    #[serde(default = "default_max_mode")]
    pub max_mode: i64,
    #[serde(default)]
    pub seed: u64,
}

fn default_velocity_profile() -> String {
    "zero".into()
}

fn default_velocity_mode() -> [i64; 2] {
    [1, 1]
}

impl Default for VelocityConfig {
    fn default() -> Self {
        Self {
            profile: default_velocity_profile(),
            amplitude: 0.0,
            mode: default_velocity_mode(),
            max_mode: default_max_mode(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub stability_safety: f64,
    #[serde(default)]
    pub override_stability: bool,
    #[serde(default = "default_substeps")]
    pub flow_substeps: usize,
}

fn default_safety() -> f64 {
    0.9
}

fn default_substeps() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    /// Diagnostics row every `cadence` steps.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Snapshot every `snapshot_cadence` steps (0: final state only).
    #[serde(default)]
    pub snapshot_cadence: usize,
}

fn default_directory() -> String {
    "output".into()
}

fn default_cadence() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), cadence: default_cadence(), snapshot_cadence: 0 }
    }
}

/// Line (1-based) of `key = …` inside `[section]`, or of the section header.
fn locate(text: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(k) = key {
                let lhs = line.split('=').next().unwrap_or("").trim();
                if line.contains('=') && lhs == k {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    fn fail<T>(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Result<T> {
        Err(Error::Config {
            line: locate(self.text, section, Some(key)),
            msg: format!("[{section}] {key}: {msg}"),
        })
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<()> {
        if v.is_finite() && v > 0.0 { Ok(()) } else { self.fail(section, key, format!("must be > 0 (got {v})")) }
    }

    fn required<T: Copy>(&self, section: &str, key: &str, v: Option<T>, why: &str) -> Result<T> {
        match v {
            Some(x) => Ok(x),
            None => self.fail(section, key, format!("required {why}")),
        }
    }

    fn unused<T>(&self, section: &str, key: &str, v: &Option<T>, why: &str) -> Result<()> {
        if v.is_some() { self.fail(section, key, format!("not used {why}")) } else { Ok(()) }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Config { line, msg: e.message().to_string() }
    })?;
    cfg.validate_with(text)?;
    Ok(cfg)
}

impl RunConfig {
    pub fn demo() -> Self {
        parse_config(DEMO_CONFIG).expect("bundled demo config is valid")
    }

    /// Re-validates after programmatic edits (no line information).
    pub fn validate(&self) -> Result<()> {
        self.validate_with("")
    }

    fn validate_with(&self, text: &str) -> Result<()> {
        let v = Validator { text };
        let d = &self.domain;
        v.positive("domain", "lx", d.lx)?;
        v.positive("domain", "ly", d.ly)?;
        for (key, n) in [("nx", d.nx), ("ny", d.ny)] {
            if n < 8 || !n.is_power_of_two() {
                return v.fail("domain", key, format!("must be a power of two >= 8 (got {n})"));
            }
        }
        for (key, n) in [("n_modes_u", d.n_modes_u), ("n_modes_phi", d.n_modes_phi)] {
            if n == Some(0) {
                return v.fail("domain", key, "must be >= 1");
            }
        }

        self.anisotropy_model_checked(&v)?;
        self.potential_checked(&v)?;

        let m = &self.material;
        for (key, x) in [("nu_minus", m.nu_minus), ("nu_plus", m.nu_plus), ("d_minus", m.d_minus), ("d_plus", m.d_plus)] {
            v.positive("material", key, x)?;
        }

        self.density_checked(&v)?;

        let p = &self.phase;
        match p.profile.as_str() {
            "constant" => {}
            "modes" => {
                if p.amplitudes.len() != p.modes.len() {
                    return v.fail("phase", "amplitudes", "needs one entry per mode");
                }
                if !p.phases.is_empty() && p.phases.len() != p.modes.len() {
                    return v.fail("phase", "phases", "needs one entry per mode (or none)");
                }
            }
            other => return v.fail("phase", "profile", format!("unknown profile {other:?} (constant | modes)")),
        }
        if !(p.noise_amplitude >= 0.0) {
            return v.fail("phase", "noise_amplitude", "must be >= 0");
        }
        if p.noise_max_mode < 1 {
            return v.fail("phase", "noise_max_mode", "must be >= 1");
        }

        let u = &self.velocity;
        match u.profile.as_str() {
            "zero" | "taylor_green" | "shear" | "random" => {}
            other => {
                return v.fail("velocity", "profile", format!("unknown profile {other:?} (zero | taylor_green | shear | random)"))
            }
        }
        if u.profile == "shear" && u.mode[1] == 0 {
            return v.fail("velocity", "mode", "shear flow needs a nonzero second component");
        }
        if u.profile == "taylor_green" && (u.mode[0] == 0 || u.mode[1] == 0) {
            return v.fail("velocity", "mode", "Taylor-Green flow needs nonzero components");
        }
        if u.max_mode < 1 {
            return v.fail("velocity", "max_mode", "must be >= 1");
        }

        let t = &self.time;
        v.positive("time", "dt", t.dt)?;
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            return v.fail("time", "t_end", format!("must be >= 0 (got {})", t.t_end));
        }
        if !(t.stability_safety > 0.0 && t.stability_safety <= 1.0) {
            return v.fail("time", "stability_safety", format!("must lie in (0, 1] (got {})", t.stability_safety));
        }
        if t.flow_substeps == 0 {
            return v.fail("time", "flow_substeps", "must be >= 1");
        }
        if self.output.cadence == 0 {
            return v.fail("output", "cadence", "must be >= 1");
        }
        if !t.override_stability {
            let model = self.model()?;
            let bound = crate::dynamics::stability_bound(&model, t.stability_safety);
            if t.dt > bound {
                return v.fail("time", "dt", format!("exceeds the stability bound {bound:.6e} (set override_stability = true to force)"));
            }
        }
        Ok(())
    }

    fn anisotropy_model_checked(&self, v: &Validator) -> Result<AnisotropyModel> {
        let a = &self.anisotropy;
        let model = match (&a.matrix, a.beta) {
            (Some(_), Some(_)) => return v.fail("anisotropy", "beta", "give either matrix or beta, not both"),
            (None, None) => return v.fail("anisotropy", "matrix", "required (or beta)"),
            (Some(rows), None) => {
                if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                    return v.fail("anisotropy", "matrix", "must be a 2x2 matrix");
                }
                match AnisotropyModel::from_rows(rows) {
                    Ok(m) => m,
                    Err(e) => return v.fail("anisotropy", "matrix", e),
                }
            }
            (None, Some(beta)) => taylor_cahn_matrix_in(beta, 2),
        };
        let rep = model.check_hypotheses(100);
        if !rep.all_hold() {
            let key = if a.matrix.is_some() { "matrix" } else { "beta" };
            return v.fail(
                "anisotropy",
                key,
                format!("not positive definite: computed r = {:.6} (need r > 0)", rep.r),
            );
        }
        Ok(model)
    }

    fn potential_checked(&self, v: &Validator) -> Result<Potential> {
        let p = &self.potential;
        match p.kind.as_str() {
            "logarithmic" => {
                v.unused("potential", "scale", &p.scale, "by the logarithmic potential")?;
                let l1 = v.required("potential", "lambda1", p.lambda1, "by the logarithmic potential")?;
                let l2 = v.required("potential", "lambda2", p.lambda2, "by the logarithmic potential")?;
                let eps = v.required("potential", "eps", p.eps, "by the logarithmic potential")?;
                v.positive("potential", "lambda1", l1)?;
                if !(l2 > 0.0 && l2 < l1) {
                    return v.fail("potential", "lambda2", format!("must satisfy 0 < lambda2 < lambda1 (got {l2})"));
                }
                let spec = PotentialSpec { lambda1: l1, lambda2: l2, eps };
                if !spec.validate_eps() {
                    return v.fail(
                        "potential",
                        "eps",
                        format!("must lie in (0, {:.6}) = (0, 1 - sqrt(1 - lambda2/lambda1)) (got {eps})", spec.eps_threshold()),
                    );
                }
                Ok(Potential::Logarithmic(spec))
            }
            "double_well" => {
                for (key, x) in [("lambda1", &p.lambda1), ("lambda2", &p.lambda2), ("eps", &p.eps)] {
                    v.unused("potential", key, x, "by the double-well potential")?;
                }
                let scale = v.required("potential", "scale", p.scale, "by the double-well potential")?;
                v.positive("potential", "scale", scale)?;
                Ok(Potential::DoubleWell { scale })
            }
            other => v.fail("potential", "kind", format!("unknown kind {other:?} (logarithmic | double_well)")),
        }
    }

    fn density_checked(&self, v: &Validator) -> Result<DensityProfile> {
        let d = &self.density;
        v.positive("density", "rho_min", d.rho_min)?;
        if !(d.rho_max >= d.rho_min && d.rho_max.is_finite()) {
            return v.fail("density", "rho_max", format!("must be finite and >= rho_min (got {})", d.rho_max));
        }
        if !(d.mollify_width >= 0.0 && d.mollify_width.is_finite()) {
            return v.fail("density", "mollify_width", "must be >= 0");
        }
        let lengths = [self.domain.lx, self.domain.ly];
        let why = format!("by the {} profile", d.profile);
        let profile = match d.profile.as_str() {
            "constant" => {
                for (k, x) in [("mean", &d.mean), ("amplitude", &d.amplitude), ("background", &d.background), ("peak", &d.peak), ("radius", &d.radius)] {
                    v.unused("density", k, x, &why)?;
                }
                v.unused("density", "mode", &d.mode, &why)?;
                v.unused("density", "center", &d.center, &why)?;
                DensityProfile::Constant { value: v.required("density", "value", d.value, &why)? }
            }
            "sinusoidal" => {
                for (k, x) in [("value", &d.value), ("background", &d.background), ("peak", &d.peak), ("radius", &d.radius)] {
                    v.unused("density", k, x, &why)?;
                }
                v.unused("density", "center", &d.center, &why)?;
                let mean = v.required("density", "mean", d.mean, &why)?;
                let amp = v.required("density", "amplitude", d.amplitude, &why)?;
                let mode = d.mode.unwrap_or([1, 0]);
                DensityProfile::sinusoidal(mean, amp, mode, lengths)
            }
            "blob" => {
                for (k, x) in [("value", &d.value), ("mean", &d.mean), ("amplitude", &d.amplitude)] {
                    v.unused("density", k, x, &why)?;
                }
                v.unused("density", "mode", &d.mode, &why)?;
                let bg = v.required("density", "background", d.background, &why)?;
                let peak = v.required("density", "peak", d.peak, &why)?;
                let radius = v.required("density", "radius", d.radius, &why)?;
                v.positive("density", "radius", radius)?;
                let center = d.center.unwrap_or([0.5 * lengths[0], 0.5 * lengths[1]]);
                DensityProfile::blob(bg, peak, center, radius, lengths)
            }
            other => return v.fail("density", "profile", format!("unknown profile {other:?} (constant | sinusoidal | blob)")),
        };
        let (lo, hi) = crate::transport::mollify_initial_density(&profile, d.mollify_width).range();
        if lo < d.rho_min || hi > d.rho_max {
            return v.fail(
                "density",
                "profile",
                format!("profile range [{lo}, {hi}] is not inside [rho_min, rho_max] = [{}, {}]", d.rho_min, d.rho_max),
            );
        }
        if lo <= 0.0 {
            return v.fail("density", "rho_min", "density must stay positive");
        }
        Ok(profile)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.domain.lx, self.domain.ly, self.domain.nx, self.domain.ny)
    }

    pub fn anisotropy_model(&self) -> Result<AnisotropyModel> {
        self.anisotropy_model_checked(&Validator { text: "" })
    }

    pub fn potential(&self) -> Result<Potential> {
        self.potential_checked(&Validator { text: "" })
    }

    pub fn laws(&self) -> MaterialLaws {
        let m = &self.material;
        MaterialLaws { nu_minus: m.nu_minus, nu_plus: m.nu_plus, d_minus: m.d_minus, d_plus: m.d_plus }
    }

    /// The discrete model described by this configuration.
    pub fn model(&self) -> Result<Model> {
        let v = Validator { text: "" };
        let spec = ModelSpec {
            n_modes_u: self.domain.n_modes_u,
            n_modes_phi: self.domain.n_modes_phi,
            laws: self.laws(),
            anisotropy: self.anisotropy_model_checked(&v)?,
            potential: self.potential_checked(&v)?,
            rho0: self.density_checked(&v)?,
            rho_bounds: (self.density.rho_min, self.density.rho_max),
            mollify_width: self.density.mollify_width,
        };
        Model::new(Basis::new(self.grid()?), spec)
    }

    pub fn stepper(&self) -> StepperConfig {
        let t = &self.time;
        StepperConfig {
            dt: t.dt,
            t_end: t.t_end,
            stability_safety: t.stability_safety,
            override_stability: t.override_stability,
            flow_substeps: t.flow_substeps,
        }
    }

    /// Grid values of the initial phase field.
    pub fn initial_phase(&self, grid: &TorusGrid) -> Vec<f64> {
        let p = &self.phase;
        let (k0, k1) = (2.0 * PI / grid.lx, 2.0 * PI / grid.ly);
        let mut phi = grid.sample(|x, y| {
            let mut v = p.mean;
            if p.profile == "modes" {
                for (i, (a, m)) in p.amplitudes.iter().zip(&p.modes).enumerate() {
                    let ph = p.phases.get(i).copied().unwrap_or(0.0);
                    v += a * (k0 * m[0] as f64 * x + k1 * m[1] as f64 * y + ph).cos();
                }
            }
            v
        });
        if p.noise_amplitude > 0.0 {
            let noise = random_trig(grid, p.noise_max_mode, p.seed);
            let scale = noise.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (f, n) in phi.iter_mut().zip(&noise) {
                *f += p.noise_amplitude * n / scale;
            }
        }
        phi
    }

    /// Grid values of the initial velocity (before projection).
    pub fn initial_velocity(&self, grid: &TorusGrid) -> [Vec<f64>; 2] {
        let u = &self.velocity;
        let (k0, k1) = (2.0 * PI * u.mode[0] as f64 / grid.lx, 2.0 * PI * u.mode[1] as f64 / grid.ly);
        let a = u.amplitude;
        match u.profile.as_str() {
            "taylor_green" => {
                // Stream function sin(k0 x) sin(k1 y), scaled to peak speed a.
                let s = a / k0.abs().max(k1.abs());
                [
                    grid.sample(|x, y| s * k1 * (k0 * x).sin() * (k1 * y).cos()),
                    grid.sample(|x, y| -s * k0 * (k0 * x).cos() * (k1 * y).sin()),
                ]
            }
            "shear" => [grid.sample(|_, y| a * (k1 * y).sin()), vec![0.0; grid.len()]],
            "random" => {
                // Random stream function; velocity normalized to peak speed a.
                let psi = random_trig(grid, u.max_mode, u.seed);
                let b = Basis::new(*grid);
                let ux = b.grid_derivative(&psi, 1).expect("size");
                let uy: Vec<f64> = b.grid_derivative(&psi, 0).expect("size").iter().map(|v| -v).collect();
                let peak = ux.iter().zip(&uy).fold(0.0f64, |m, (p, q)| m.max((p * p + q * q).sqrt()));
                let s = if peak > 0.0 { a / peak } else { 0.0 };
                [ux.iter().map(|v| v * s).collect(), uy.iter().map(|v| v * s).collect()]
            }
            _ => [vec![0.0; grid.len()], vec![0.0; grid.len()]],
        }
    }

    /// Model and projected initial state.
    pub fn build(&self) -> Result<(Model, FlowState)> {
        let model = self.model()?;
        let grid = *model.basis.grid();
        let u0 = self.initial_velocity(&grid);
        let phi0 = self.initial_phase(&grid);
        let state = model.initial_state([&u0[0], &u0[1]], &phi0)?;
        Ok((model, state))
    }
}

/// Seeded real trigonometric polynomial with Gaussian coefficients on the
/// modes |m_i| ≤ max_mode (excluding the mean).
fn random_trig(grid: &TorusGrid, max_mode: i64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for m0 in -max_mode..=max_mode {
        for m1 in 0..=max_mode {
            if m1 == 0 && m0 <= 0 {
                continue;
            }
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            terms.push((m0, m1, a, b));
        }
    }
    let (k0, k1) = (2.0 * PI / grid.lx, 2.0 * PI / grid.ly);
    grid.sample(|x, y| {
        terms
            .iter()
            .map(|&(m0, m1, a, b)| {
                let arg = k0 * m0 as f64 * x + k1 * m1 as f64 * y;
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_parses_with_defaults() {
        let cfg = RunConfig::demo();
        assert_eq!(cfg.domain.nx, 32);
        assert_eq!(cfg.output.cadence, 1);
        assert_eq!(cfg.time.flow_substeps, 1);
        assert_eq!(cfg.time.stability_safety, 0.9);
    }

    fn with(pattern: &str, replacement: &str) -> String {
        assert!(DEMO_CONFIG.contains(pattern), "{pattern}");
        DEMO_CONFIG.replacen(pattern, replacement, 1)
    }

    fn line_of(text: &str, needle: &str) -> usize {
        text.lines().position(|l| l.contains(needle)).unwrap() + 1
    }

    #[test]
    fn rejects_large_eps_citing_threshold() {
        let text = with("eps = 0.1", "eps = 0.5");
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0.292893"), "{msg}");
        assert!(matches!(err, Error::Config { line: Some(l), .. } if l == line_of(&text, "eps = 0.5")));
    }

    #[test]
    fn rejects_indefinite_matrix_citing_r() {
        let text = with("matrix = [[1.5, -0.5], [-0.5, 1.5]]", "matrix = [[1.0, 2.0], [2.0, 1.0]]");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("r = -1.000000"), "{msg}");
    }

    #[test]
    fn rejects_unknown_keys_with_line() {
        let text = with("dt = 0.01", "dt = 0.01\nwobble = 3");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("wobble"));
        assert!(matches!(err, Error::Config { line: Some(l), .. } if l == line_of(&text, "wobble")));
    }

    #[test]
    fn rejects_syntax_errors() {
        assert!(matches!(parse_config("[domain\nlx = 1"), Err(Error::Config { line: Some(1), .. })));
    }

    #[test]
    fn rejects_unstable_step() {
        let msg = parse_config(&with("dt = 0.01", "dt = 0.1")).unwrap_err().to_string();
        assert!(msg.contains("stability bound"), "{msg}");
        assert!(parse_config(&with("dt = 0.01", "dt = 0.1\noverride_stability = true")).is_ok());
    }

    #[test]
    fn rejects_out_of_bounds_density() {
        let msg = parse_config(&with("rho_min = 1.0", "rho_min = 1.2")).unwrap_err().to_string();
        assert!(msg.contains("rho_min"), "{msg}");
    }

    #[test]
    fn initial_fields_are_deterministic_and_bounded() {
        let cfg = RunConfig::demo();
        let g = cfg.grid().unwrap();
        let phi = cfg.initial_phase(&g);
        assert!(phi.iter().all(|v| v.abs() < 1.0));
        assert_eq!(phi, cfg.initial_phase(&g));
        let mut r = cfg.clone();
        r.velocity.profile = "random".into();
        r.velocity.amplitude = 0.2;
        let u = r.initial_velocity(&g);
        let peak = u[0].iter().zip(&u[1]).fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()));
        assert!((peak - 0.2).abs() < 1e-12);
    }
}

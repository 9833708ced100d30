//! Bihari bound for y(t) ≤ y₀ + g₀t + ∫₀ᵗ c₁y², i.e. the horizon T* solving
//! T* = 1/(c₁(y₀ + g₀T*)) and the bound
//! y(t) ≤ 1/(c₁(1/(c₁(y₀ + g₀t)) − t)) on [0, T*).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BihariBound {
    pub c1: f64,
    pub g0: f64,
    pub y0: f64,
    pub t_star: f64,
}

pub fn bihari_horizon(c1: f64, g0: f64, y0: f64) -> Result<BihariBound> {
    if !(c1 > 0.0 && c1.is_finite() && y0 > 0.0 && y0.is_finite() && g0 >= 0.0 && g0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Bihari constants need c1 > 0, y0 > 0, g0 >= 0 (got c1 = {c1}, y0 = {y0}, g0 = {g0})"
        )));
    }
    // Positive root of c1 g0 T² + c1 y0 T − 1 = 0, written to avoid cancellation.
    let t_star = if g0 == 0.0 {
        1.0 / (c1 * y0)
    } else {
        let (a, b) = (c1 * g0, c1 * y0);
        2.0 / (b + (b * b + 4.0 * a).sqrt())
    };
    Ok(BihariBound { c1, g0, y0, t_star })
}

impl BihariBound {
    pub fn bound_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be >= 0 (got {t})")));
        }
        if t >= self.t_star {
            return Err(Error::HorizonExceeded { t, t_star: self.t_star });
        }
        let a = self.y0 + self.g0 * t;
        Ok(1.0 / (self.c1 * (1.0 / (self.c1 * a) - t)))
    }

    /// Integrates y′ = c₁y² + g₀, y(0) = y₀ with RK4 and checks
    /// y(t) ≤ bound(t)(1 + 1e−6) on a grid of [0, 0.95 T*].
    pub fn dominates_ode(&self) -> bool {
        let t_end = 0.95 * self.t_star;
        let (checks, sub) = (100usize, 400usize);
        let h = t_end / (checks * sub) as f64;
        let f = |y: f64| self.c1 * y * y + self.g0;
        let mut y = self.y0;
        for c in 1..=checks {
            for _ in 0..sub {
                let k1 = f(y);
                let k2 = f(y + 0.5 * h * k1);
                let k3 = f(y + 0.5 * h * k2);
                let k4 = f(y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            let t = (c * sub) as f64 * h;
            match self.bound_at(t) {
                Ok(b) if y <= b * (1.0 + 1e-6) => {}
                _ => return false,
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BihariCheck {
    pub all_pass: bool,
    /// (c1, g0, y0, passed) for each trial.
    pub trials: Vec<(f64, f64, f64, bool)>,
}

/// ODE-oracle check of the bound for `n_trials` random constants
/// c₁, g₀, y₀ ∈ [0.1, 10].
pub fn bihari_check(n_trials: usize, seed: u64) -> BihariCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials: Vec<(f64, f64, f64, bool)> = (0..n_trials)
        .map(|_| {
            let c1 = rng.gen_range(0.1..=10.0);
            let g0 = rng.gen_range(0.1..=10.0);
            let y0 = rng.gen_range(0.1..=10.0);
            let ok = bihari_horizon(c1, g0, y0).map(|b| b.dominates_ode()).unwrap_or(false);
            (c1, g0, y0, ok)
        })
        .collect();
    BihariCheck { all_pass: trials.iter().all(|t| t.3), trials }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_riccati_case() {
        let b = bihari_horizon(1.0, 0.0, 1.0).unwrap();
        assert_eq!(b.t_star, 1.0);
        assert_eq!(b.bound_at(0.0).unwrap(), 1.0);
        for t in [0.1, 0.5, 0.9] {
            let exact = 1.0 / (1.0 - t);
            assert!((b.bound_at(t).unwrap() - exact).abs() <= 1e-14 * exact);
        }
        assert!(matches!(b.bound_at(1.0), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn golden_ratio_horizon() {
        let b = bihari_horizon(1.0, 1.0, 1.0).unwrap();
        assert!((b.t_star - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!((b.c1 * b.g0 * b.t_star.powi(2) + b.c1 * b.y0 * b.t_star - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bound_starts_at_y0() {
        for (c1, g0, y0) in [(0.3, 2.0, 5.0), (7.0, 0.0, 0.01), (1.0, 9.0, 0.2)] {
            let b = bihari_horizon(c1, g0, y0).unwrap();
            assert!((b.bound_at(0.0).unwrap() - y0).abs() <= 1e-14 * y0);
        }
        assert!(bihari_horizon(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn small_initial_data() {
        let b = bihari_horizon(1.0, 0.0, 1e-9).unwrap();
        assert!((b.bound_at(1.0).unwrap() - 1e-9).abs() < 1e-16);
        assert!(b.dominates_ode());
    }

    #[test]
    fn random_trials_pass() {
        assert!(bihari_check(5, 11).all_pass);
    }
}

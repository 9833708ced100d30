//! Logarithmic free-energy density F(s) = (λ₁/2)(1 − s²) + G(s) with the
//! convex entropy part G(s) = (λ₂/2)[(1+s)ln((1+s)/2) + (1−s)ln((1−s)/2)],
//! and its C² regularization F_ε, which replaces G outside [−1+ε, 1−ε] by its
//! second-order Taylor polynomial about the knots ±(1−ε).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub eps: f64,
}

/// Constants (c_ε, M_ε) with F_ε(s) > M_ε s² whenever |s| > c_ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticGrowth {
    pub c_eps: f64,
    pub m_eps: f64,
}

impl PotentialSpec {
    /// Validated constructor: requires 0 < λ₂ < λ₁ and an admissible ε.
    pub fn new(lambda1: f64, lambda2: f64, eps: f64) -> Result<Self> {
        let spec = Self { lambda1, lambda2, eps };
        if ![lambda1, lambda2, eps].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("potential parameters".into()));
        }
        if !(lambda2 > 0.0 && lambda2 < lambda1) {
            return Err(Error::InvalidParameter(format!(
                "potential requires 0 < lambda2 < lambda1 (lambda1 = {lambda1}, lambda2 = {lambda2})"
            )));
        }
        if !spec.validate_eps() {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} outside the admissible interval (0, {:.6})",
                spec.eps_threshold()
            )));
        }
        Ok(spec)
    }

    /// Upper end 1 − √(1 − λ₂/λ₁) of the admissible ε interval.
    pub fn eps_threshold(&self) -> f64 {
        1.0 - (1.0 - self.lambda2 / self.lambda1).sqrt()
    }

    /// True iff 0 < ε < 1 − √(1 − λ₂/λ₁).
    pub fn validate_eps(&self) -> bool {
        self.eps > 0.0 && self.eps < self.eps_threshold()
    }

    /// Knot location 1 − ε.
    pub fn knot(&self) -> f64 {
        1.0 - self.eps
    }

    fn g(&self, s: f64) -> f64 {
        let (p, m) = (1.0 + s, 1.0 - s);
        0.5 * self.lambda2 * (p * (0.5 * p).ln() + m * (0.5 * m).ln())
    }

    fn g_prime(&self, s: f64) -> f64 {
        self.lambda2 * s.atanh()
    }

    fn g_second(&self, s: f64) -> f64 {
        self.lambda2 / (1.0 - s * s)
    }

    fn check_open(s: f64) -> Result<()> {
        if s.is_nan() || s.abs() >= 1.0 {
            return Err(Error::Domain(s));
        }
        Ok(())
    }

    fn check_finite(s: f64) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("potential argument {s}")));
        }
        Ok(())
    }

    /// F(s) for |s| < 1.
    pub fn f_log(&self, s: f64) -> Result<f64> {
        Self::check_open(s)?;
        Ok(0.5 * self.lambda1 * (1.0 - s * s) + self.g(s))
    }

    /// F′(s) = −λ₁s + (λ₂/2) ln((1+s)/(1−s)) for |s| < 1.
    pub fn f_log_prime(&self, s: f64) -> Result<f64> {
        Self::check_open(s)?;
        Ok(-self.lambda1 * s + self.g_prime(s))
    }

    /// F″(s) for |s| < 1.
    pub fn f_log_second(&self, s: f64) -> Result<f64> {
        Self::check_open(s)?;
        Ok(-self.lambda1 + self.g_second(s))
    }

    pub fn f_eps(&self, s: f64) -> Result<f64> {
        Self::check_finite(s)?;
        Ok(self.value(s))
    }

    pub fn f_eps_prime(&self, s: f64) -> Result<f64> {
        Self::check_finite(s)?;
        Ok(self.derivative(s))
    }

    pub fn f_eps_second(&self, s: f64) -> Result<f64> {
        Self::check_finite(s)?;
        Ok(self.second(s))
    }

    /// G_ε(s), unchecked.
    pub fn g_eps(&self, s: f64) -> f64 {
        let a = self.knot();
        if s.abs() <= a {
            self.g(s)
        } else {
            let d = s.abs() - a;
            self.g(a) + self.g_prime(a) * d + 0.5 * self.g_second(a) * d * d
        }
    }

    /// F_ε(s), unchecked (NaN in, NaN out).
    pub fn value(&self, s: f64) -> f64 {
        0.5 * self.lambda1 * (1.0 - s * s) + self.g_eps(s)
    }

    /// F_ε′(s), unchecked.
    pub fn derivative(&self, s: f64) -> f64 {
        let a = self.knot();
        let gp = if s.abs() <= a {
            self.g_prime(s)
        } else {
            let d = s.abs() - a;
            s.signum() * (self.g_prime(a) + self.g_second(a) * d)
        };
        -self.lambda1 * s + gp
    }

    /// F_ε″(s), unchecked.
    pub fn second(&self, s: f64) -> f64 {
        let a = self.knot();
        let gs = if s.abs() <= a { self.g_second(s) } else { self.g_second(a) };
        -self.lambda1 + gs
    }

    /// sup |F_ε″| over ℝ (attained at s = 0 or beyond the knots).
    pub fn max_abs_second(&self) -> f64 {
        self.second(0.0).abs().max(self.second(self.knot()).abs())
    }

    /// Quadratic coefficient (½G″(1−ε) − λ₁/2) of the outer branches.
    pub fn outer_quadratic_coefficient(&self) -> f64 {
        0.5 * (self.g_second(self.knot()) - self.lambda1)
    }

    /// Growth constants: M_ε is half the outer quadratic coefficient and c_ε
    /// the last sign change of F_ε(s) − M_ε s², located by bisection.
    pub fn quadratic_growth(&self) -> QuadraticGrowth {
        let m_eps = 0.5 * self.outer_quadratic_coefficient();
        let h = |s: f64| self.value(s) - m_eps * s * s;
        let a = self.knot();
        // Beyond the knot h is a quadratic with positive leading term m_eps;
        // find a point past its vertex where it is positive.
        let mut hi = 2.0 * a.max(1.0);
        while !(h(hi) > 0.0 && h(hi * 1.5) > h(hi)) {
            hi *= 2.0;
        }
        // Scan inwards for the outermost non-positive point of h on [0, hi].
        let n = 20_000;
        let mut lo = None;
        for i in (0..n).rev() {
            let s = hi * i as f64 / n as f64;
            if h(s) <= 0.0 {
                lo = Some(s);
                break;
            }
        }
        let c_eps = match lo {
            None => 0.0,
            Some(mut lo) => {
                let mut up = lo + hi / n as f64;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + up);
                    if h(mid) <= 0.0 { lo = mid } else { up = mid }
                }
                up
            }
        };
        QuadraticGrowth { c_eps, m_eps }
    }

    /// Positive zero s* of F′ on (0, 1) (the location of the wells).
    pub fn well_location(&self) -> f64 {
        let (mut lo, mut hi) = (1e-12, 1.0 - 1e-16);
        // F′ < 0 just right of 0 since F″(0) = λ₂ − λ₁ < 0; F′ → +∞ at 1.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if -self.lambda1 * mid + self.g_prime(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        0.5 * (lo + hi)
    }

    /// Largest ε for which |F_ε′| ≤ |F′| holds on (−1, 1): the comparison
    /// needs F′ ≥ 0 beyond the knot, i.e. 1 − ε ≥ s*.
    pub fn derivative_comparison_threshold(&self) -> f64 {
        1.0 - self.well_location()
    }

    /// Global minimum of F_ε (negative: the wells dip below zero).
    pub fn minimum(&self) -> f64 {
        let s = self.well_location();
        if s <= self.knot() {
            self.value(s)
        } else {
            // Minimum of the outer quadratic branch.
            let a = self.knot();
            let c = self.outer_quadratic_coefficient();
            let slope = self.derivative(a);
            let d = (-slope / (2.0 * c)).max(0.0);
            self.value(a + d)
        }
    }
}

/// The bulk free energy used by the dynamics: the regularized logarithmic
/// potential, or a polynomial double well kept for debugging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Logarithmic(PotentialSpec),
    /// F(s) = scale · (1 − s²)² / 4.
    DoubleWell { scale: f64 },
}

impl Potential {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Potential::Logarithmic(p) => p.value(s),
            Potential::DoubleWell { scale } => 0.25 * scale * (1.0 - s * s).powi(2),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Potential::Logarithmic(p) => p.derivative(s),
            Potential::DoubleWell { scale } => scale * (s * s * s - s),
        }
    }

    pub fn second(&self, s: f64) -> f64 {
        match self {
            Potential::Logarithmic(p) => p.second(s),
            Potential::DoubleWell { scale } => scale * (3.0 * s * s - 1.0),
        }
    }

    /// Bound on |F″| used by the time-step restriction. For the double well
    /// the order parameter is assumed to stay in [−1.5, 1.5].
    pub fn max_abs_second(&self) -> f64 {
        match self {
            Potential::Logarithmic(p) => p.max_abs_second(),
            Potential::DoubleWell { scale } => scale.abs() * 5.75,
        }
    }

    /// The unregularized energy density, when it is defined at `s`.
    pub fn unregularized(&self, s: f64) -> Option<f64> {
        match self {
            Potential::Logarithmic(p) => p.f_log(s).ok(),
            Potential::DoubleWell { .. } => Some(self.value(s)),
        }
    }

    pub fn log_spec(&self) -> Option<&PotentialSpec> {
        match self {
            Potential::Logarithmic(p) => Some(p),
            Potential::DoubleWell { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> PotentialSpec {
        PotentialSpec::new(1.0, 0.5, 0.1).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn closed_form_values() {
        let p = demo();
        assert!(close(p.f_log(0.0).unwrap(), 0.5 - 0.5 * 2f64.ln(), 1e-15));
        assert!((p.f_log(0.0).unwrap() - 0.153426).abs() < 1e-6);
        assert_eq!(p.f_log_prime(0.0).unwrap(), 0.0);
        assert!(close(p.g_prime(0.9), 0.25 * 19f64.ln(), 1e-14));
        assert!((p.g_prime(0.9) - 0.736110).abs() < 1e-6);
        assert_eq!(p.f_eps(0.0).unwrap(), p.f_log(0.0).unwrap());
    }

    #[test]
    fn domain_errors() {
        let p = demo();
        assert!(matches!(p.f_log(1.0), Err(Error::Domain(_))));
        assert!(matches!(p.f_log_prime(-1.5), Err(Error::Domain(_))));
        assert!(matches!(p.f_eps(f64::INFINITY), Err(Error::NonFinite(_))));
        assert!(matches!(p.f_eps_second(f64::NAN), Err(Error::NonFinite(_))));
    }

    #[test]
    fn knots_match_exactly() {
        let p = demo();
        for s in [p.knot(), -p.knot()] {
            assert_eq!(p.f_eps(s).unwrap(), p.f_log(s).unwrap());
            assert_eq!(p.f_eps_prime(s).unwrap(), p.f_log_prime(s).unwrap());
        }
    }

    #[test]
    fn outer_branch_is_quadratic() {
        let p = demo();
        assert!(p.f_eps(5.0).unwrap() >= 0.0);
        let h = 0.25;
        let d2 = |s: f64| p.value(s + h) - 2.0 * p.value(s) + p.value(s - h);
        let c = d2(2.0);
        for s in [1.5, 3.0, 5.0, 8.0] {
            assert!((d2(s) - c).abs() < 1e-11);
        }
        // Symbolic expansion of the outer polynomial at s = 5.
        let a = p.knot();
        let g = |s: f64| 0.25 * (((1.0 + s) / 2.0).ln() * (1.0 + s) + ((1.0 - s) / 2.0).ln() * (1.0 - s));
        let g1 = 0.25 * ((1.0 + a) / (1.0 - a)).ln();
        let g2 = 0.5 / (1.0 - a * a);
        let want = 0.5 * (1.0 - 25.0) + g(a) + g1 * (5.0 - a) + 0.5 * g2 * (5.0 - a).powi(2);
        assert!(close(p.value(5.0), want, 1e-13));
    }

    #[test]
    fn eps_threshold() {
        let p = PotentialSpec { lambda1: 1.0, lambda2: 0.5, eps: 0.1 };
        assert!((p.eps_threshold() - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!(p.validate_eps());
        assert!(!PotentialSpec { eps: 0.0, ..p }.validate_eps());
        assert!(!PotentialSpec { eps: 0.3, ..p }.validate_eps());
        let near = PotentialSpec { lambda1: 1.0, lambda2: 1.0 - 1e-9, eps: 0.9 };
        assert!(near.validate_eps());
        assert!(PotentialSpec::new(1.0, 0.5, 0.5).is_err());
        assert!(PotentialSpec::new(0.5, 1.0, 0.1).is_err());
    }

    #[test]
    fn growth_constants_hold_on_scan() {
        for eps in [0.02, 0.1, 0.2, 0.29] {
            let p = PotentialSpec::new(1.0, 0.5, eps).unwrap();
            let g = p.quadratic_growth();
            assert!(g.m_eps > 0.0);
            for i in 0..10_000 {
                let s = -50.0 + 100.0 * (i as f64 + 0.5) / 10_000.0;
                if s.abs() > g.c_eps {
                    assert!(p.value(s) > g.m_eps * s * s, "eps {eps} s {s}");
                }
            }
        }
    }

    #[test]
    fn wells_and_minimum() {
        let p = demo();
        let s = p.well_location();
        assert!(p.f_log_prime(s).unwrap().abs() < 1e-12);
        assert!((p.derivative_comparison_threshold() - (1.0 - s)).abs() < 1e-15);
        let m = p.minimum();
        assert!(m < 0.0);
        for i in 0..20_001 {
            let s = -10.0 + 20.0 * i as f64 / 20_000.0;
            assert!(p.value(s) >= m - 1e-15);
        }
    }

    #[test]
    fn double_well_derivatives() {
        let w = Potential::DoubleWell { scale: 2.0 };
        let h = 1e-5;
        for s in [-1.3, -0.2, 0.0, 0.7] {
            let fd = (w.value(s + h) - w.value(s - h)) / (2.0 * h);
            assert!((fd - w.derivative(s)).abs() < 1e-8);
            let fd2 = (w.derivative(s + h) - w.derivative(s - h)) / (2.0 * h);
            assert!((fd2 - w.second(s)).abs() < 1e-8);
        }
    }
}

//! Discrete B^{1/4}_{p,∞} norm of a uniformly sampled time series:
//!
//!   ‖f‖ = ‖f‖_{L^p(0,T)} + sup_{0<h≤1} h^{−1/4} ‖f(·+h) − f‖_{L^p(0,T−h)},
//!
//! with h ranging over the multiples of the sampling step up to min(1, T).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesovExponent {
    Two,
    Infinity,
}

impl std::str::FromStr for BesovExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2" => Ok(BesovExponent::Two),
            "inf" | "infinity" | "oo" => Ok(BesovExponent::Infinity),
            other => Err(Error::InvalidParameter(format!("exponent must be 2 or inf (got {other})"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovNorm {
    /// ‖f‖_{L^p}
    pub lp_norm: f64,
    /// sup_h h^{−1/4} ‖Δ_h f‖_{L^p}
    pub seminorm: f64,
    /// Sum of both parts.
    pub total: f64,
}

/// L^p norm of samples spaced `dt` apart (trapezoid rule for p = 2).
fn lp(values: impl Iterator<Item = f64> + Clone, p: BesovExponent, dt: f64) -> f64 {
    match p {
        BesovExponent::Infinity => values.map(f64::abs).fold(0.0, f64::max),
        BesovExponent::Two => {
            let v: Vec<f64> = values.map(|x| x * x).collect();
            if v.len() < 2 {
                return 0.0;
            }
            let inner: f64 = v[1..v.len() - 1].iter().sum();
            (dt * (inner + 0.5 * (v[0] + v[v.len() - 1]))).sqrt()
        }
    }
}

pub fn besov_seminorm(series: &[f64], p: BesovExponent, sample_dt: f64) -> Result<BesovNorm> {
    if series.len() < 4 {
        return Err(Error::SeriesTooShort { len: series.len(), min: 4 });
    }
    if !(sample_dt > 0.0 && sample_dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("sample_dt must be positive (got {sample_dt})")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("time series".into()));
    }
    let n = series.len();
    let span = (n - 1) as f64 * sample_dt;
    let h_max = span.min(1.0);
    let m_max = ((h_max / sample_dt) * (1.0 + 1e-12)).floor() as usize;
    let mut seminorm: f64 = 0.0;
    for m in 1..=m_max.min(n - 1) {
        let h = m as f64 * sample_dt;
        let diffs = (0..n - m).map(|i| series[i + m] - series[i]);
        seminorm = seminorm.max(lp(diffs, p, sample_dt) * h.powf(-0.25));
    }
    let lp_norm = lp(series.iter().copied(), p, sample_dt);
    Ok(BesovNorm { lp_norm, seminorm, total: lp_norm + seminorm })
}

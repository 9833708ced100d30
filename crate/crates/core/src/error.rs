use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input in {0}")]
    NonFinite(String),

    #[error("anisotropy is not differentiable at p = {p:?}: p[{i}]*p[{j}] = 0")]
    Kink { p: Vec<f64>, i: usize, j: usize },

    #[error("argument {0} lies outside the open interval (-1, 1)")]
    Domain(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("velocity history does not cover [{from}, {to}]")]
    HistoryGap { from: f64, to: f64 },

    #[error("linear solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("blow-up at t = {t}: non-finite values in {field}")]
    BlowUp { t: f64, field: &'static str },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("t = {t} is beyond the Bihari horizon t* = {t_star}")]
    HorizonExceeded { t: f64, t_star: f64 },

    #[error("series has {len} samples, at least {min} required")]
    SeriesTooShort { len: usize, min: usize },

    #[error("{}", config_message(.line, .msg))]
    Config { line: Option<usize>, msg: String },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn config_message(line: &Option<usize>, msg: &str) -> String {
    match line {
        Some(l) => format!("config line {l}: {msg}"),
        None => format!("config: {msg}"),
    }
}

impl Error {
    /// True for failures that happen while computing (as opposed to bad input).
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::BlowUp { .. }
                | Error::HistoryGap { .. }
                | Error::HorizonExceeded { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

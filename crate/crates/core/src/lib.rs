pub mod anisotropy;
pub mod basis;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fixedpoint;
pub mod potential;
pub mod runner;
pub mod snapshot;
pub mod transport;

pub use error::{Error, Result};

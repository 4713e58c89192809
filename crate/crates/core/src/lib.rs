//! Focused model selection for stationary Gaussian time series.
//!
//! Candidate models are parametric spectral families (AR, MA, ARMA) fitted by
//! the Whittle likelihood, plus a nonparametric alternative built on the raw
//! periodogram. For a chosen focus parameter (a lagged covariance, a
//! correlation, the spectral mass of a frequency band, a conditional
//! threshold probability) every candidate receives an estimate of the mean
//! squared error of its focus estimator, and candidates are ranked by it.
//!
//! Module map:
//!
//! - [`spectral`]: quadrature, spectral densities, ARMA families and their derivatives
//! - [`periodogram`]: time series, raw periodogram, integrated-periodogram functionals
//! - [`estimation`]: Whittle and exact Gaussian fitting, sandwich matrices, AIC/BIC
//! - [`focus`]: focus weights and transforms
//! - [`fic`]: bias/variance estimators, FIC and AFIC scores, rankings
//! - [`detrend`]: OLS trend removal
//! - [`simulate`]: exact Gaussian simulation and seeded Monte Carlo studies

pub mod detrend;
pub mod error;
pub mod estimation;
pub mod fic;
pub mod focus;
pub mod periodogram;
pub mod simulate;
pub mod spectral;

mod linalg;

pub use error::{Error, Result};

/// Crate version, stamped into every report.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

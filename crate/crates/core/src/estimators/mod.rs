//! Joint estimators of frequency difference, relative phase and range.
//!
//! * [`uls_estimate`]: unwrap the centered record and fit a line.
//! * [`pcp_estimate`]: periodogram peak for `|f_d|`, then a sawtooth
//!   correlation search for the phase and the sign of `f_d`.
//! * [`wls_estimate`]: weighted least squares over a frequency/phase grid with
//!   the range concentrated out; 0/1 weights from [`robust_weights`] make it
//!   tolerant to outliers.

mod grids;
mod pcp;
mod robust;
mod uls;
mod wls;

use std::fmt;
use std::str::FromStr;

pub use grids::{SearchGrids, DEFAULT_PHASE_POINTS, REFINE_FACTOR};
pub use pcp::{pcp_estimate, periodogram, periodogram_direct};
pub use robust::{
    median, nmad, outlier_mask, preprocess_outliers, robust_weights, Preprocessed, WeightVector,
    NMAD_SCALE, OUTLIER_THRESHOLD,
};
pub use uls::{uls_estimate, unwrap};
pub use wls::{wls_cost, wls_estimate};

use crate::error::Error;
use crate::scalar::{wrap_pi, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Uls,
    Pcp,
    Wls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Uls, Method::Pcp, Method::Wls];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Uls => "ULS",
            Method::Pcp => "PCP",
            Method::Wls => "WLS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uls" => Ok(Method::Uls),
            "pcp" => Ok(Method::Pcp),
            "wls" => Ok(Method::Wls),
            other => Err(Error::config(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics<T> {
    /// `y - h(f̂_d, φ̂, 0) - δ₀ - 2ρ̂/c`, seconds.
    pub residuals: Vec<T>,
    pub weights: Option<WeightVector<T>>,
    pub n_used: usize,
    pub n_downweighted: usize,
    /// Set when the input gave the estimator nothing to lock onto
    /// (flat spectrum, or weights that fell back to uniform).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    /// Frequency difference, Hz.
    pub f_d_hat: T,
    /// Relative phase, radians in `[0, 2π)`.
    pub phi_hat: T,
    /// Range, m.
    pub rho_hat: T,
    pub method: Method,
    pub diagnostics: Diagnostics<T>,
}

/// Wrapped phase offset in `(-π, π]` that carries `phi_hat` onto `phi_true`.
pub fn phase_error<T: Real>(phi_hat: T, phi_true: T) -> T {
    wrap_pi(phi_true - phi_hat)
}

/// [`phase_error`] expressed in seconds of master clock.
pub fn phase_error_seconds<T: Real>(phi_hat: T, phi_true: T, master_period: T) -> T {
    phase_error(phi_hat, phi_true) * master_period / T::TAU()
}

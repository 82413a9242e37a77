//! Special functions and log-domain probability arithmetic.

mod erf;
mod gamma;
mod incgamma;
mod logsum;
mod quadform;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use erf::{erfc, erfc_and_bounds, log_erfc, log_norm_cdf, norm_cdf, norm_quantile, ErfcBounds};
pub use gamma::ln_gamma;
pub use incgamma::{
    chi2_logcdf, ln_gamma_p, ln_gamma_q, ln_one_minus_truncated_gamma_ratio, truncated_gamma_ratio,
};
pub use logsum::{log1mexp, log_add_exp, log_mean_exp, log_sum_exp};
pub use quadform::{weighted_noncentral_chi2_logcdf, CdfMethod, QuadFormCdf, WeightedChiSquareSpec};

pub(crate) use quadform::{grouped_logcdf, Group};

/// Natural logarithm of a probability; always `≤ 0`, possibly `−∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value > 0.0 {
            return Err(domain!("log-probability must be ≤ 0, got {value}"));
        }
        Ok(LogProb(value))
    }

    /// Rounds small positive excursions (from floating-point noise) down to 0.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            LogProb(f64::NEG_INFINITY)
        } else {
            LogProb(value.min(0.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The probability itself; only for presentation.
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl TryFrom<f64> for LogProb {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Self> {
        LogProb::new(v)
    }
}

impl From<LogProb> for f64 {
    fn from(p: LogProb) -> f64 {
        p.0
    }
}

impl std::fmt::Display for LogProb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

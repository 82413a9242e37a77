//! Prior small-ball probabilities `P(‖θ − θ₀‖₂ < t)`: estimators, exact
//! one-dimensional reductions and the analytic bound evaluators.

mod bounds;
mod exact;
mod mc;
mod rate;
mod reduce;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::prior::{GLPrior, PointMassMixture, SparseVector};
use crate::specfun::LogProb;

pub use bounds::{
    lasso_lb_integral, lasso_ub_integral, rkhs_norm_sq, shifted_ball_bounds, shifted_ball_upper, ShiftedBallFactors,
};
pub use exact::{global_only_exact, ig_global_reduction};
pub use mc::{conditional_mc, naive_mc, ConditionalOptions, ScaleProposal};
pub(crate) use mc::jackknife_log_mean;
pub use rate::{rate_fit, RateFit, RateModel};
pub use reduce::{dickey_reduce, dirichlet_reduce, simplex_mc};

/// The ball `{θ : ‖θ − center‖₂ < t}`, carrying `w = t²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallQuery {
    center: SparseVector,
    radius_t: f64,
    w: f64,
}

impl BallQuery {
    pub fn new(center: SparseVector, radius_t: f64) -> Result<Self> {
        if !(radius_t >= 0.0) {
            return Err(domain!("ball radius must be nonnegative, got {radius_t}"));
        }
        Ok(BallQuery { center, radius_t, w: radius_t * radius_t })
    }

    /// Ball given by its squared radius.
    pub fn from_w(center: SparseVector, w: f64) -> Result<Self> {
        if !(w >= 0.0) {
            return Err(domain!("squared radius must be nonnegative, got {w}"));
        }
        Ok(BallQuery { center, radius_t: w.sqrt(), w })
    }

    pub fn center(&self) -> &SparseVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius_t
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }
}

/// Radius `t(n)` as a function of the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadiusSchedule {
    /// `n^{δ/2}`
    PowerLaw { delta: f64 },
    /// `√(A log n)`
    LogLaw { a: f64 },
    /// `√(A q log(n/q))`
    MinimaxLaw { q: usize, a: f64 },
    Fixed { t: f64 },
    /// `factor · √n`
    SqrtN { factor: f64 },
}

impl RadiusSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadiusSchedule::PowerLaw { delta } => delta > 0.0 && delta < 1.0,
            RadiusSchedule::LogLaw { a } => a > 0.0 && a.is_finite(),
            RadiusSchedule::MinimaxLaw { q, a } => q >= 1 && a > 0.0 && a.is_finite(),
            RadiusSchedule::Fixed { t } => t > 0.0 && t.is_finite(),
            RadiusSchedule::SqrtN { factor } => factor > 0.0 && factor.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(domain!("invalid radius schedule {self:?}"))
        }
    }

    pub fn radius(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            RadiusSchedule::PowerLaw { delta } => nf.powf(delta / 2.0),
            RadiusSchedule::LogLaw { a } => (a * nf.ln()).sqrt(),
            RadiusSchedule::MinimaxLaw { q, a } => (a * q as f64 * (nf / q as f64).ln()).sqrt(),
            RadiusSchedule::Fixed { t } => t,
            RadiusSchedule::SqrtN { factor } => factor * nf.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Exact1D,
    ConditionalMC,
    NaiveMC,
    BoundUpper,
    BoundLower,
}

impl EstimateMethod {
    pub fn is_exact(self) -> bool {
        matches!(self, EstimateMethod::Exact1D | EstimateMethod::BoundUpper | EstimateMethod::BoundLower)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateMethod::Exact1D => "exact-1d",
            EstimateMethod::ConditionalMC => "conditional-mc",
            EstimateMethod::NaiveMC => "naive-mc",
            EstimateMethod::BoundUpper => "bound-upper",
            EstimateMethod::BoundLower => "bound-lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationEstimate {
    pub log_p: LogProb,
    /// Standard error of `log_p`; zero for exact methods.
    pub log_se: f64,
    pub method: EstimateMethod,
    /// Samples, scale draws or integrand evaluations spent.
    pub budget: u64,
    /// Draws dropped because the inner CDF could not be resolved.
    pub failures: u64,
    /// Set when a Monte Carlo estimate saw no hits.
    pub zero_hits: bool,
}

impl ConcentrationEstimate {
    pub(crate) fn exact(log_p: f64, budget: u64) -> Self {
        ConcentrationEstimate {
            log_p: LogProb::clamped(log_p),
            log_se: 0.0,
            method: EstimateMethod::Exact1D,
            budget,
            failures: 0,
            zero_hits: false,
        }
    }
}

/// Either prior family, for estimators that accept both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorModel {
    GlobalLocal(GLPrior),
    PointMass(PointMassMixture),
}

impl PriorModel {
    pub fn n(&self) -> usize {
        match self {
            PriorModel::GlobalLocal(p) => p.n,
            PriorModel::PointMass(p) => p.n,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        match self {
            PriorModel::GlobalLocal(p) => PriorModel::GlobalLocal(p.with_n(n)),
            PriorModel::PointMass(p) => PriorModel::PointMass(p.with_n(n)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorModel::GlobalLocal(p) => p.validate(),
            PriorModel::PointMass(p) => p.validate(),
        }
    }
}

impl From<GLPrior> for PriorModel {
    fn from(p: GLPrior) -> Self {
        PriorModel::GlobalLocal(p)
    }
}

impl From<PointMassMixture> for PriorModel {
    fn from(p: PointMassMixture) -> Self {
        PriorModel::PointMass(p)
    }
}

pub(crate) fn check_dims(prior_n: usize, q: &BallQuery) -> Result<()> {
    if prior_n != q.n() {
        return Err(domain!("prior dimension {prior_n} does not match ball center dimension {}", q.n()));
    }
    Ok(())
}

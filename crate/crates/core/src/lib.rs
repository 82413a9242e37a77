//! Prior small-ball concentration and posterior ball mass for global-local
//! shrinkage priors in the sparse normal-means model.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: special functions, log-domain arithmetic and the CDF of
//!   weighted noncentral chi-square sums.
//! - [`quad`]: adaptive Gauss–Kronrod quadrature, including a log-domain
//!   driver for integrands that under- or overflow.
//! - [`prior`]: prior descriptors (global-local and point-mass mixtures),
//!   samplers and the class-𝒢 density checker.
//! - [`smallball`]: estimators and exact reductions for
//!   `P(‖θ − θ₀‖₂ < t)` plus the analytic bound evaluators.
//! - [`posterior`]: normal-means simulation, Gibbs samplers, posterior ball
//!   mass and the ratio certificate.
//!
//! Probabilities are carried as natural logarithms ([`LogProb`]) end to end.

pub mod error;
pub mod posterior;
pub mod prior;
pub mod quad;
pub mod rng;
pub mod smallball;
pub mod specfun;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use specfun::LogProb;

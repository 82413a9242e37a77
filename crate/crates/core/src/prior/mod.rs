//! Prior descriptors: global-local Gaussian scale mixtures and point-mass
//! mixtures, with samplers and a class-𝒢 density checker.

mod classg;
mod sample;
mod sparse;
mod tabulated;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::ln_gamma;

pub use classg::{class_g_check, ClassGReport};
pub use sample::{sample_point_mass, sample_scales, sample_theta, Scales};
pub use sparse::SparseVector;
pub use tabulated::TabulatedDensity;

/// Density `g` of the global variance `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum GlobalFamily {
    InverseGamma { alpha: f64, beta: f64 },
    HalfCauchy { scale: f64 },
    Exponential { rate: f64 },
    PluginDirac { tau_n: f64 },
    TabulatedDensity(TabulatedDensity),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain!("{name} must be finite and positive, got {v}"))
    }
}

impl GlobalFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            GlobalFamily::InverseGamma { alpha, beta } => {
                positive("alpha", *alpha)?;
                positive("beta", *beta)
            }
            GlobalFamily::HalfCauchy { scale } => positive("scale", *scale),
            GlobalFamily::Exponential { rate } => positive("rate", *rate),
            GlobalFamily::PluginDirac { tau_n } => positive("tau_n", *tau_n),
            GlobalFamily::TabulatedDensity(t) => t.validate(),
        }
    }

    pub fn has_density(&self) -> bool {
        !matches!(self, GlobalFamily::PluginDirac { .. })
    }

    /// `ln g(τ)`; `None` for the point mass.
    pub fn log_density(&self, tau: f64) -> Option<f64> {
        if !(tau > 0.0) {
            return self.has_density().then_some(f64::NEG_INFINITY);
        }
        Some(match self {
            GlobalFamily::InverseGamma { alpha, beta } => {
                alpha * beta.ln() - ln_gamma(*alpha).ok()? - (alpha + 1.0) * tau.ln() - beta / tau
            }
            GlobalFamily::HalfCauchy { scale } => {
                let r = tau / scale;
                (2.0 / (PI * scale)).ln() - (r * r).ln_1p()
            }
            GlobalFamily::Exponential { rate } => rate.ln() - rate * tau,
            GlobalFamily::PluginDirac { .. } => return None,
            GlobalFamily::TabulatedDensity(t) => t.density(tau).ln(),
        })
    }

    pub fn density(&self, tau: f64) -> Option<f64> {
        self.log_density(tau).map(f64::exp)
    }

    /// Range of `τ` outside which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            GlobalFamily::TabulatedDensity(t) => t.range(),
            GlobalFamily::PluginDirac { tau_n } => (*tau_n, *tau_n),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GlobalFamily::InverseGamma { alpha, beta } => {
                let g = Gamma::new(*alpha, 1.0).expect("validated shape");
                beta / g.sample(rng)
            }
            GlobalFamily::HalfCauchy { scale } => {
                let u: f64 = rng.random();
                scale * (0.5 * PI * u).tan()
            }
            GlobalFamily::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            GlobalFamily::PluginDirac { tau_n } => *tau_n,
            GlobalFamily::TabulatedDensity(t) => t.sample(rng),
        }
    }
}

/// Law `f` of the local variances `ψⱼ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum LocalFamily {
    DiracOne,
    Exponential { lambda: f64 },
}

impl LocalFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            LocalFamily::DiracOne => Ok(()),
            LocalFamily::Exponential { lambda } => positive("lambda", *lambda),
        }
    }
}

/// `θⱼ | ψⱼ, τ ~ N(0, ψⱼτ)`, `ψⱼ ~ f`, `τ ~ g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GLPrior {
    pub global: GlobalFamily,
    pub local: LocalFamily,
    pub n: usize,
}

impl GLPrior {
    pub fn new(global: GlobalFamily, local: LocalFamily, n: usize) -> Result<Self> {
        let p = GLPrior { global, local, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain!("prior dimension must be at least 1"));
        }
        self.global.validate()?;
        self.local.validate()
    }

    /// Same families in dimension `n`.
    pub fn with_n(&self, n: usize) -> Self {
        GLPrior { n, ..self.clone() }
    }

    /// i.i.d. standard normal coordinates.
    pub fn iid_normal(n: usize) -> Self {
        GLPrior { global: GlobalFamily::PluginDirac { tau_n: 1.0 }, local: LocalFamily::DiracOne, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

/// `θⱼ ~ (1 − π)δ₀ + π Laplace(slab_scale)` with `π ~ Beta(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMassMixture {
    pub n: usize,
    pub pi_prior: BetaPrior,
    pub slab_scale: f64,
}

impl PointMassMixture {
    /// `Beta(1, n + 1)` mixing weight and a standard Laplace slab.
    pub fn new(n: usize) -> Self {
        PointMassMixture { n, pi_prior: BetaPrior { a: 1.0, b: n as f64 + 1.0 }, slab_scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain!("prior dimension must be at least 1"));
        }
        positive("pi_prior.a", self.pi_prior.a)?;
        positive("pi_prior.b", self.pi_prior.b)?;
        positive("slab_scale", self.slab_scale)
    }

    /// Same hyperparameters in dimension `n`; a default-style `b = n + 1`
    /// follows the new dimension.
    pub fn with_n(&self, n: usize) -> Self {
        let b = if self.pi_prior.b == self.n as f64 + 1.0 { n as f64 + 1.0 } else { self.pi_prior.b };
        PointMassMixture { n, pi_prior: BetaPrior { a: self.pi_prior.a, b }, ..*self }
    }
}

/// Marginal log density of `θ` under `ψⱼ ~ Exp(λ)` given `τ`: a product of
/// Laplace densities with scale `√(τ/(2λ))`.
pub fn log_prior_density_bayes_lasso(theta: &[f64], tau: f64, lambda: f64) -> Result<f64> {
    positive("tau", tau)?;
    positive("lambda", lambda)?;
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("theta must be finite".into()));
    }
    let b = (tau / (2.0 * lambda)).sqrt();
    let l1: f64 = theta.iter().map(|t| t.abs()).sum();
    Ok(-(theta.len() as f64) * (2.0 * b).ln() - l1 / b)
}

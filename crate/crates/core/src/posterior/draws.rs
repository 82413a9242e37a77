//! Random variates needed by the Gibbs samplers.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::specfun::{log_norm_cdf, norm_quantile};

/// Inverse Gaussian `IG(μ, shape)` by Michael–Schucany–Haas, with the root
/// written so that `μ ≫ shape` loses no digits.
pub(crate) fn inverse_gaussian<R: Rng + ?Sized>(mu: f64, shape: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let phi = mu * z * z / (2.0 * shape);
    let x = mu / (1.0 + phi + (phi * (2.0 + phi)).sqrt());
    let u: f64 = rng.random();
    if u * (mu + x) <= mu {
        x
    } else {
        mu * (mu / x)
    }
}

/// `ψ ~ GIG(½, a, b)`, density `∝ ψ^{−½} exp(−(aψ + b/ψ)/2)`, through `1/ψ ~ IG(√(a/b), a)`.
pub(crate) fn gig_half<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let x = inverse_gaussian((a / b).sqrt(), a, rng);
    1.0 / x
}

/// `Z ~ N(0, 1)` conditioned on `Z > lo`.
pub(crate) fn std_normal_above<R: Rng + ?Sized>(lo: f64, rng: &mut R) -> f64 {
    if lo < 5.0 {
        // Z = −Φ⁻¹(U Φ(−lo))
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let p = (u.ln() + log_norm_cdf(-lo)).exp();
        return -norm_quantile(p).min(-lo);
    }
    // Exponential proposal with the optimal rate.
    let alpha = 0.5 * (lo + (lo * lo + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = lo + e / alpha;
        let u: f64 = rng.random();
        if u <= (-(z - alpha).powi(2) / 2.0).exp() {
            return z;
        }
    }
}

/// One slice-sampling update of `x` against the log density `f`.
pub(crate) fn slice_step<R: Rng + ?Sized, F: Fn(f64) -> f64>(x: f64, f: F, width: f64, rng: &mut R) -> Result<f64> {
    const MAX_STEPS: usize = 64;
    const MAX_SHRINK: usize = 1000;
    let fx = f(x);
    if !fx.is_finite() {
        return Err(Error::Invalid(format!("slice sampler started at a point of zero density ({x})")));
    }
    let e: f64 = Exp1.sample(rng);
    let level = fx - e;
    let mut lo = x - width * rng.random::<f64>();
    let mut hi = lo + width;
    let budget = rng.random_range(0..MAX_STEPS);
    let mut left = budget;
    while left > 0 && f(lo) > level {
        lo -= width;
        left -= 1;
    }
    let mut right = MAX_STEPS - 1 - budget;
    while right > 0 && f(hi) > level {
        hi += width;
        right -= 1;
    }
    for _ in 0..MAX_SHRINK {
        let cand = lo + (hi - lo) * rng.random::<f64>();
        if f(cand) > level {
            return Ok(cand);
        }
        if cand < x {
            lo = cand;
        } else {
            hi = cand;
        }
    }
    Err(Error::Convergence(format!("slice sampler shrank {MAX_SHRINK} times around {x}")))
}

use std::cell::{Cell, RefCell};

use super::{check_dims, BallQuery, ConcentrationEstimate};
use crate::error::{domain, Error, Result};
use crate::prior::{GLPrior, GlobalFamily, LocalFamily};
use crate::quad::{log_integral, log_integral_with_breaks, QuadOptions};
use crate::specfun::{grouped_logcdf, ln_gamma, Group};

const LOG_SPAN: f64 = 300.0;

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 4000 }
}

/// `P(‖θ − θ₀‖ < t)` under a global-only prior by one-dimensional quadrature of
/// `g(τ) · P(τ χ²ₙ(‖θ₀‖²/τ) < w)` over `ln τ`.
///
/// `quad_points` sets the grid used to locate the peak of the integrand.
pub fn global_only_exact(prior: &GLPrior, q: &BallQuery, quad_points: usize) -> Result<ConcentrationEstimate> {
    prior.validate()?;
    check_dims(prior.n, q)?;
    if prior.local != LocalFamily::DiracOne {
        return Err(domain!("global_only_exact needs unit local scales"));
    }
    if !prior.global.has_density() {
        return Err(domain!("global_only_exact needs a global density; use conditional_mc for a plug-in scale"));
    }
    let w = q.w();
    if w == 0.0 {
        return Ok(ConcentrationEstimate::exact(f64::NEG_INFINITY, 0));
    }
    let n = prior.n as f64;
    let c2 = q.center().l2_norm_sq();
    let mid = (w.max(c2) / n).ln();
    let (slo, shi) = prior.global.support();
    let lo = (mid - LOG_SPAN).max(if slo > 0.0 { slo.ln() } else { f64::NEG_INFINITY });
    let hi = (mid + LOG_SPAN).min(shi.ln());
    if !(lo < hi) {
        return Err(domain!("global support [{slo}, {shi}] does not meet the integration window"));
    }

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let evals = Cell::new(0u64);
    let h = |v: f64| {
        evals.set(evals.get() + 1);
        let tau = v.exp();
        let lg = match prior.global.log_density(tau) {
            Some(lg) if lg > f64::NEG_INFINITY => lg,
            _ => return f64::NEG_INFINITY,
        };
        match grouped_logcdf(&[Group { lambda: tau, m: n, delta: c2 / tau }], w) {
            Ok(r) => lg + v + r.log_p.value(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let kinks: Vec<f64> = match &prior.global {
        GlobalFamily::TabulatedDensity(t) => t.grid().iter().map(|x| x.ln()).collect(),
        _ => Vec::new(),
    };
    let log_p = log_integral_with_breaks(h, lo, hi, quad_points, &kinks, quad_opts())?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(ConcentrationEstimate::exact(log_p.min(0.0), evals.get()))
}

/// Closed reduction for a centered ball under `τ ~ IG(α, β)` with unit local
/// scales: `‖θ‖² = 2βB/(1−B)` with `B ~ Beta(n/2, α)`.
pub fn ig_global_reduction(alpha: f64, beta: f64, n: usize, q: &BallQuery) -> Result<ConcentrationEstimate> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(domain!("inverse-gamma parameters must be positive, got ({alpha}, {beta})"));
    }
    if n == 0 {
        return Err(domain!("dimension must be positive"));
    }
    check_dims(n, q)?;
    if q.center().q() != 0 {
        return Err(domain!("ig_global_reduction needs a ball centered at the origin"));
    }
    let w = q.w();
    if w == 0.0 {
        return Ok(ConcentrationEstimate::exact(f64::NEG_INFINITY, 0));
    }
    let half = n as f64 / 2.0;
    let two_beta = 2.0 * beta;
    let ln_b = ln_gamma(half)? + ln_gamma(alpha)? - ln_gamma(half + alpha)?;
    let evals = Cell::new(0u64);
    // t = e^u on [0, 1]
    let h = |u: f64| {
        evals.set(evals.get() + 1);
        let t = u.exp();
        half * u - (half + alpha) * (two_beta + w * t).ln()
    };
    let lo = -(400.0 / n as f64 + 60.0);
    let integral = log_integral(h, lo, 0.0, 256, quad_opts())?;
    let log_p = half * w.ln() + alpha * two_beta.ln() - ln_b + integral;
    Ok(ConcentrationEstimate::exact(log_p.min(0.0), evals.get()))
}

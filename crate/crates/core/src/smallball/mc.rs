use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dims, BallQuery, ConcentrationEstimate, EstimateMethod, PriorModel};
use crate::error::{Error, Result};
use crate::prior::{GLPrior, GlobalFamily, LocalFamily, PointMassMixture};
use crate::rng::RngStream;
use crate::specfun::{grouped_logcdf, log_add_exp, Group, LogProb};

const NAIVE_CHUNK: u64 = 1 << 14;
const SCALE_CHUNK: u64 = 64;
const MAX_FAILURE_RATE: f64 = 0.01;

/// Brute-force estimate: the fraction of prior draws landing in the ball.
pub fn naive_mc(prior: &PriorModel, q: &BallQuery, samples: u64, stream: RngStream) -> Result<ConcentrationEstimate> {
    if samples < 1000 {
        return Err(Error::Invalid(format!("naive_mc needs at least 1000 samples, got {samples}")));
    }
    prior.validate()?;
    check_dims(prior.n(), q)?;
    let center = q.center().to_dense();
    let w = q.w();
    let chunks = samples.div_ceil(NAIVE_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.substream(k).rng();
            let count = NAIVE_CHUNK.min(samples - k * NAIVE_CHUNK);
            (0..count)
                .filter(|_| match prior {
                    PriorModel::GlobalLocal(p) => gl_dist_sq(p, &center, w, &mut rng) < w,
                    PriorModel::PointMass(p) => point_mass_dist_sq(p, q, &center, &mut rng) < w,
                })
                .count() as u64
        })
        .sum();
    let n = samples as f64;
    let p = hits as f64 / n;
    let (log_p, log_se) = if hits == 0 {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        (p.ln(), ((1.0 - p) / (n * p)).sqrt().max(1.0 / n))
    };
    Ok(ConcentrationEstimate {
        log_p: LogProb::clamped(log_p),
        log_se,
        method: EstimateMethod::NaiveMC,
        budget: samples,
        failures: 0,
        zero_hits: hits == 0,
    })
}

/// Squared distance of a fresh draw to `center`, abandoned early once it
/// exceeds `w`.
fn gl_dist_sq<R: Rng + ?Sized>(p: &GLPrior, center: &[f64], w: f64, rng: &mut R) -> f64 {
    let tau = p.global.sample(rng);
    let exp = match p.local {
        LocalFamily::Exponential { lambda } => Some(Exp::new(lambda).expect("validated rate")),
        LocalFamily::DiracOne => None,
    };
    let mut d = 0.0;
    for &c in center {
        let psi = exp.map_or(1.0, |e| e.sample(rng));
        let z: f64 = StandardNormal.sample(rng);
        let x = (psi * tau).sqrt() * z - c;
        d += x * x;
        if d >= w {
            return d;
        }
    }
    d
}

fn point_mass_dist_sq<R: Rng + ?Sized>(p: &PointMassMixture, q: &BallQuery, center: &[f64], rng: &mut R) -> f64 {
    let pi = Beta::new(p.pi_prior.a, p.pi_prior.b).expect("validated Beta").sample(rng);
    let k = Binomial::new(p.n as u64, pi.clamp(0.0, 1.0)).expect("valid probability").sample(rng) as usize;
    let slab = Exp::new(1.0 / p.slab_scale).expect("validated scale");
    let mut d = q.center().l2_norm_sq();
    for j in rand::seq::index::sample(rng, p.n, k) {
        let m = slab.sample(rng);
        let x = if rng.random::<bool>() { m } else { -m };
        let c = center[j];
        d += (x - c) * (x - c) - c * c;
    }
    d.max(0.0)
}

/// Where the scale draws of [`conditional_mc`] come from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScaleProposal {
    #[default]
    Prior,
    /// Half the draws from the prior, half from a log-uniform law for `τ` on
    /// `tau_range` and, on the support of `θ₀`, an exponential law for `ψⱼ`
    /// with rate `psi_rate` (heavier than the prior's). Draws are reweighted
    /// by prior over proposal density.
    Defensive { tau_range: (f64, f64), psi_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConditionalOptions {
    pub proposal: ScaleProposal,
}

/// Averages the exact conditional probability `P(ball | τ, ψ)` over scale
/// draws, on the log scale with a delete-1 jackknife.
pub fn conditional_mc(
    prior: &GLPrior,
    q: &BallQuery,
    scale_samples: u64,
    stream: RngStream,
    opts: &ConditionalOptions,
) -> Result<ConcentrationEstimate> {
    if scale_samples < 100 {
        return Err(Error::Invalid(format!("conditional_mc needs at least 100 scale draws, got {scale_samples}")));
    }
    prior.validate()?;
    check_dims(prior.n, q)?;
    if let ScaleProposal::Defensive { tau_range: (lo, hi), psi_rate } = opts.proposal {
        if !(lo > 0.0 && hi > lo && hi.is_finite() && psi_rate > 0.0) {
            return Err(Error::Invalid(format!("bad defensive proposal {:?}", opts.proposal)));
        }
    }
    let chunks = scale_samples.div_ceil(SCALE_CHUNK);
    let terms: Vec<Result<f64>> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = stream.substream(k).rng();
            let count = SCALE_CHUNK.min(scale_samples - k * SCALE_CHUNK);
            (0..count).map(|_| conditional_term(prior, q, &opts.proposal, &mut rng)).collect::<Vec<_>>()
        })
        .collect();

    let mut values = Vec::with_capacity(terms.len());
    let mut failures = 0u64;
    for t in terms {
        match t {
            Ok(v) => values.push(v),
            Err(e) if e.is_numeric() => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if failures as f64 > MAX_FAILURE_RATE * scale_samples as f64 {
        return Err(Error::Resolution(format!(
            "{failures} of {scale_samples} conditional probabilities could not be resolved"
        )));
    }
    let (est, se) = jackknife_log_mean(&values);
    Ok(ConcentrationEstimate {
        log_p: LogProb::clamped(est),
        log_se: se,
        method: EstimateMethod::ConditionalMC,
        budget: scale_samples,
        failures,
        zero_hits: est == f64::NEG_INFINITY,
    })
}

/// `ln P(ball | τ, ψ) + ln(prior/proposal)` for one scale draw.
fn conditional_term<R: Rng + ?Sized>(prior: &GLPrior, q: &BallQuery, proposal: &ScaleProposal, rng: &mut R) -> Result<f64> {
    let center = q.center();
    let n = prior.n;
    let (tau, log_w_tau) = draw_tau(&prior.global, proposal, rng);
    let mut w = q.w();
    let mut log_weight = log_w_tau;
    let mut groups: Vec<Group> = Vec::new();
    match prior.local {
        LocalFamily::DiracOne => {
            if tau > 0.0 && tau.is_finite() {
                groups.push(Group { lambda: tau, m: n as f64, delta: center.l2_norm_sq() / tau });
            } else if tau == 0.0 {
                w -= center.l2_norm_sq();
            } else {
                return Ok(f64::NEG_INFINITY);
            }
        }
        LocalFamily::Exponential { lambda } => {
            let prior_exp = Exp::new(lambda).expect("validated rate");
            let mut support = center.iter().peekable();
            groups.reserve(n);
            for j in 0..n {
                let c = match support.peek() {
                    Some(&(k, v)) if k == j => {
                        support.next();
                        v
                    }
                    _ => 0.0,
                };
                let psi = match proposal {
                    ScaleProposal::Defensive { psi_rate, .. } if c != 0.0 => {
                        let (psi, lw) = defensive_exp(lambda, *psi_rate, rng);
                        log_weight += lw;
                        psi
                    }
                    _ => prior_exp.sample(rng),
                };
                let l = psi * tau;
                if l > 0.0 && l.is_finite() {
                    groups.push(Group { lambda: l, m: 1.0, delta: c * c / l });
                } else if l == 0.0 {
                    w -= c * c;
                } else {
                    return Ok(f64::NEG_INFINITY);
                }
            }
        }
    }
    if w <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if groups.is_empty() {
        return Ok(log_weight);
    }
    Ok(grouped_logcdf(&groups, w)?.log_p.value() + log_weight)
}

fn draw_tau<R: Rng + ?Sized>(global: &GlobalFamily, proposal: &ScaleProposal, rng: &mut R) -> (f64, f64) {
    match (proposal, global.has_density()) {
        (ScaleProposal::Defensive { tau_range: (lo, hi), .. }, true) => {
            let (llo, lhi) = (lo.ln(), hi.ln());
            let tau = if rng.random::<bool>() {
                global.sample(rng)
            } else {
                (llo + (lhi - llo) * rng.random::<f64>()).exp()
            };
            let lg = global.log_density(tau).expect("family has a density");
            let lh = if tau >= *lo && tau <= *hi { -(tau.ln() + (lhi - llo).ln()) } else { f64::NEG_INFINITY };
            let lq = log_add_exp(lg, lh) - std::f64::consts::LN_2;
            (tau, lg - lq)
        }
        _ => (global.sample(rng), 0.0),
    }
}

/// Draw from `½Exp(λ) + ½Exp(ρ)` with log weight `ln Exp(λ) − ln q`.
fn defensive_exp<R: Rng + ?Sized>(lambda: f64, rho: f64, rng: &mut R) -> (f64, f64) {
    let rate = if rng.random::<bool>() { lambda } else { rho };
    let psi = Exp::new(rate).expect("positive rate").sample(rng);
    let lp = lambda.ln() - lambda * psi;
    let lr = rho.ln() - rho * psi;
    let lq = log_add_exp(lp, lr) - std::f64::consts::LN_2;
    (psi, lp - lq)
}

/// Bias-corrected `ln mean(exp(vᵢ))` and its delete-1 jackknife standard error.
pub(crate) fn jackknife_log_mean(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let mut prefix = vec![f64::NEG_INFINITY; k + 1];
    for i in 0..k {
        prefix[i + 1] = log_add_exp(prefix[i], values[i]);
    }
    let full = prefix[k] - (k as f64).ln();
    if k == 1 || full == f64::NEG_INFINITY {
        return (full, if full == f64::NEG_INFINITY { f64::INFINITY } else { 0.0 });
    }
    let mut suffix = vec![f64::NEG_INFINITY; k + 1];
    for i in (0..k).rev() {
        suffix[i] = log_add_exp(suffix[i + 1], values[i]);
    }
    let ln_km1 = ((k - 1) as f64).ln();
    let loo: Vec<f64> = (0..k).map(|i| log_add_exp(prefix[i], suffix[i + 1]) - ln_km1).collect();
    if loo.iter().any(|v| !v.is_finite()) {
        // A single draw carries all the mass; the spread is not estimable.
        return (full, f64::INFINITY);
    }
    let mean = loo.iter().sum::<f64>() / k as f64;
    let var = loo.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() * (k - 1) as f64 / k as f64;
    let corrected = k as f64 * full - (k - 1) as f64 * mean;
    (corrected, var.sqrt())
}

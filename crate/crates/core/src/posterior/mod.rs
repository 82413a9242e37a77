//! Normal-means simulation, Gibbs samplers, posterior ball mass and the
//! small-ball ratio certificate.

mod diag;
mod draws;
mod geweke;
mod gibbs;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::prior::{GlobalFamily, LocalFamily, SparseVector};
use crate::rng::RngStream;
use crate::smallball::{
    conditional_mc, global_only_exact, naive_mc, BallQuery, ConcentrationEstimate, ConditionalOptions, PriorModel,
};
use crate::specfun::{grouped_logcdf, Group, LogProb};

pub use diag::{batch_means_se, effective_sample_size};
pub use geweke::{geweke_test, GewekeReport, GewekeStat, SamplerKind};
pub use gibbs::{
    gibbs_bayes_lasso, gibbs_global_only, gibbs_plugin_lasso, gibbs_spike_slab, log_laplace_gaussian_marginal,
    ChainDiagnostics, GibbsSettings, McmcChain,
};

/// `y = θ₀ + ε` with standard normal noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalMeansInstance {
    pub n: usize,
    pub theta0: SparseVector,
    pub y: Vec<f64>,
    pub stream: RngStream,
}

impl NormalMeansInstance {
    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn simulate_data(theta0: &SparseVector, stream: RngStream) -> NormalMeansInstance {
    let mut rng = stream.rng();
    let mut y = theta0.to_dense();
    for v in y.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += e;
    }
    NormalMeansInstance { n: theta0.n(), theta0: theta0.clone(), y, stream }
}

/// `√(A q ln(n/q))`.
pub fn minimax_radius(n: usize, q: usize, a: f64) -> Result<f64> {
    if !(q >= 1 && q < n) {
        return Err(domain!("need 1 ≤ q < n, got q = {q}, n = {n}"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain!("A must be positive, got {a}"));
    }
    Ok((a * q as f64 * (n as f64 / q as f64).ln()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallMass {
    pub mass: f64,
    /// Batch-means Monte Carlo standard error.
    pub mcse: f64,
}

/// Fraction of stored draws with `‖θ − θ₀‖ ≤ radius`.
pub fn posterior_ball_mass(chain: &McmcChain, theta0: &SparseVector, radius: f64) -> BallMass {
    let w = radius * radius;
    let hits: Vec<f64> = (0..chain.len())
        .map(|i| if theta0.dist_sq(chain.theta(i)) <= w { 1.0 } else { 0.0 })
        .collect();
    if hits.is_empty() {
        return BallMass { mass: f64::NAN, mcse: f64::INFINITY };
    }
    let mass = hits.iter().sum::<f64>() / hits.len() as f64;
    let mcse = if mass == 0.0 || mass == 1.0 { 0.0 } else { batch_means_se(&hits) };
    BallMass { mass, mcse }
}

/// Log posterior ball mass averaged over the Gaussian conditionals
/// `θ | τ, ψ, y`, using at most `max_draws` evenly spaced stored draws.
///
/// Returns the estimate and its jackknife standard error on the log scale.
pub fn rb_log_ball_mass(
    chain: &McmcChain,
    inst: &NormalMeansInstance,
    radius: f64,
    max_draws: usize,
) -> Result<(LogProb, f64)> {
    if chain.is_empty() || max_draws == 0 {
        return Err(Error::Invalid("no draws to average".into()));
    }
    if chain.n != inst.n {
        return Err(domain!("chain dimension {} does not match data dimension {}", chain.n, inst.n));
    }
    let w = radius * radius;
    let center = inst.theta0.to_dense();
    let step = chain.len().div_ceil(max_draws).max(1);
    let idx: Vec<usize> = (0..chain.len()).step_by(step).collect();
    let terms: Vec<Result<f64>> = idx
        .par_iter()
        .map(|&i| {
            let tau = chain.draws_tau[i];
            let mut wr = w;
            let mut groups = Vec::new();
            match chain.psi(i) {
                None => {
                    let k = tau / (1.0 + tau);
                    if k > 0.0 {
                        let d: f64 = inst.y.iter().zip(&center).map(|(y, c)| (k * y - c).powi(2)).sum();
                        groups.push(Group { lambda: k, m: inst.n as f64, delta: d / k });
                    } else {
                        wr -= inst.theta0.l2_norm_sq();
                    }
                }
                Some(psi) => {
                    for ((p, y), c) in psi.iter().zip(&inst.y).zip(&center) {
                        let v = p * tau;
                        let k = v / (1.0 + v);
                        if k > 0.0 {
                            groups.push(Group { lambda: k, m: 1.0, delta: (k * y - c).powi(2) / k });
                        } else {
                            wr -= c * c;
                        }
                    }
                }
            }
            if wr <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            if groups.is_empty() {
                return Ok(0.0);
            }
            Ok(grouped_logcdf(&groups, wr)?.log_p.value())
        })
        .collect();
    let values = terms.into_iter().collect::<Result<Vec<f64>>>()?;
    let (est, se) = crate::smallball::jackknife_log_mean(&values);
    Ok((LogProb::clamped(est), se))
}

/// `P(ball tₙ) / P(ball rₙ) · e^{rₙ²}` on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioCertificate {
    pub t_n: f64,
    pub r_n: f64,
    pub log_p_small: LogProb,
    pub log_p_big: LogProb,
    pub log_certificate: f64,
}

/// Estimates both prior ball probabilities with the best available route:
/// quadrature for global-only priors with a density, conditional Monte Carlo
/// for other global-local priors and naive Monte Carlo for the point-mass
/// mixture. `budget` is the number of draws for the Monte Carlo routes.
pub fn ratio_certificate(
    prior: &PriorModel,
    theta0: &SparseVector,
    t_n: f64,
    r_n: f64,
    budget: u64,
    stream: RngStream,
) -> Result<RatioCertificate> {
    if !(r_n > t_n && t_n > 0.0) {
        return Err(domain!("need 0 < t_n < r_n, got t_n = {t_n}, r_n = {r_n}"));
    }
    let estimate = |t: f64, s: RngStream| -> Result<ConcentrationEstimate> {
        let q = BallQuery::new(theta0.clone(), t)?;
        match prior {
            PriorModel::GlobalLocal(p) if p.local == LocalFamily::DiracOne && p.global.has_density() => {
                global_only_exact(p, &q, 400)
            }
            PriorModel::GlobalLocal(p) => conditional_mc(p, &q, budget, s, &ConditionalOptions::default()),
            PriorModel::PointMass(_) => naive_mc(prior, &q, budget, s),
        }
    };
    let small = estimate(t_n, stream.labeled("small"))?.log_p;
    let big = estimate(r_n, stream.labeled("big"))?.log_p;
    Ok(RatioCertificate {
        t_n,
        r_n,
        log_p_small: small,
        log_p_big: big,
        log_certificate: small.value() - big.value() + r_n * r_n,
    })
}

/// Mean and standard error of per-replicate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub mean: f64,
    pub se: f64,
    pub replicates: usize,
}

impl ReplicateSummary {
    pub fn of(values: &[f64]) -> Self {
        let r = values.len();
        let (mean, var) = diag::mean_var(values);
        ReplicateSummary { mean, se: (var / r as f64).sqrt(), replicates: r }
    }
}

/// Runs `f` on `replicates` independent substreams in parallel; the output is
/// ordered by replicate index.
pub fn over_replicates<T: Send>(
    replicates: usize,
    stream: RngStream,
    f: impl Fn(usize, RngStream) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..replicates).into_par_iter().map(|r| f(r, stream.substream(r as u64))).collect()
}

/// Sampler choice for [`posterior_ball_mass`] experiments.
pub fn run_sampler(kind: &SamplerKind, inst: &NormalMeansInstance, settings: GibbsSettings, stream: RngStream) -> Result<McmcChain> {
    match kind {
        SamplerKind::BayesLasso { lambda, global } => gibbs_bayes_lasso(inst, *lambda, global, settings, stream),
        SamplerKind::GlobalOnly { global } => gibbs_global_only(inst, global, settings, stream),
        SamplerKind::PluginLasso { lambda, tau_n } => gibbs_plugin_lasso(inst, *lambda, *tau_n, settings, stream),
        SamplerKind::SpikeSlab { prior } => gibbs_spike_slab(inst, &prior.with_n(inst.n), settings, stream),
    }
}

/// The prior family a sampler draws from, in dimension `n`.
pub fn sampler_prior(kind: &SamplerKind, n: usize) -> Result<PriorModel> {
    use crate::prior::GLPrior;
    Ok(match kind {
        SamplerKind::BayesLasso { lambda, global } => {
            GLPrior::new(global.clone(), LocalFamily::Exponential { lambda: *lambda }, n)?.into()
        }
        SamplerKind::GlobalOnly { global } => GLPrior::new(global.clone(), LocalFamily::DiracOne, n)?.into(),
        SamplerKind::PluginLasso { lambda, tau_n } => GLPrior::new(
            GlobalFamily::PluginDirac { tau_n: *tau_n },
            LocalFamily::Exponential { lambda: *lambda },
            n,
        )?
        .into(),
        SamplerKind::SpikeSlab { prior } => prior.with_n(n).into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{WeightedChiSquareSpec, weighted_noncentral_chi2_logcdf};

    #[test]
    fn data_is_reproducible() {
        let th = SparseVector::new(100, vec![3], vec![2.0]).unwrap();
        let a = simulate_data(&th, RngStream::new(7));
        let b = simulate_data(&th, RngStream::new(7));
        assert_eq!(a.y, b.y);
        assert_ne!(a.y, simulate_data(&th, RngStream::new(8)).y);
    }

    #[test]
    fn noise_has_unit_variance() {
        let n = 10_000;
        let inst = simulate_data(&SparseVector::zeros(n), RngStream::new(9));
        let ss: f64 = inst.y.iter().map(|v| v * v).sum();
        // E‖y − θ₀‖² = n, sd √(2n).
        assert!((ss - n as f64).abs() < 3.0 * (2.0 * n as f64).sqrt());
    }

    #[test]
    fn minimax_radius_cases() {
        let r = minimax_radius(1000, 1, 2.0).unwrap();
        assert!((r - (2.0 * 1000f64.ln()).sqrt()).abs() < 1e-12);
        assert!(minimax_radius(10, 10, 1.0).is_err());
        assert!(minimax_radius(100, 2, 1.0).unwrap() < minimax_radius(200, 2, 1.0).unwrap());
    }

    #[test]
    fn ridge_ball_mass_matches_exact_posterior() {
        let n = 3;
        let theta0 = SparseVector::new(n, vec![0], vec![1.0]).unwrap();
        let inst = simulate_data(&theta0, RngStream::new(10));
        // A narrow triangular density pins τ near 1, so θ | y is nearly N(y/2, ½).
        let grid: Vec<f64> = (0..=400).map(|i| 0.999 + 0.002 * i as f64 / 400.0).collect();
        let t = crate::prior::TabulatedDensity::from_fn(grid, |x| (1.0 - ((x - 1.0) / 0.001).abs()).max(0.0)).unwrap();
        let c = gibbs_global_only(
            &inst,
            &GlobalFamily::TabulatedDensity(t),
            GibbsSettings { iters: 200_000, burn_in: 1000, thin: 1 },
            RngStream::new(11),
        )
        .unwrap();
        let r = 1.2;
        let mass = posterior_ball_mass(&c, &theta0, r);
        let k = 0.5;
        let nc: Vec<f64> = inst.y.iter().zip(theta0.to_dense()).map(|(y, c)| (k * y - c).powi(2) / k).collect();
        let spec = WeightedChiSquareSpec::new(vec![k; n], nc, r * r).unwrap();
        let want = weighted_noncentral_chi2_logcdf(&spec).unwrap().log_p.prob();
        assert!((mass.mass - want).abs() < 3.0 * mass.mcse + 2e-3, "{mass:?} {want}");
        let (rb, _) = rb_log_ball_mass(&c, &inst, r, 50).unwrap();
        assert!((rb.prob() - want).abs() < 2e-3, "{} {want}", rb.prob());
    }

    #[test]
    fn ball_mass_edges_and_monotone() {
        let theta0 = SparseVector::zeros(5);
        let inst = simulate_data(&theta0, RngStream::new(12));
        let c = gibbs_global_only(&inst, &GlobalFamily::Exponential { rate: 1.0 }, GibbsSettings::new(2000), RngStream::new(13))
            .unwrap();
        assert_eq!(posterior_ball_mass(&c, &theta0, 0.0).mass, 0.0);
        assert_eq!(posterior_ball_mass(&c, &theta0, f64::INFINITY).mass, 1.0);
        let mut prev = 0.0;
        for r in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let m = posterior_ball_mass(&c, &theta0, r).mass;
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn certificate_near_equal_radii() {
        let p: PriorModel = crate::prior::GLPrior::iid_normal(50).into();
        let th = SparseVector::zeros(50);
        let c = ratio_certificate(&p, &th, 7.0 - 1e-9, 7.0, 200, RngStream::new(1)).unwrap();
        assert!((c.log_certificate - 49.0).abs() < 1e-6);
        assert!(ratio_certificate(&p, &th, 2.0, 1.0, 200, RngStream::new(1)).is_err());
    }
}

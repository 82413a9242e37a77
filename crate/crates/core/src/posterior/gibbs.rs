//! Gibbs samplers for the normal-means model under each prior family.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::diag::effective_sample_size;
use super::draws::{gig_half, slice_step, std_normal_above};
use super::NormalMeansInstance;
use crate::error::{domain, Result};
use crate::prior::{GlobalFamily, PointMassMixture};
use crate::rng::RngStream;
use crate::specfun::{log_add_exp, log_norm_cdf};

const THETA_SQ_FLOOR: f64 = 1e-300;
const SLICE_WIDTH: f64 = 2.0;

/// Run length, burn-in and thinning of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsSettings {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl GibbsSettings {
    /// `iters` sweeps with 20% burn-in and thinning by 5.
    pub fn new(iters: usize) -> Self {
        GibbsSettings { iters, burn_in: iters / 5, thin: 5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.iters == 0 || self.burn_in >= self.iters {
            return Err(domain!("need iters > burn_in and thin ≥ 1, got {self:?}"));
        }
        Ok(())
    }

    pub fn stored(&self) -> usize {
        (self.iters - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    /// Effective sample size of `‖θ‖²` across stored draws.
    pub ess_norm: f64,
    /// Effective sample size of the global draws (`τ`, or `π` for spike-and-slab).
    pub ess_global: f64,
    /// Mean number of log-density evaluations per slice update of `τ`.
    pub slice_evals_per_update: f64,
}

/// Stored draws after burn-in and thinning.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcChain {
    pub n: usize,
    /// Row-major, one row of length `n` per stored draw.
    pub draws_theta: Vec<f64>,
    /// Global variance `τ` per stored draw; for spike-and-slab, the mixing weight `π`.
    pub draws_tau: Vec<f64>,
    /// Local variances, row-major, for the exponential-local samplers.
    pub draws_psi: Option<Vec<f64>>,
    pub settings: GibbsSettings,
    pub stream: RngStream,
    pub diagnostics: ChainDiagnostics,
}

impl McmcChain {
    pub fn len(&self) -> usize {
        self.draws_tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws_tau.is_empty()
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.draws_theta[i * self.n..(i + 1) * self.n]
    }

    pub fn psi(&self, i: usize) -> Option<&[f64]> {
        self.draws_psi.as_ref().map(|p| &p[i * self.n..(i + 1) * self.n])
    }
}

/// A systematic-scan update of all unknowns given the data.
pub(crate) trait Kernel {
    fn sweep(&mut self, y: &[f64], rng: &mut dyn rand::RngCore) -> Result<()>;
    /// Replace the state by a draw from the prior.
    fn prior_draw(&mut self, rng: &mut dyn rand::RngCore);
    fn theta(&self) -> &[f64];
    /// `τ`, or `π` for spike-and-slab.
    fn global(&self) -> f64;
    fn psi(&self) -> Option<&[f64]>;
    fn slice_evals(&self) -> u64 {
        0
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Slice update of `ln τ` against `g(τ) Πⱼ N(θⱼ; 0, ψⱼτ)`; `s = Σθⱼ²/ψⱼ`.
fn update_tau<R: Rng + ?Sized>(global: &GlobalFamily, tau: f64, n: usize, s: f64, evals: &mut u64, rng: &mut R) -> Result<f64> {
    let half_n = n as f64 / 2.0;
    let count = std::cell::Cell::new(0u64);
    let f = |v: f64| {
        count.set(count.get() + 1);
        let lg = global.log_density(v.exp()).unwrap_or(f64::NEG_INFINITY);
        lg + v - half_n * v - 0.5 * s * (-v).exp()
    };
    let v = slice_step(tau.ln(), f, SLICE_WIDTH, rng)?;
    *evals += count.get();
    Ok(v.exp())
}

fn initial_tau(global: &GlobalFamily, rng: &mut dyn rand::RngCore) -> f64 {
    match global {
        GlobalFamily::PluginDirac { tau_n } => *tau_n,
        g if g.log_density(1.0).is_some_and(f64::is_finite) => 1.0,
        g => g.sample(rng),
    }
}

/// Exponential-local (Bayes lasso) kernel, optionally with `τ` or `ψ` frozen.
pub(crate) struct LassoKernel {
    pub lambda: f64,
    pub global: GlobalFamily,
    pub update_psi: bool,
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    pub tau: f64,
    pub evals: u64,
}

impl LassoKernel {
    pub fn new(n: usize, lambda: f64, global: GlobalFamily, rng: &mut dyn rand::RngCore) -> Self {
        let tau = initial_tau(&global, rng);
        LassoKernel { lambda, global, update_psi: true, theta: vec![0.0; n], psi: vec![1.0; n], tau, evals: 0 }
    }
}

impl Kernel for LassoKernel {
    fn sweep(&mut self, y: &[f64], rng: &mut dyn rand::RngCore) -> Result<()> {
        for ((th, &p), &yj) in self.theta.iter_mut().zip(&self.psi).zip(y) {
            let v = p * self.tau;
            let k = v / (1.0 + v);
            *th = k * yj + k.sqrt() * normal(rng);
        }
        if self.update_psi {
            let a = 2.0 * self.lambda;
            for (p, &th) in self.psi.iter_mut().zip(&self.theta) {
                let b = (th * th).max(THETA_SQ_FLOOR) / self.tau;
                *p = gig_half(a, b, rng).max(f64::MIN_POSITIVE);
            }
        }
        if !matches!(self.global, GlobalFamily::PluginDirac { .. }) {
            let s: f64 = self.theta.iter().zip(&self.psi).map(|(t, p)| t * t / p).sum();
            self.tau = update_tau(&self.global, self.tau, self.theta.len(), s, &mut self.evals, rng)?;
        }
        Ok(())
    }

    fn prior_draw(&mut self, rng: &mut dyn rand::RngCore) {
        self.tau = self.global.sample(rng);
        let e = Exp::new(self.lambda).expect("validated rate");
        for (p, th) in self.psi.iter_mut().zip(self.theta.iter_mut()) {
            *p = e.sample(rng);
            *th = (*p * self.tau).sqrt() * normal(rng);
        }
    }

    fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn global(&self) -> f64 {
        self.tau
    }

    fn psi(&self) -> Option<&[f64]> {
        Some(&self.psi)
    }

    fn slice_evals(&self) -> u64 {
        self.evals
    }
}

/// Unit local scales, global variance by slice sampling.
pub(crate) struct GlobalKernel {
    pub global: GlobalFamily,
    pub theta: Vec<f64>,
    pub tau: f64,
    pub evals: u64,
}

impl Kernel for GlobalKernel {
    fn sweep(&mut self, y: &[f64], rng: &mut dyn rand::RngCore) -> Result<()> {
        let k = self.tau / (1.0 + self.tau);
        let sd = k.sqrt();
        for (th, &yj) in self.theta.iter_mut().zip(y) {
            *th = k * yj + sd * normal(rng);
        }
        let s: f64 = self.theta.iter().map(|t| t * t).sum();
        self.tau = update_tau(&self.global, self.tau, self.theta.len(), s, &mut self.evals, rng)?;
        Ok(())
    }

    fn prior_draw(&mut self, rng: &mut dyn rand::RngCore) {
        self.tau = self.global.sample(rng);
        let sd = self.tau.sqrt();
        for th in self.theta.iter_mut() {
            *th = sd * normal(rng);
        }
    }

    fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn global(&self) -> f64 {
        self.tau
    }

    fn psi(&self) -> Option<&[f64]> {
        None
    }

    fn slice_evals(&self) -> u64 {
        self.evals
    }
}

/// Point mass at zero plus Laplace slab, with a Beta prior on the weight.
pub(crate) struct SpikeSlabKernel {
    pub prior: PointMassMixture,
    pub theta: Vec<f64>,
    pub pi: f64,
}

/// `ln ∫ N(y; θ, 1) Laplace(θ; s) dθ`.
pub fn log_laplace_gaussian_marginal(y: f64, s: f64) -> f64 {
    let (pos, neg) = laplace_pieces(y, s);
    (0.5 / (s * s)) - (2.0 * s).ln() + log_add_exp(pos, neg)
}

/// Log weights of the positive and negative halves of the slab posterior.
fn laplace_pieces(y: f64, s: f64) -> (f64, f64) {
    let r = 1.0 / s;
    (-y * r + log_norm_cdf(y - r), y * r + log_norm_cdf(-y - r))
}

fn log_std_normal_pdf(y: f64) -> f64 {
    -0.5 * y * y - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

impl Kernel for SpikeSlabKernel {
    fn sweep(&mut self, y: &[f64], rng: &mut dyn rand::RngCore) -> Result<()> {
        let s = self.prior.slab_scale;
        let r = 1.0 / s;
        let (lp, lq) = (self.pi.ln(), (-self.pi).ln_1p());
        let mut included = 0usize;
        for (th, &yj) in self.theta.iter_mut().zip(y) {
            let slab = lp + log_laplace_gaussian_marginal(yj, s);
            let spike = lq + log_std_normal_pdf(yj);
            let p_slab = (slab - log_add_exp(slab, spike)).exp();
            if rng.random::<f64>() < p_slab {
                included += 1;
                let (pos, neg) = laplace_pieces(yj, s);
                let p_pos = (pos - log_add_exp(pos, neg)).exp();
                *th = if rng.random::<f64>() < p_pos {
                    // N(y − 1/s, 1) restricted to θ > 0
                    let m = yj - r;
                    m + std_normal_above(-m, rng)
                } else {
                    let m = yj + r;
                    m - std_normal_above(m, rng)
                };
            } else {
                *th = 0.0;
            }
        }
        let n = self.theta.len() as f64;
        let a = self.prior.pi_prior.a + included as f64;
        let b = self.prior.pi_prior.b + n - included as f64;
        self.pi = Beta::new(a, b).expect("positive parameters").sample(rng);
        Ok(())
    }

    fn prior_draw(&mut self, rng: &mut dyn rand::RngCore) {
        let p = &self.prior;
        self.pi = Beta::new(p.pi_prior.a, p.pi_prior.b).expect("validated Beta").sample(rng);
        let slab = Exp::new(1.0 / p.slab_scale).expect("validated scale");
        for th in self.theta.iter_mut() {
            *th = if rng.random::<f64>() < self.pi {
                let m = slab.sample(rng);
                if rng.random::<bool>() {
                    m
                } else {
                    -m
                }
            } else {
                0.0
            };
        }
    }

    fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn global(&self) -> f64 {
        self.pi
    }

    fn psi(&self) -> Option<&[f64]> {
        None
    }
}

pub(crate) fn run_chain<K: Kernel>(
    mut kernel: K,
    y: &[f64],
    settings: GibbsSettings,
    stream: RngStream,
    rng: &mut dyn rand::RngCore,
) -> Result<McmcChain> {
    settings.validate()?;
    let n = y.len();
    let stored = settings.stored();
    let mut draws_theta = Vec::with_capacity(stored * n);
    let mut draws_tau = Vec::with_capacity(stored);
    let mut draws_psi = kernel.psi().map(|_| Vec::with_capacity(stored * n));
    let mut updates = 0u64;
    for it in 0..settings.iters {
        kernel.sweep(y, rng)?;
        updates += 1;
        if it >= settings.burn_in && (it - settings.burn_in + 1) % settings.thin == 0 {
            draws_theta.extend_from_slice(kernel.theta());
            draws_tau.push(kernel.global());
            if let (Some(d), Some(p)) = (draws_psi.as_mut(), kernel.psi()) {
                d.extend_from_slice(p);
            }
        }
    }
    let norms: Vec<f64> = draws_theta.chunks(n).map(|r| r.iter().map(|t| t * t).sum()).collect();
    let diagnostics = ChainDiagnostics {
        ess_norm: effective_sample_size(&norms),
        ess_global: effective_sample_size(&draws_tau),
        slice_evals_per_update: kernel.slice_evals() as f64 / updates as f64,
    };
    Ok(McmcChain { n, draws_theta, draws_tau, draws_psi, settings, stream, diagnostics })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain!("lambda must be positive, got {lambda}"));
    }
    Ok(())
}

/// Bayes lasso: exponential local variances with rate `lambda`, global `τ ~ g`.
pub fn gibbs_bayes_lasso(
    inst: &NormalMeansInstance,
    lambda: f64,
    global: &GlobalFamily,
    settings: GibbsSettings,
    stream: RngStream,
) -> Result<McmcChain> {
    check_lambda(lambda)?;
    global.validate()?;
    if matches!(global, GlobalFamily::TabulatedDensity(_)) {
        return Err(domain!("the Bayes lasso sampler takes a parametric global family"));
    }
    let mut rng = stream.rng();
    let kernel = LassoKernel::new(inst.n(), lambda, global.clone(), &mut rng);
    run_chain(kernel, &inst.y, settings, stream, &mut rng)
}

/// Unit local scales with `τ ~ g`.
pub fn gibbs_global_only(
    inst: &NormalMeansInstance,
    global: &GlobalFamily,
    settings: GibbsSettings,
    stream: RngStream,
) -> Result<McmcChain> {
    global.validate()?;
    if !global.has_density() {
        return Err(domain!("the global-only sampler needs a global density"));
    }
    let mut rng = stream.rng();
    let tau = initial_tau(global, &mut rng);
    let kernel = GlobalKernel { global: global.clone(), theta: vec![0.0; inst.n()], tau, evals: 0 };
    run_chain(kernel, &inst.y, settings, stream, &mut rng)
}

/// Bayes lasso with the global variance fixed at `tau_n`.
pub fn gibbs_plugin_lasso(
    inst: &NormalMeansInstance,
    lambda: f64,
    tau_n: f64,
    settings: GibbsSettings,
    stream: RngStream,
) -> Result<McmcChain> {
    gibbs_bayes_lasso(inst, lambda, &GlobalFamily::PluginDirac { tau_n }, settings, stream)
}

/// Blocked Gibbs over inclusion, value and weight for the point-mass mixture.
pub fn gibbs_spike_slab(
    inst: &NormalMeansInstance,
    prior: &PointMassMixture,
    settings: GibbsSettings,
    stream: RngStream,
) -> Result<McmcChain> {
    prior.validate()?;
    if prior.n != inst.n() {
        return Err(domain!("prior dimension {} does not match data dimension {}", prior.n, inst.n()));
    }
    let mut rng = stream.rng();
    let pi = prior.pi_prior.a / (prior.pi_prior.a + prior.pi_prior.b);
    let kernel = SpikeSlabKernel { prior: prior.clone(), theta: vec![0.0; inst.n()], pi };
    run_chain(kernel, &inst.y, settings, stream, &mut rng)
}

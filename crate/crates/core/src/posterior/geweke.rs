//! Joint-distribution ("getting it right") checks of the samplers: marginal
//! moments from forward simulation of `(θ, y)` must match those from
//! alternating a Gibbs sweep with a fresh `y | θ`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::diag::{batch_means_se, effective_sample_size, mean_var};
use super::gibbs::{GlobalKernel, Kernel, LassoKernel, SpikeSlabKernel};
use crate::error::{domain, Result};
use crate::prior::{GlobalFamily, PointMassMixture};
use crate::rng::RngStream;

/// Which sampler to check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "kebab-case")]
pub enum SamplerKind {
    BayesLasso { lambda: f64, global: GlobalFamily },
    GlobalOnly { global: GlobalFamily },
    PluginLasso { lambda: f64, tau_n: f64 },
    SpikeSlab { prior: PointMassMixture },
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::BayesLasso { .. } => "bayes-lasso",
            SamplerKind::GlobalOnly { .. } => "global-only",
            SamplerKind::PluginLasso { .. } => "plugin-lasso",
            SamplerKind::SpikeSlab { .. } => "spike-slab",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GewekeStat {
    pub name: &'static str,
    pub forward_mean: f64,
    pub chain_mean: f64,
    pub z: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GewekeReport {
    pub sampler: &'static str,
    pub stats: Vec<GewekeStat>,
}

impl GewekeReport {
    pub fn passes(&self, z_max: f64, min_ess: f64) -> bool {
        self.stats.iter().all(|s| s.z.abs() < z_max && s.ess >= min_ess)
    }
}

fn build(kind: &SamplerKind, n: usize, rng: &mut dyn rand::RngCore) -> Result<(Box<dyn Kernel>, [&'static str; 3])> {
    Ok(match kind {
        SamplerKind::BayesLasso { lambda, global } => {
            global.validate()?;
            (Box::new(LassoKernel::new(n, *lambda, global.clone(), rng)), ["theta_1", "tau", "norm_sq"])
        }
        SamplerKind::PluginLasso { lambda, tau_n } => {
            let g = GlobalFamily::PluginDirac { tau_n: *tau_n };
            g.validate()?;
            (Box::new(LassoKernel::new(n, *lambda, g, rng)), ["theta_1", "psi_1", "norm_sq"])
        }
        SamplerKind::GlobalOnly { global } => {
            global.validate()?;
            if !global.has_density() {
                return Err(domain!("global-only check needs a global density"));
            }
            let k = GlobalKernel { global: global.clone(), theta: vec![0.0; n], tau: 1.0, evals: 0 };
            (Box::new(k), ["theta_1", "tau", "norm_sq"])
        }
        SamplerKind::SpikeSlab { prior } => {
            let prior = prior.with_n(n);
            prior.validate()?;
            let k = SpikeSlabKernel { prior, theta: vec![0.0; n], pi: 0.5 };
            (Box::new(k), ["theta_1", "pi", "norm_sq"])
        }
    })
}

fn stats(k: &dyn Kernel, plugin: bool) -> [f64; 3] {
    let th = k.theta();
    let second = if plugin { k.psi().map_or(f64::NAN, |p| p[0]) } else { k.global() };
    [th[0], second, th.iter().map(|t| t * t).sum()]
}

/// Compares `forward` independent prior draws with `chain` successive-conditional
/// iterations in dimension `n`.
pub fn geweke_test(kind: &SamplerKind, n: usize, forward: usize, chain: usize, stream: RngStream) -> Result<GewekeReport> {
    if n == 0 || forward < 100 || chain < 100 {
        return Err(domain!("geweke test needs n ≥ 1 and at least 100 forward and chain draws"));
    }
    let plugin = matches!(kind, SamplerKind::PluginLasso { .. });
    let mut rng = stream.labeled("forward").rng();
    let (mut k, names) = build(kind, n, &mut rng)?;
    let mut fwd = vec![Vec::with_capacity(forward); 3];
    for _ in 0..forward {
        k.prior_draw(&mut rng);
        for (col, v) in fwd.iter_mut().zip(stats(k.as_ref(), plugin)) {
            col.push(v);
        }
    }

    let mut rng = stream.labeled("chain").rng();
    k.prior_draw(&mut rng);
    let mut y = vec![0.0; n];
    let mut sc = vec![Vec::with_capacity(chain); 3];
    for _ in 0..chain {
        for (yj, &t) in y.iter_mut().zip(k.theta()) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *yj = t + z;
        }
        k.sweep(&y, &mut rng)?;
        for (col, v) in sc.iter_mut().zip(stats(k.as_ref(), plugin)) {
            col.push(v);
        }
    }

    let stats = names
        .iter()
        .zip(fwd.iter().zip(&sc))
        .map(|(&name, (f, c))| {
            let (mf, vf) = mean_var(f);
            let (mc, _) = mean_var(c);
            let se = (vf / f.len() as f64 + batch_means_se(c).powi(2)).sqrt();
            let z = if se > 0.0 { (mf - mc) / se } else { 0.0 };
            GewekeStat { name, forward_mean: mf, chain_mean: mc, z, ess: effective_sample_size(c) }
        })
        .collect();
    Ok(GewekeReport { sampler: kind.name(), stats })
}

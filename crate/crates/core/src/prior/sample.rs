use rand::seq::index;
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Exp, StandardNormal};

use super::{GLPrior, LocalFamily, PointMassMixture, SparseVector};

/// One draw of the global and local variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Scales {
    pub tau: f64,
    pub psi: Vec<f64>,
}

pub fn sample_scales<R: Rng + ?Sized>(prior: &GLPrior, rng: &mut R) -> Scales {
    let tau = prior.global.sample(rng);
    let psi = match prior.local {
        LocalFamily::DiracOne => vec![1.0; prior.n],
        LocalFamily::Exponential { lambda } => {
            let e = Exp::new(lambda).expect("validated rate");
            (0..prior.n).map(|_| e.sample(rng)).collect()
        }
    };
    Scales { tau, psi }
}

pub fn sample_theta<R: Rng + ?Sized>(prior: &GLPrior, rng: &mut R) -> Vec<f64> {
    let s = sample_scales(prior, rng);
    s.psi
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(rng);
            (p * s.tau).sqrt() * z
        })
        .collect()
}

/// Draws `π` once, then the support as a `Binomial(n, π)` subset, with
/// Laplace slab values.
pub fn sample_point_mass<R: Rng + ?Sized>(prior: &PointMassMixture, rng: &mut R) -> SparseVector {
    let pi = Beta::new(prior.pi_prior.a, prior.pi_prior.b).expect("validated Beta").sample(rng);
    let k = Binomial::new(prior.n as u64, pi.clamp(0.0, 1.0)).expect("valid probability").sample(rng) as usize;
    let mut support = index::sample(rng, prior.n, k).into_vec();
    support.sort_unstable();
    let slab = Exp::new(1.0 / prior.slab_scale).expect("validated scale");
    let values = support
        .iter()
        .map(|_| {
            let m = slab.sample(rng);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    SparseVector::new(prior.n, support, values).expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::GlobalFamily;
    use crate::rng::RngStream;

    #[test]
    fn degenerate_scales() {
        let p = GLPrior::new(GlobalFamily::PluginDirac { tau_n: 0.25 }, LocalFamily::DiracOne, 3).unwrap();
        let s = sample_scales(&p, &mut RngStream::new(1).rng());
        assert_eq!(s, Scales { tau: 0.25, psi: vec![1.0; 3] });
    }

    #[test]
    fn half_cauchy_median_is_scale() {
        let p = GLPrior::new(GlobalFamily::HalfCauchy { scale: 1.0 }, LocalFamily::DiracOne, 1).unwrap();
        let mut rng = RngStream::new(2).rng();
        let n = 1_000_000;
        let below = (0..n).filter(|_| p.global.sample(&mut rng) < 1.0).count() as f64 / n as f64;
        assert!((below - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn exponential_local_mean() {
        let p = GLPrior::new(GlobalFamily::PluginDirac { tau_n: 1.0 }, LocalFamily::Exponential { lambda: 2.0 }, 1000).unwrap();
        let mut rng = RngStream::new(3).rng();
        let draws: Vec<f64> = (0..100).flat_map(|_| sample_scales(&p, &mut rng).psi).collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        // sd of Exp(2) is 1/2
        assert!((m - 0.5).abs() < 3.0 * 0.5 / (draws.len() as f64).sqrt());
    }

    #[test]
    fn iid_normal_variance() {
        let p = GLPrior::iid_normal(10);
        let mut rng = RngStream::new(4).rng();
        let draws: Vec<f64> = (0..100_000).flat_map(|_| sample_theta(&p, &mut rng)).collect();
        let k = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / k;
        let var = draws.iter().map(|x| x * x).sum::<f64>() / k;
        assert!(mean.abs() < 3.0 / k.sqrt());
        // Var(θ²) = 2 for N(0, 1)
        assert!((var - 1.0).abs() < 3.0 * (2.0 / k).sqrt());
    }

    #[test]
    fn point_mass_support_size() {
        let n = 50;
        let p = PointMassMixture::new(n);
        let mut rng = RngStream::new(5).rng();
        let draws = 100_000;
        let sizes: Vec<f64> = (0..draws).map(|_| sample_point_mass(&p, &mut rng).q() as f64).collect();
        let mean = sizes.iter().sum::<f64>() / draws as f64;
        let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let want = n as f64 / (n as f64 + 2.0);
        assert!((mean - want).abs() < 3.0 * (var / draws as f64).sqrt(), "{mean} vs {want}");
    }

    #[test]
    fn point_mass_vanishing_weight() {
        let mut p = PointMassMixture::new(20);
        p.pi_prior.b = 1e9;
        let mut rng = RngStream::new(6).rng();
        let empty = (0..10_000).filter(|_| sample_point_mass(&p, &mut rng).q() == 0).count();
        assert!(empty as f64 / 10_000.0 > 0.999);
    }
}

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::quad::{integrate, QuadOptions};
use crate::rng::RngStream;
use crate::specfun::ln_gamma;

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-10, max_intervals: 4000 }
}

/// `∫_{Σxⱼ ≤ 1} h(Σxⱼ) Π xⱼ^{αⱼ−1} dx` as `[ΠΓ(αⱼ)/Γ(A)] ∫₀¹ h(t) t^{A−1} dt`,
/// `A = Σαⱼ`, integrated in `v = t^A`.
pub fn dirichlet_reduce(h: impl Fn(f64) -> f64, alphas: &[f64]) -> Result<f64> {
    if alphas.is_empty() {
        return Err(domain!("need at least one exponent"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(domain!("Dirichlet exponents must be positive, got {a}"));
    }
    let total: f64 = alphas.iter().sum();
    let mut ln_c = -ln_gamma(total)?;
    for &a in alphas {
        ln_c += ln_gamma(a)?;
    }
    let r = integrate(|v| h(v.powf(1.0 / total)), 0.0, 1.0, opts())?;
    Ok(ln_c.exp() * r.value / total)
}

/// `∫_{Σxⱼ ≤ 1} Π xⱼ^{−1/2} / [Σ qⱼxⱼ + q₀]^{n/2−1} dx` through its
/// one-dimensional form `Γ(½)ⁿ/Γ(n/2) · q₀ (n/2−1) ∫₀¹ x^{n/2−2}(1−x)/Π√(qⱼx+q₀) dx`,
/// integrated in `v = x^{n/2−1}`.
pub fn dickey_reduce(q0: f64, qs: &[f64]) -> Result<f64> {
    let n = qs.len();
    if n < 3 {
        return Err(domain!("need at least 3 coordinates, got {n}"));
    }
    if !(q0 > 0.0 && q0.is_finite()) {
        return Err(domain!("q₀ must be positive, got {q0}"));
    }
    if let Some(q) = qs.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
        return Err(domain!("weights must be nonnegative, got {q}"));
    }
    let k = n as f64 / 2.0 - 1.0;
    let f = |v: f64| {
        let x = v.powf(1.0 / k);
        let ln_den: f64 = qs.iter().map(|q| 0.5 * (q * x + q0).ln()).sum();
        (1.0 - x) * (-ln_den).exp()
    };
    let r = integrate(f, 0.0, 1.0, opts())?;
    let ln_c = n as f64 * ln_gamma(0.5)? - ln_gamma(n as f64 / 2.0)?;
    Ok(ln_c.exp() * q0 * r.value)
}

/// Monte Carlo estimate of `∫_{Σxⱼ ≤ 1} f(x) Π xⱼ^{αⱼ−1} dx` with its standard
/// error, sampling `x` as the leading coordinates of a `Dirichlet(α, 1)` draw.
pub fn simplex_mc(f: impl Fn(&[f64]) -> f64 + Sync, alphas: &[f64], samples: u64, stream: RngStream) -> Result<(f64, f64)> {
    const CHUNK: u64 = 4096;
    if samples < 2 {
        return Err(domain!("need at least 2 samples"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(domain!("Dirichlet exponents must be positive, got {a}"));
    }
    let gammas: Vec<Gamma<f64>> = alphas.iter().map(|&a| Gamma::new(a, 1.0).expect("positive shape")).collect();
    let last = Gamma::new(1.0, 1.0).expect("unit shape");
    let (s, s2) = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.substream(k).rng();
            let mut x = vec![0.0; alphas.len()];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..CHUNK.min(samples - k * CHUNK) {
                let mut total = last.sample(&mut rng);
                for (xi, g) in x.iter_mut().zip(&gammas) {
                    *xi = g.sample(&mut rng);
                    total += *xi;
                }
                x.iter_mut().for_each(|xi| *xi /= total);
                let v = f(&x);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let total: f64 = alphas.iter().sum();
    let norm: f64 = alphas.iter().map(|&a| ln_gamma(a)).sum::<Result<f64>>()? - ln_gamma(total + 1.0)?;
    let k = samples as f64;
    let mean = s / k;
    let var = (s2 / k - mean * mean).max(0.0) * k / (k - 1.0);
    let c = norm.exp();
    Ok((c * mean, c * (var / k).sqrt()))
}

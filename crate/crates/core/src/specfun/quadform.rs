use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::erf::log_norm_cdf;
use super::gamma::ln_gamma_unchecked;
use super::incgamma::{chi2_logcdf_real, ln_gamma_p};
use super::logsum::{log1mexp, lse_nonempty};
use super::LogProb;
use crate::error::{domain, Error, Result};
use crate::quad::{integrate_with_breaks, wynn_epsilon, QuadOptions};

/// `P(Σⱼ λⱼ Zⱼ ≤ w)` with `Zⱼ ~ χ²₁(δⱼ²)` independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedChiSquareSpec {
    weights: Vec<f64>,
    noncentralities: Vec<f64>,
    threshold: f64,
}

impl WeightedChiSquareSpec {
    pub fn new(weights: Vec<f64>, noncentralities: Vec<f64>, threshold: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(domain!("at least one weight is required"));
        }
        if weights.len() != noncentralities.len() {
            return Err(domain!(
                "{} weights but {} noncentralities",
                weights.len(),
                noncentralities.len()
            ));
        }
        if let Some(l) = weights.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(domain!("weights must be finite and positive, got {l}"));
        }
        if let Some(d) = noncentralities.iter().find(|&&d| !(d >= 0.0 && d.is_finite())) {
            return Err(domain!("noncentralities must be finite and nonnegative, got {d}"));
        }
        if !(threshold >= 0.0) {
            return Err(domain!("threshold must be nonnegative, got {threshold}"));
        }
        Ok(WeightedChiSquareSpec { weights, noncentralities, threshold })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noncentralities(&self) -> &[f64] {
        &self.noncentralities
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Coordinates pooled by identical weight.
    pub(crate) fn groups(&self) -> Vec<Group> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]));
        let mut out: Vec<Group> = Vec::new();
        for i in idx {
            let (l, d) = (self.weights[i], self.noncentralities[i]);
            match out.last_mut() {
                Some(g) if g.lambda == l => {
                    g.m += 1.0;
                    g.delta += d;
                }
                _ => out.push(Group { lambda: l, m: 1.0, delta: d }),
            }
        }
        out
    }
}

/// `m` coordinates sharing weight `lambda`, with total noncentrality `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Group {
    pub lambda: f64,
    pub m: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdfMethod {
    Exact,
    Imhof,
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFormCdf {
    pub log_p: LogProb,
    pub method: CdfMethod,
}

pub fn weighted_noncentral_chi2_logcdf(spec: &WeightedChiSquareSpec) -> Result<QuadFormCdf> {
    grouped_logcdf(&spec.groups(), spec.threshold)
}

const POISSON_MIXTURE_MAX_MEAN: f64 = 2000.0;
const PRESCREEN_EXPONENT: f64 = -40.0;
const IMHOF_MIN_LOG_P: f64 = -30.0;
const IMHOF_MAX_REL_ERR: f64 = 1e-3;
const MAX_PANELS: usize = 4000;
/// Lower-tail exponents below this use the leading saddlepoint term alone.
const FAR_TAIL_EXPONENT: f64 = -1e5;

pub(crate) fn grouped_logcdf(groups: &[Group], w: f64) -> Result<QuadFormCdf> {
    let exact = |v: f64| Ok(QuadFormCdf { log_p: LogProb::clamped(v), method: CdfMethod::Exact });
    if groups.is_empty() {
        return Err(domain!("empty quadratic form"));
    }
    if w == 0.0 {
        return exact(f64::NEG_INFINITY);
    }
    if w.is_infinite() {
        return exact(0.0);
    }
    if let [g] = groups {
        if g.delta == 0.0 {
            return exact(chi2_logcdf_real(g.m, w / g.lambda)?.value());
        }
        if g.m == 1.0 {
            return exact(gaussian_interval(g.delta.sqrt(), (w / g.lambda).sqrt()));
        }
        if g.delta / 2.0 <= POISSON_MIXTURE_MAX_MEAN {
            return exact(poisson_mixture(g, w)?);
        }
    }

    let sp = Saddle::solve(groups, w)?;
    if sp.s > 0.0 && sp.exponent < PRESCREEN_EXPONENT {
        // Upper tail below e⁻⁴⁰: ln P = ln(1 − ε) ≈ −ε to full precision,
        // with ε from the leading saddlepoint term.
        let eps = (sp.exponent - (sp.s * (2.0 * PI * sp.k2).sqrt()).ln()).exp();
        return Ok(QuadFormCdf { log_p: LogProb::clamped(-eps), method: CdfMethod::Tilted });
    }
    if sp.s < 0.0 && sp.exponent < FAR_TAIL_EXPONENT {
        let v = sp.exponent - (-sp.s * (2.0 * PI * sp.k2).sqrt()).ln();
        return Ok(QuadFormCdf { log_p: LogProb::clamped(v), method: CdfMethod::Tilted });
    }
    if sp.exponent >= PRESCREEN_EXPONENT {
        if let Ok((p, err)) = imhof(groups, w) {
            if p > 0.0 && p.ln() >= IMHOF_MIN_LOG_P && err <= IMHOF_MAX_REL_ERR * p {
                return Ok(QuadFormCdf { log_p: LogProb::clamped(p.ln()), method: CdfMethod::Imhof });
            }
        }
    }
    match tilted(groups, w, &sp) {
        Ok(v) => Ok(QuadFormCdf { log_p: LogProb::clamped(v), method: CdfMethod::Tilted }),
        Err(e) => Err(Error::Resolution(format!(
            "quadratic-form CDF unresolved at w = {w} (saddle exponent {:.3}): {e}",
            sp.exponent
        ))),
    }
}

/// `ln[Φ(μ + r) − Φ(μ − r)]` for `μ, r ≥ 0`.
fn gaussian_interval(mu: f64, r: f64) -> f64 {
    let hi = log_norm_cdf(r - mu);
    let lo = log_norm_cdf(-r - mu);
    hi + log1mexp(lo - hi)
}

/// Single group: `Σⱼ Pois(j; Δ/2) · P(χ²_{m+2j} ≤ w/λ)`.
fn poisson_mixture(g: &Group, w: f64) -> Result<f64> {
    let mu = g.delta / 2.0;
    let x = w / (2.0 * g.lambda);
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut terms = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut j = 0u64;
    loop {
        let jf = j as f64;
        let log_pois = -mu + jf * mu.ln() - ln_gamma_unchecked(jf + 1.0);
        let t = log_pois + ln_gamma_p(g.m / 2.0 + jf, x)?;
        best = best.max(t);
        terms.push(t);
        if jf > mu && (t < best - 40.0 || t == f64::NEG_INFINITY) {
            break;
        }
        j += 1;
        if j > 10_000_000 {
            return Err(Error::Convergence("Poisson mixture did not terminate".into()));
        }
    }
    Ok(lse_nonempty(&terms))
}

/// Cumulant generating function data at a real point of the tilt.
#[derive(Debug, Clone, Copy)]
struct Saddle {
    s: f64,
    k: f64,
    k2: f64,
    /// `K(ŝ) − ŝw`, the leading log-probability of the tail.
    exponent: f64,
}

fn cumulants(groups: &[Group], s: f64) -> (f64, f64, f64) {
    let (mut k, mut k1, mut k2) = (0.0, 0.0, 0.0);
    for g in groups {
        let a = 1.0 - 2.0 * g.lambda * s;
        let l = g.lambda / a;
        k += -0.5 * g.m * a.ln() + g.delta * g.lambda * s / a;
        k1 += g.m * l + g.delta * l / a;
        k2 += 2.0 * g.m * l * l + 4.0 * g.delta * l * l / a;
    }
    (k, k1, k2)
}

impl Saddle {
    fn solve(groups: &[Group], w: f64) -> Result<Self> {
        let lmax = groups.iter().map(|g| g.lambda).fold(0.0, f64::max);
        let smax = 0.5 / lmax;
        let mean = cumulants(groups, 0.0).1;
        let (mut lo, mut hi) = if w < mean {
            let mut lo = -1.0 / lmax;
            while cumulants(groups, lo).1 > w {
                lo *= 2.0;
                if !lo.is_finite() {
                    return Err(Error::Convergence("saddlepoint bracket diverged".into()));
                }
            }
            (lo, 0.0)
        } else {
            (0.0, smax)
        };
        let mut s = if w < mean { 0.5 * lo } else { 0.5 * hi };
        for _ in 0..300 {
            let (_, k1, k2) = cumulants(groups, s);
            let f = k1 - w;
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let newton = s - f / k2;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - s).abs() <= 1e-15 * s.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
                s = next;
                break;
            }
            s = next;
        }
        let (k, _, k2) = cumulants(groups, s);
        Ok(Saddle { s, k, k2, exponent: k - s * w })
    }
}

struct Oscillatory {
    value: f64,
    error: f64,
}

fn panel_opts(abs_tol: f64) -> QuadOptions {
    QuadOptions { abs_tol, rel_tol: 1e-12, max_intervals: 1000 }
}

/// `∫₀^∞ f` for an integrand whose tail oscillates with half-period `h`:
/// an adaptive head on `[0, u0]`, then half-period panels whose partial sums
/// are extrapolated by the epsilon algorithm. `tail(U)` bounds `∫_U^∞ |f|`;
/// `tol(I)` is the absolute accuracy wanted for an integral of size `I`.
fn oscillatory_integral<F, T, E>(f: F, u0: f64, h: f64, head_breaks: &[f64], tail: T, tol: E) -> Result<Oscillatory>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
    E: Fn(f64) -> f64,
{
    let rough_opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-6, max_intervals: 1000 };
    let rough = integrate_with_breaks(&f, 0.0, u0, head_breaks, rough_opts)?;
    let head = integrate_with_breaks(&f, 0.0, u0, head_breaks, panel_opts(0.01 * tol(rough.value)))?;
    let mut sum = head.value;
    let mut quad_err = head.error;
    let mut sums = vec![sum];
    let mut scale = rough.value.abs().max(sum.abs());
    let mut last_est = f64::NAN;
    let mut agree = 0;
    let mut u = u0;
    for _ in 0..MAX_PANELS {
        let bound = tail(u);
        if bound <= tol(scale.min(sum.abs().max(1e-3 * scale))) {
            return Ok(Oscillatory { value: sum, error: quad_err + bound });
        }
        let r = integrate_with_breaks(&f, u, u + h, &[], panel_opts(0.01 * tol(scale)))?;
        sum += r.value;
        quad_err += r.error;
        u += h;
        sums.push(sum);
        scale = scale.max(sum.abs());
        if sums.len() >= 8 {
            let window = &sums[sums.len().saturating_sub(40)..];
            let est = wynn_epsilon(window);
            let diff = (est - last_est).abs();
            if diff <= 0.1 * tol(est) {
                agree += 1;
                if agree >= 3 {
                    return Ok(Oscillatory { value: est, error: quad_err + 10.0 * diff });
                }
            } else {
                agree = 0;
            }
            last_est = est;
        }
    }
    Err(Error::Convergence(format!("oscillatory integral not settled after {MAX_PANELS} panels")))
}

/// Imhof's inversion; returns `(P, absolute error estimate)`.
fn imhof(groups: &[Group], w: f64) -> Result<(f64, f64)> {
    let n_half: f64 = groups.iter().map(|g| 0.5 * g.m).sum();
    let log_lambda_term: f64 = groups.iter().map(|g| 0.5 * g.m * g.lambda.ln()).sum();
    let f = |u: f64| {
        let mut theta = -0.5 * w * u;
        let mut log_rho = 0.0;
        for g in groups {
            let lu = g.lambda * u;
            let q = 1.0 + lu * lu;
            theta += 0.5 * (g.m * lu.atan() + g.delta * lu / q);
            log_rho += 0.25 * g.m * q.ln() + 0.5 * g.delta * lu * lu / q;
        }
        theta.sin() / (u * log_rho.exp())
    };
    let tail = |u: f64| {
        let damp: f64 = groups
            .iter()
            .map(|g| {
                let lu = g.lambda * u;
                0.5 * g.delta * lu * lu / (1.0 + lu * lu)
            })
            .sum();
        (-(n_half.ln() + n_half * u.ln() + log_lambda_term + damp)).exp()
    };
    let h = 2.0 * PI / w;
    let lmin = groups.iter().map(|g| g.lambda).fold(f64::INFINITY, f64::min);
    let breaks: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64 / lmin).filter(|&b| b < h).collect();
    let r = oscillatory_integral(f, h, h, &breaks, tail, |_| 1e-14)?;
    Ok((0.5 - r.value / PI, r.error / PI))
}

/// Inversion along the vertical line through the saddlepoint, where the
/// integrand carries no exponentially small factor.
fn tilted(groups: &[Group], w: f64, sp: &Saddle) -> Result<f64> {
    let sigma_u = 1.0 / sp.k2.sqrt();
    let (c, k_c) = if sp.s.abs() < 0.05 * sigma_u {
        let c = -0.05 * sigma_u;
        (c, cumulants(groups, c).0)
    } else {
        (sp.s, sp.k)
    };
    let exponent = k_c - c * w;
    let n_half: f64 = groups.iter().map(|g| 0.5 * g.m).sum();
    let prepared: Vec<(f64, f64, f64, f64)> = groups
        .iter()
        .map(|g| {
            let a = 1.0 - 2.0 * g.lambda * c;
            let b = 2.0 * g.lambda / a;
            (g.m, b, g.delta * g.lambda / (a * a), a)
        })
        .collect();
    let log_b_term: f64 = prepared.iter().map(|&(m, b, _, _)| 0.5 * m * b.ln()).sum();
    let f = |u: f64| {
        let mut re = 0.0;
        let mut im = -u * w;
        for &(m, b, dl, _) in &prepared {
            let bu = b * u;
            let q = 1.0 + bu * bu;
            re += -0.25 * m * q.ln() - dl * b * u * u / q;
            im += 0.5 * m * bu.atan() + dl * u / q;
        }
        re.exp() * (-c * im.cos() - u * im.sin()) / (c * c + u * u)
    };
    let tail = |u: f64| {
        let damp: f64 = prepared
            .iter()
            .map(|&(_, b, dl, _)| {
                let bu = b * u;
                dl * b * u * u / (1.0 + bu * bu)
            })
            .sum();
        (-(n_half.ln() + n_half * u.ln() + log_b_term + damp)).exp()
    };
    let h = PI / w;
    let u0 = (8.0 * sigma_u).max(h);
    let mut breaks: Vec<f64> = (1..=16).map(|k| 0.5 * k as f64 * sigma_u).filter(|&b| b < u0).collect();
    breaks.extend((1..=6).map(|k| c.abs() * 0.5f64.powi(k)).filter(|&b| b < u0));
    let r = oscillatory_integral(f, u0, h, &breaks, tail, |i| 1e-12 * i.abs().max(1e-300))?;
    if r.error > 1e-6 * r.value.abs() {
        return Err(Error::Resolution(format!(
            "tilted inversion error {:e} too large for integral {:e}",
            r.error, r.value
        )));
    }
    if c < 0.0 {
        if r.value <= 0.0 {
            return Err(Error::Resolution("tilted inversion produced a nonpositive integral".into()));
        }
        Ok(exponent + (r.value / PI).ln())
    } else {
        if r.value >= 0.0 {
            return Err(Error::Resolution("tilted inversion produced a nonnegative upper tail".into()));
        }
        Ok(log1mexp((exponent + (-r.value / PI).ln()).min(0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::chi2_logcdf;

    fn spec(l: &[f64], d: &[f64], w: f64) -> WeightedChiSquareSpec {
        WeightedChiSquareSpec::new(l.to_vec(), d.to_vec(), w).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(WeightedChiSquareSpec::new(vec![1.0], vec![], 1.0).is_err());
        assert!(WeightedChiSquareSpec::new(vec![0.0], vec![0.0], 1.0).is_err());
        assert!(WeightedChiSquareSpec::new(vec![1.0], vec![-1.0], 1.0).is_err());
        assert!(WeightedChiSquareSpec::new(vec![1.0], vec![0.0], -1.0).is_err());
    }

    #[test]
    fn central_unit_weights_reduce_to_chi_square() {
        for (n, x) in [(3usize, 0.7), (10, 4.0), (40, 60.0)] {
            let r = weighted_noncentral_chi2_logcdf(&spec(&vec![1.0; n], &vec![0.0; n], x)).unwrap();
            let want = chi2_logcdf(n as u64, x).unwrap().value();
            assert!((r.log_p.value() - want).abs() < 1e-12);
            assert_eq!(r.method, CdfMethod::Exact);
        }
    }

    #[test]
    fn single_gaussian_coordinate() {
        let mu: f64 = 1.7;
        let w: f64 = 2.0;
        let r = weighted_noncentral_chi2_logcdf(&spec(&[1.0], &[mu * mu], w)).unwrap();
        let want = (super::super::norm_cdf(w.sqrt() - mu) - super::super::norm_cdf(-w.sqrt() - mu)).ln();
        assert!((r.log_p.value() - want).abs() < 1e-12);
    }

    #[test]
    fn imhof_and_tilted_agree_on_moderate_probabilities() {
        let groups = vec![
            Group { lambda: 1.0, m: 1.0, delta: 0.0 },
            Group { lambda: 2.0, m: 1.0, delta: 1.0 },
            Group { lambda: 3.0, m: 1.0, delta: 0.0 },
            Group { lambda: 4.0, m: 1.0, delta: 2.0 },
        ];
        for w in [3.0, 10.0, 25.0, 60.0] {
            let (p, err) = imhof(&groups, w).unwrap();
            let sp = Saddle::solve(&groups, w).unwrap();
            let t = tilted(&groups, w, &sp).unwrap();
            assert!(err < 1e-10, "w={w} err={err}");
            assert!((p.ln() - t).abs() < 1e-8, "w={w}: imhof {} tilted {t}", p.ln());
        }
    }

    #[test]
    fn poisson_mixture_matches_tilted() {
        let g = Group { lambda: 0.3, m: 7.0, delta: 5.0 };
        for w in [0.05, 0.5, 2.0, 9.0] {
            let exact = poisson_mixture(&g, w).unwrap();
            let sp = Saddle::solve(&[g], w).unwrap();
            let t = tilted(&[g], w, &sp).unwrap();
            assert!((exact - t).abs() < 1e-8 * exact.abs().max(1.0), "w={w}: {exact} vs {t}");
        }
    }

    #[test]
    fn deep_tail_matches_central_chi_square() {
        // Unequal but nearly unit weights keep the grouped path away from the exact branch.
        let n = 200;
        let l: Vec<f64> = (0..n).map(|j| 1.0 + 1e-13 * j as f64).collect();
        let r = weighted_noncentral_chi2_logcdf(&spec(&l, &vec![0.0; n], 20.0)).unwrap();
        let want = chi2_logcdf(n as u64, 20.0).unwrap().value();
        assert_eq!(r.method, CdfMethod::Tilted);
        assert!((r.log_p.value() - want).abs() < 1e-6 * want.abs(), "{} vs {want}", r.log_p);
        assert!(want < -100.0);
    }

    #[test]
    fn threshold_edges() {
        let r = weighted_noncentral_chi2_logcdf(&spec(&[1.0, 2.0], &[0.0, 1.0], 0.0)).unwrap();
        assert!(r.log_p.is_zero());
        let r = weighted_noncentral_chi2_logcdf(&spec(&[1.0, 2.0], &[0.0, 1.0], 1e4)).unwrap();
        assert!(r.log_p.value() > -1e-12);
    }
}

use super::gamma::ln_gamma_unchecked;
use super::logsum::log1mexp;
use super::LogProb;
use crate::error::{domain, Error, Result};

const MAX_ITER: usize = 1_000_000;
const EPS: f64 = 1e-16;

fn check(s: f64, x: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain!("incomplete gamma needs shape s > 0, got {s}"));
    }
    if !(x >= 0.0) || x.is_nan() {
        return Err(domain!("incomplete gamma needs x ≥ 0, got {x}"));
    }
    Ok(())
}

/// `ln(xˢ e⁻ˣ / Γ(s))`, arranged so that large `s` with `x ≈ s` keeps its
/// digits.
fn ln_prefactor(s: f64, x: f64) -> f64 {
    if s < 10.0 {
        return s * x.ln() - x - ln_gamma_unchecked(s);
    }
    let t = (x - s) / s;
    let log1p_minus = if t.abs() < 0.25 {
        // ln(1 + t) − t = Σ_{k≥2} (−1)^{k+1} tᵏ / k
        let mut pow = t * t;
        let mut sum = 0.0f64;
        let mut k = 2.0f64;
        while pow.abs() > 1e-18 * sum.abs().max(1e-300) {
            sum += if k % 2.0 == 0.0 { -pow / k } else { pow / k };
            pow *= t;
            k += 1.0;
        }
        sum
    } else {
        t.ln_1p() - t
    };
    s * log1p_minus + 0.5 * (s / (2.0 * std::f64::consts::PI)).ln() - stirling_tail(s)
}

/// `ln Γ(s) − [(s − ½) ln s − s + ½ ln 2π]` for `s ≥ 10`.
fn stirling_tail(s: f64) -> f64 {
    const C: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
    ];
    let inv = 1.0 / s;
    let inv2 = inv * inv;
    let mut p = inv;
    let mut sum = 0.0;
    for c in C {
        sum += c * p;
        p *= inv2;
    }
    sum
}

/// `ln P(s, x)` by the power series; intended for `x < s + 1`.
fn ln_p_series(s: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut a = s;
    for _ in 0..MAX_ITER {
        a += 1.0;
        term *= x / a;
        sum += term;
        if term < sum * EPS {
            return Ok(ln_prefactor(s, x) - s.ln() + sum.ln());
        }
    }
    Err(Error::Convergence(format!("gamma series did not converge (s={s}, x={x})")))
}

/// `ln Q(s, x)` by Lentz's continued fraction; intended for `x ≥ s + 1`.
fn ln_q_fraction(s: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(ln_prefactor(s, x) + h.ln());
        }
    }
    Err(Error::Convergence(format!("gamma continued fraction did not converge (s={s}, x={x})")))
}

/// Log of the regularized lower incomplete gamma function `P(s, x)`.
pub fn ln_gamma_p(s: f64, x: f64) -> Result<f64> {
    check(s, x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < s + 1.0 {
        ln_p_series(s, x)
    } else {
        Ok(log1mexp(ln_q_fraction(s, x)?))
    }
}

/// Log of the regularized upper incomplete gamma function `Q(s, x)`.
pub fn ln_gamma_q(s: f64, x: f64) -> Result<f64> {
    check(s, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    if x < s + 1.0 {
        Ok(log1mexp(ln_p_series(s, x)?))
    } else {
        ln_q_fraction(s, x)
    }
}

/// `ln P(χ²_df ≤ x)`.
pub fn chi2_logcdf(df: u64, x: f64) -> Result<LogProb> {
    if df == 0 {
        return Err(domain!("chi-square needs df ≥ 1"));
    }
    chi2_logcdf_real(df as f64, x)
}

pub(crate) fn chi2_logcdf_real(df: f64, x: f64) -> Result<LogProb> {
    Ok(LogProb::clamped(ln_gamma_p(df / 2.0, x / 2.0)?))
}

fn check_truncation(n: u64, a: f64) -> Result<()> {
    if n < 6 {
        return Err(domain!("truncated_gamma_ratio needs n ≥ 6, got {n}"));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain!("truncated_gamma_ratio needs a > 0, got {a}"));
    }
    let cap = n as f64 / (2.0 * std::f64::consts::E);
    if a > cap {
        return Err(Error::Precondition(format!("a = {a} exceeds n/(2e) = {cap}")));
    }
    Ok(())
}

/// `ξₙ = ∫₀¹ τ^{−n/2} e^{−a/(2τ)} dτ / [Γ(n/2−1)(2/a)^{n/2−1}]`, which equals
/// the regularized upper incomplete gamma `Q(n/2 − 1, a/2)`.
pub fn truncated_gamma_ratio(n: u64, a: f64) -> Result<f64> {
    check_truncation(n, a)?;
    Ok(ln_gamma_q(n as f64 / 2.0 - 1.0, a / 2.0)?.exp())
}

/// `ln(1 − ξₙ)`, resolved even when `ξₙ` rounds to one.
pub fn ln_one_minus_truncated_gamma_ratio(n: u64, a: f64) -> Result<f64> {
    check_truncation(n, a)?;
    ln_gamma_p(n as f64 / 2.0 - 1.0, a / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_closed_forms() {
        let v = chi2_logcdf(2, 2.0).unwrap().value();
        assert!((v - (1.0 - (-1f64).exp()).ln()).abs() < 1e-14);
        assert_eq!(chi2_logcdf(5, 0.0).unwrap().value(), f64::NEG_INFINITY);
        // df = 1: P = erf(√(x/2))
        let x: f64 = 3.3;
        let want = (1.0 - libm::erfc((x / 2.0).sqrt())).ln();
        assert!((chi2_logcdf(1, x).unwrap().value() - want).abs() < 1e-13);
    }

    #[test]
    fn series_and_fraction_agree_across_switch() {
        for s in [0.5, 3.0, 25.0, 2500.0, 50_000.0] {
            let x = s + 1.0;
            let p_series = ln_p_series(s, x).unwrap();
            let p_frac = log1mexp(ln_q_fraction(s, x).unwrap());
            assert!((p_series - p_frac).abs() < 1e-10, "s={s}: {p_series} vs {p_frac}");
        }
    }

    #[test]
    fn deep_lower_tail() {
        // For x ≪ s, ln P ≈ s ln x − x − ln Γ(s+1) + ln(1 + x/(s+1) + …).
        let v = chi2_logcdf(100_000, 1000.0).unwrap().value();
        assert!(v < -1e5 && v.is_finite());
        let s = 50_000.0f64;
        let x = 500.0f64;
        let lead = s * x.ln() - x - ln_gamma_unchecked(s + 1.0);
        assert!((v - lead).abs() < 0.02);
    }

    #[test]
    fn prefactor_matches_direct_form() {
        for (s, x) in [(12.0, 3.0), (50.0, 55.0), (1e3, 900.0), (1e4, 1e4 + 1.0)] {
            let direct = s * f64::ln(x) - x - ln_gamma_unchecked(s);
            assert!((ln_prefactor(s, x) - direct).abs() < 1e-13 * direct.abs().max(1.0) * s.max(1.0));
        }
    }

    #[test]
    fn truncated_ratio_limits_and_errors() {
        let tiny = truncated_gamma_ratio(20, 1e-12).unwrap();
        assert!((tiny - 1.0).abs() < 1e-12);
        let cap = 10.0 / (2.0 * std::f64::consts::E);
        assert!(matches!(truncated_gamma_ratio(10, cap * 1.01), Err(Error::Precondition(_))));
        assert!(truncated_gamma_ratio(5, 0.1).is_err());
        let x = truncated_gamma_ratio(10, cap).unwrap();
        assert!(x > 0.0 && x < 1.0);
        let l = ln_one_minus_truncated_gamma_ratio(10, cap).unwrap();
        assert!((l.exp() + x - 1.0).abs() < 1e-14);
    }

    #[test]
    fn truncated_ratio_monotone() {
        for n in [6u64, 10, 40, 200] {
            let cap = n as f64 / (2.0 * std::f64::consts::E);
            let mut prev = f64::INFINITY;
            for k in 1..=20 {
                let v = truncated_gamma_ratio(n, cap * k as f64 / 20.0).unwrap();
                assert!(v <= prev);
                prev = v;
            }
        }
        let mut prev = 0.0;
        for n in [6u64, 8, 12, 50, 100, 1000] {
            let v = truncated_gamma_ratio(n, 1.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }
}

use crate::error::{domain, Error, Result};
use crate::prior::SparseVector;
use crate::quad::{log_integral, QuadOptions};

/// Log multipliers turning the centered probability into bounds on the shifted one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedBallFactors {
    pub log_lower: f64,
    /// Present only where the upper factor is valid.
    pub log_upper: Option<f64>,
}

/// `Σⱼ θ₀ⱼ² / σⱼ²` for a diagonal covariance given by its variances.
pub fn rkhs_norm_sq(sigma_diag: &[f64], theta0: &SparseVector) -> Result<f64> {
    if sigma_diag.len() != theta0.n() {
        return Err(domain!("{} variances for a vector of length {}", sigma_diag.len(), theta0.n()));
    }
    if let Some(s) = sigma_diag.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(domain!("variances must be positive and finite, got {s}"));
    }
    Ok(theta0.iter().map(|(j, v)| v * v / sigma_diag[j]).sum())
}

fn upper_applies(sigma_diag: &[f64], theta0: &SparseVector, t: f64) -> bool {
    let equal = sigma_diag.windows(2).all(|p| p[0] == p[1]);
    (theta0.q() <= 1 || equal) && t < theta0.l2_norm() / 4.0
}

/// Lower factor `−½‖θ₀‖²_ℍ` and, where valid, upper factor `−¼‖θ₀‖²_ℍ`.
pub fn shifted_ball_bounds(sigma_diag: &[f64], theta0: &SparseVector, t: f64) -> Result<ShiftedBallFactors> {
    if !(t > 0.0) {
        return Err(domain!("radius must be positive, got {t}"));
    }
    let h = rkhs_norm_sq(sigma_diag, theta0)?;
    let upper = theta0.q() == 0 || upper_applies(sigma_diag, theta0, t);
    Ok(ShiftedBallFactors { log_lower: -0.5 * h, log_upper: upper.then_some(-0.25 * h) })
}

/// The upper factor alone, refusing configurations outside its validity region.
pub fn shifted_ball_upper(sigma_diag: &[f64], theta0: &SparseVector, t: f64) -> Result<f64> {
    shifted_ball_bounds(sigma_diag, theta0, t)?.log_upper.ok_or_else(|| {
        Error::Precondition(format!(
            "upper factor needs a single nonzero entry or equal variances, and t = {t} < ‖θ₀‖/4 = {}",
            theta0.l2_norm() / 4.0
        ))
    })
}

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 4000 }
}

/// `ln ∫_{ψ ≥ L} (ψ/(ψ+a))^m e^{−ψ} dψ` via `ψ = a u/(1−u)`.
fn log_shifted_gamma_tail(m: f64, a: f64, lower: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(-lower);
    }
    if a < 1e-3 {
        // The shift is negligible next to the exponential scale; stay in ψ.
        let h = move |p: f64| m * (p / (p + a)).ln() - p;
        return log_integral(h, lower, lower + 2.0 * (m + a) + 1000.0, 1024, opts());
    }
    let ul = lower / (lower + a);
    if !(ul < 1.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_a = a.ln();
    let h = move |u: f64| {
        let r = u / (1.0 - u);
        m * u.ln() - a * r + ln_a - 2.0 * (-u).ln_1p()
    };
    log_integral(h, ul, 1.0, 512, opts())
}

fn lasso_common(n: usize, theta0_norm2_sq: f64, radius_sq: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(domain!("lasso bound integrals need n ≥ 3, got {n}"));
    }
    if !(theta0_norm2_sq > 0.0 && theta0_norm2_sq.is_finite()) {
        return Err(domain!("‖θ₀‖² must be positive, got {theta0_norm2_sq}"));
    }
    if !(radius_sq > 0.0 && radius_sq.is_finite()) {
        return Err(domain!("squared radius must be positive, got {radius_sq}"));
    }
    Ok(((n as f64 - 3.0) / 2.0, theta0_norm2_sq / (std::f64::consts::PI * radius_sq)))
}

/// Log of the exponential-local upper-bound integral
/// `C₁ ∫₀^∞ (ψ/(ψ + ‖θ₀‖²/(πw)))^m e^{−ψ} dψ`, `m = (n−3)/2`.
pub fn lasso_ub_integral(n: usize, theta0_norm2_sq: f64, w: f64, c1: f64) -> Result<f64> {
    if !(c1 > 0.0) {
        return Err(domain!("constant must be positive, got {c1}"));
    }
    let (m, a) = lasso_common(n, theta0_norm2_sq, w)?;
    Ok(c1.ln() + log_shifted_gamma_tail(m, a, 0.0)?)
}

/// Log of the matching lower-bound integral
/// `C₂ e^{−d₂√n} ∫_{c₁‖θ₀‖²}^∞ (ψ/(ψ + ‖θ₀‖²/(πv)))^m e^{−ψ} dψ`.
pub fn lasso_lb_integral(n: usize, theta0_norm2_sq: f64, v: f64, c1: f64, d2: f64, c2: f64) -> Result<f64> {
    if !(c1 >= 2.0) {
        return Err(domain!("c₁ must be at least 2, got {c1}"));
    }
    if !(d2 > 0.0 && c2 > 0.0) {
        return Err(domain!("constants must be positive, got d₂ = {d2}, C₂ = {c2}"));
    }
    let (m, a) = lasso_common(n, theta0_norm2_sq, v)?;
    if theta0_norm2_sq * (n as f64) < 1.0 {
        return Err(domain!("‖θ₀‖ must be at least 1/√n"));
    }
    let lower = c1 * theta0_norm2_sq;
    Ok(c2.ln() - d2 * (n as f64).sqrt() + log_shifted_gamma_tail(m, a, lower)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn direct(m: f64, a: f64, lower: f64) -> f64 {
        let f = |p: f64| (m * (p / (p + a)).ln() - p).exp();
        integrate(f, lower, lower + 200.0 + 10.0 * m.max(1.0), QuadOptions::default()).unwrap().value.ln()
    }

    #[test]
    fn substitution_matches_direct_quadrature() {
        for &(m, a, l) in &[(3.5, 0.7, 0.0), (48.5, 2.0, 0.0), (10.0, 0.3, 1.5), (0.5, 5.0, 0.0)] {
            let got = log_shifted_gamma_tail(m, a, l).unwrap();
            let want = direct(m, a, l);
            assert!((got - want).abs() < 1e-8, "m={m} a={a} L={l}: {got} {want}");
        }
    }

    #[test]
    fn vanishing_shift_gives_one() {
        let v = lasso_ub_integral(50, 1e-12, 1.0, 1.0).unwrap();
        assert!(v.abs() < 1e-6, "{v}");
    }

    #[test]
    fn lower_below_upper() {
        for n in [10, 51, 101, 1001] {
            let th = 2.0 * (n as f64).ln();
            for w in [0.5, 2.0, 8.0] {
                let ub = lasso_ub_integral(n, th, w, 1.0).unwrap();
                let lb = lasso_lb_integral(n, th, w, 2.0, 0.1, 1.0).unwrap();
                assert!(lb <= ub, "n={n} w={w}: {lb} > {ub}");
            }
        }
    }

    #[test]
    fn huge_lower_endpoint_vanishes() {
        let lb = lasso_lb_integral(20, 1e300, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(lb, f64::NEG_INFINITY);
    }

    #[test]
    fn factors() {
        let z = SparseVector::zeros(5);
        let f = shifted_ball_bounds(&[1.0; 5], &z, 0.9).unwrap();
        assert_eq!(f, ShiftedBallFactors { log_lower: 0.0, log_upper: Some(0.0) });
        let th = SparseVector::new(5, vec![0], vec![4.0]).unwrap();
        let f = shifted_ball_bounds(&[1.0; 5], &th, 0.9).unwrap();
        assert_eq!(f.log_lower, -8.0);
        assert_eq!(f.log_upper, Some(-4.0));
        let f2 = shifted_ball_bounds(&[1.0; 5], &th.scaled(2.0), 0.9).unwrap();
        assert_eq!(f2.log_lower, 4.0 * f.log_lower);
        assert!(shifted_ball_upper(&[1.0; 5], &th, 1.5).is_err());
        let two = SparseVector::new(5, vec![0, 1], vec![4.0, 4.0]).unwrap();
        assert!(shifted_ball_upper(&[1.0, 2.0, 1.0, 1.0, 1.0], &two, 0.5).is_err());
        assert!(shifted_ball_upper(&[2.0; 5], &two, 0.5).is_ok());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Regressor/response pair for turning decay statements into a slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    /// `−log_p` against `ln n`.
    PowerOfN,
    /// `−log_p` against `√n`.
    SqrtN,
    /// `ln(−log_p)` against `ln n`.
    LogN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit of the model's response on its regressor.
pub fn rate_fit(pairs: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    if pairs.len() < 4 {
        return Err(domain!("rate fit needs at least 4 points, got {}", pairs.len()));
    }
    if pairs.windows(2).any(|p| !(p[1].0 > p[0].0)) || pairs[0].0 <= 0.0 {
        return Err(domain!("n must be positive and strictly increasing"));
    }
    if pairs.iter().all(|p| p.1 == pairs[0].1) {
        return Err(Error::Invalid("degenerate fit: all log-probabilities are equal".into()));
    }
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for &(n, lp) in pairs {
        if !lp.is_finite() {
            return Err(domain!("log-probability must be finite, got {lp} at n = {n}"));
        }
        let (x, y) = match model {
            RateModel::PowerOfN => (n.ln(), -lp),
            RateModel::SqrtN => (n.sqrt(), -lp),
            RateModel::LogN => {
                if lp >= 0.0 {
                    return Err(domain!("log-N model needs negative log-probabilities, got {lp}"));
                }
                (n.ln(), (-lp).ln())
            }
        };
        xs.push(x);
        ys.push(y);
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: [f64; 5] = [100.0, 300.0, 1000.0, 3000.0, 10000.0];

    #[test]
    fn synthetic_power() {
        let pairs: Vec<_> = NS.iter().map(|&n| (n, -2.0 * n.ln())).collect();
        let f = rate_fit(&pairs, RateModel::PowerOfN).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-9 && f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn synthetic_sqrt() {
        let pairs: Vec<_> = NS.iter().map(|&n| (n, -3.0 * n.sqrt())).collect();
        assert!((rate_fit(&pairs, RateModel::SqrtN).unwrap().slope - 3.0).abs() < 1e-9);
        let f = rate_fit(&pairs, RateModel::LogN).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let flat: Vec<_> = NS.iter().map(|&n| (n, -1.0)).collect();
        assert!(rate_fit(&flat, RateModel::PowerOfN).is_err());
        assert!(rate_fit(&flat[..3], RateModel::PowerOfN).is_err());
        let mut dec: Vec<_> = NS.iter().map(|&n| (n, -n)).collect();
        dec.reverse();
        assert!(rate_fit(&dec, RateModel::PowerOfN).is_err());
    }
}

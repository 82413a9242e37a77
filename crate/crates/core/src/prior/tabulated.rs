use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Piecewise-linear density on a positive grid, zero outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTabulated")]
pub struct TabulatedDensity {
    grid: Vec<f64>,
    density: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTabulated {
    grid: Vec<f64>,
    density: Vec<f64>,
}

impl TryFrom<RawTabulated> for TabulatedDensity {
    type Error = crate::Error;
    fn try_from(r: RawTabulated) -> Result<Self> {
        TabulatedDensity::new(r.grid, r.density)
    }
}

const NORMALIZATION_TOL: f64 = 1e-6;

impl TabulatedDensity {
    pub fn new(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let mut t = TabulatedDensity { grid, density, cumulative: Vec::new() };
        t.check_shape()?;
        t.cumulative = t.build_cumulative();
        t.validate()?;
        Ok(t)
    }

    /// Tabulates `f` on `grid` and rescales it to integrate to one.
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let density: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let mut t = TabulatedDensity { grid, density, cumulative: Vec::new() };
        t.check_shape()?;
        let total = *t.build_cumulative().last().expect("nonempty grid");
        if !(total > 0.0) {
            return Err(domain!("tabulated density has zero mass"));
        }
        t.density.iter_mut().for_each(|d| *d /= total);
        t.cumulative = t.build_cumulative();
        Ok(t)
    }

    fn check_shape(&self) -> Result<()> {
        if self.grid.len() < 2 || self.grid.len() != self.density.len() {
            return Err(domain!("tabulated density needs matching grid and density of length ≥ 2"));
        }
        if !(self.grid[0] > 0.0) || self.grid.windows(2).any(|w| !(w[1] > w[0])) || !self.grid.iter().all(|x| x.is_finite()) {
            return Err(domain!("tabulated grid must be positive, finite and strictly increasing"));
        }
        if self.density.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(domain!("tabulated density values must be finite and nonnegative"));
        }
        Ok(())
    }

    fn build_cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for i in 1..self.grid.len() {
            acc += 0.5 * (self.density[i] + self.density[i - 1]) * (self.grid[i] - self.grid[i - 1]);
            out.push(acc);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        let total = *self.build_cumulative().last().expect("nonempty grid");
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(domain!("tabulated density integrates to {total}, not 1"));
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.density
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().expect("nonempty grid"))
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return 0.0;
        }
        let i = self.grid.partition_point(|&g| g <= x).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let (f0, f1) = (self.density[i - 1], self.density[i]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    /// Exact inverse-CDF draw from the piecewise-linear density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("nonempty grid");
        let target = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c < target).clamp(1, self.grid.len() - 1);
        let r = target - self.cumulative[i - 1];
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let (f0, f1) = (self.density[i - 1], self.density[i]);
        let k = (f1 - f0) / (x1 - x0);
        let disc = (f0 * f0 + 2.0 * k * r).max(0.0);
        let denom = f0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (x0 + t).clamp(x0, x1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn triangle() -> TabulatedDensity {
        TabulatedDensity::new(vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(TabulatedDensity::new(vec![1.0, 2.0], vec![1.0, 2.0]).is_err());
        assert!(TabulatedDensity::new(vec![0.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(TabulatedDensity::new(vec![1.0, 3.0], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn interpolation_and_support() {
        let t = triangle();
        assert_eq!(t.density(1.5), 0.5);
        assert_eq!(t.density(0.5), 0.0);
        assert_eq!(t.density(3.5), 0.0);
    }

    #[test]
    fn sampling_matches_cdf() {
        let t = triangle();
        let mut rng = RngStream::new(3).rng();
        let n = 200_000;
        let below = (0..n).filter(|_| t.sample(&mut rng) < 1.5).count() as f64 / n as f64;
        // P(X < 1.5) = 1/8
        assert!((below - 0.125).abs() < 4.0 * (0.125f64 * 0.875 / n as f64).sqrt());
    }

    #[test]
    fn serde_round_trip_validates() {
        let t = triangle();
        let s = serde_json::to_string(&t).unwrap();
        let back: TabulatedDensity = serde_json::from_str(&s).unwrap();
        assert_eq!(back.density(2.2), t.density(2.2));
        assert!(serde_json::from_str::<TabulatedDensity>(r#"{"grid":[1,2],"density":[1,2]}"#).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A vector in `ℝⁿ` stored by its nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSparse", into = "RawSparse")]
pub struct SparseVector {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
    l2_norm: f64,
    l1_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSparse {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<RawSparse> for SparseVector {
    type Error = crate::Error;
    fn try_from(r: RawSparse) -> Result<Self> {
        SparseVector::new(r.n, r.support, r.values)
    }
}

impl From<SparseVector> for RawSparse {
    fn from(s: SparseVector) -> Self {
        RawSparse { n: s.n, support: s.support, values: s.values }
    }
}

impl SparseVector {
    /// Builds from 0-based indices; exact zeros are dropped.
    pub fn new(n: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(domain!("{} indices but {} values", support.len(), values.len()));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain!("support indices must be strictly increasing"));
        }
        if let Some(&j) = support.last() {
            if j >= n {
                return Err(domain!("support index {j} out of range for n = {n}"));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain!("values must be finite"));
        }
        let (support, values): (Vec<usize>, Vec<f64>) =
            support.into_iter().zip(values).filter(|&(_, v)| v != 0.0).unzip();
        let l2_norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l1_norm = values.iter().map(|v| v.abs()).sum();
        Ok(SparseVector { n, support, values, l2_norm, l1_norm })
    }

    pub fn zeros(n: usize) -> Self {
        SparseVector { n, support: Vec::new(), values: Vec::new(), l2_norm: 0.0, l1_norm: 0.0 }
    }

    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let (support, values) = x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).unzip();
        SparseVector::new(x.len(), support, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nonzero entries.
    pub fn q(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn get(&self, j: usize) -> f64 {
        match self.support.binary_search(&j) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (j, v) in self.iter() {
            x[j] = v;
        }
        x
    }

    /// `‖x − self‖₂²` for a dense `x` of the same length.
    pub fn dist_sq(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let total: f64 = x.iter().map(|v| v * v).sum();
        self.iter().fold(total, |acc, (j, v)| acc - x[j] * x[j] + (x[j] - v) * (x[j] - v))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let values = self.values.iter().map(|v| v * c).collect();
        SparseVector::new(self.n, self.support.clone(), values).expect("scaling keeps validity")
    }
}

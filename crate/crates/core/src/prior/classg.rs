use serde::Serialize;

use super::GlobalFamily;
use crate::error::{Error, Result};

const MAX_WITNESSES: usize = 5;

/// Grid check of `g(τ) ≤ M` on `(10⁻⁸, 10⁸)` and `g(τ) > 1/M` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassGReport {
    pub holds_upper: bool,
    pub holds_lower: bool,
    /// `(τ, g(τ))` at the largest density seen on the log grid.
    pub max_density: (f64, f64),
    /// `(τ, g(τ))` at the smallest density seen on the unit grid.
    pub min_density_unit: (f64, f64),
    pub upper_witnesses: Vec<(f64, f64)>,
    pub lower_witnesses: Vec<(f64, f64)>,
}

pub fn class_g_check(global: &GlobalFamily, m: f64, grid_size: usize) -> Result<ClassGReport> {
    if !global.has_density() {
        return Err(Error::Invalid("class-G check needs a global family with a density".into()));
    }
    if grid_size < 100 {
        return Err(Error::Invalid(format!("grid_size must be at least 100, got {grid_size}")));
    }
    if !(m > 0.0) {
        return Err(Error::Domain(format!("M must be positive, got {m}")));
    }
    global.validate()?;
    let g = |t: f64| global.density(t).expect("family has a density");

    let (lo, hi) = (1e-8f64.ln(), 1e8f64.ln());
    let mut max_density = (f64::NAN, f64::NEG_INFINITY);
    let mut upper_witnesses = Vec::new();
    for i in 0..grid_size {
        let tau = (lo + (hi - lo) * i as f64 / (grid_size - 1) as f64).exp();
        let d = g(tau);
        if d > max_density.1 {
            max_density = (tau, d);
        }
        if d > m && upper_witnesses.len() < MAX_WITNESSES {
            upper_witnesses.push((tau, d));
        }
    }

    let mut min_density_unit = (f64::NAN, f64::INFINITY);
    let mut lower_witnesses = Vec::new();
    for i in 0..grid_size {
        let tau = (i as f64 + 0.5) / grid_size as f64;
        let d = g(tau);
        if d < min_density_unit.1 {
            min_density_unit = (tau, d);
        }
        if !(d > 1.0 / m) && lower_witnesses.len() < MAX_WITNESSES {
            lower_witnesses.push((tau, d));
        }
    }

    Ok(ClassGReport {
        holds_upper: max_density.1 <= m,
        holds_lower: min_density_unit.1 > 1.0 / m,
        max_density,
        min_density_unit,
        upper_witnesses,
        lower_witnesses,
    })
}

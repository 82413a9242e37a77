use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};

use crate::error::{domain, Result};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_087_07;

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `ln erfc(x)` for any real `x`, without underflow in the right tail.
pub fn log_erfc(x: f64) -> f64 {
    if x < 25.0 {
        return libm::erfc(x).ln();
    }
    // e^{-x²}/(x√π) · Σ (−1)ᵏ (2k−1)!! / (2x²)ᵏ
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
    }
    -x * x - x.ln() - LN_SQRT_PI + sum.ln()
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `ln Φ(z)`.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z > 5.0 {
        // Φ(z) = 1 − Φ(−z), and Φ(−z) is tiny.
        return (-norm_cdf(-z)).ln_1p();
    }
    log_erfc(-z / SQRT_2) - std::f64::consts::LN_2
}

/// Standard normal quantile (Wichura's AS 241, about 1e-16 relative).
pub fn norm_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r0 = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r0.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_7,
    1_971.590_950_306_551_443,
    13_731.693_765_509_461_25,
    45_921.953_931_549_871_46,
    67_265.770_927_008_700_85,
    33_430.575_583_588_128_11,
    2_509.080_928_730_122_673,
];
const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_25,
    687.187_007_492_057_908_6,
    5_394.196_021_424_751_077,
    21_213.794_301_586_595_87,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_67,
    5_226.495_278_852_545_925,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_90,
    5.769_497_221_460_691_405_50,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_770,
    0.022_723_844_989_269_184_583_2,
    7.745_450_142_783_414_076_40e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_40,
    0.689_767_334_985_100_004_550,
    0.148_103_976_427_480_074_590,
    0.015_198_666_563_616_457_203_8,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20,
    5.463_784_911_164_114_369_90,
    1.784_826_539_917_291_335_80,
    0.296_560_571_828_504_891_230,
    0.026_532_189_526_576_123_093_0,
    0.001_242_660_947_388_078_438_60,
    2.711_555_568_743_487_578_17e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_690,
    0.136_929_880_922_735_805_310,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.043_131_059_635_231_471_05e-15,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErfcBounds {
    /// `erfc(√x)`.
    pub erfc: f64,
    /// `e⁻ˣ / (√π √(x + 1/π))`.
    pub upper: f64,
    /// `e⁻ˣ x^{−(1+δ)/2} / √π`, reported only for `x ≥ 2`.
    pub lower: Option<f64>,
}

/// `erfc(√x)` with its two elementary envelopes.
pub fn erfc_and_bounds(x: f64, delta: f64) -> Result<ErfcBounds> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain!("erfc_and_bounds needs finite x ≥ 0, got {x}"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain!("erfc_and_bounds needs delta > 0, got {delta}"));
    }
    let lead = (-x).exp() / PI.sqrt();
    let upper = lead / (x + FRAC_1_PI).sqrt();
    let lower = (x >= 2.0).then(|| lead * x.powf(-(1.0 + delta) / 2.0));
    Ok(ErfcBounds {
        erfc: libm::erfc(x.sqrt()),
        upper,
        lower,
    })
}

use crate::error::{domain, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_8;

// ζ(k) − 1 for k = 2, 3, ...
const ZETA_M1: [f64; 39] = [
    6.4493406684822643647e-1,
    2.020569031595942854e-1,
    8.2323233711138191516e-2,
    3.6927755143369926331e-2,
    1.7343061984449139715e-2,
    8.3492773819228268398e-3,
    4.0773561979443393787e-3,
    2.0083928260822144179e-3,
    9.9457512781808533715e-4,
    4.941886041194645587e-4,
    2.4608655330804829864e-4,
    1.2271334757848914675e-4,
    6.1248135058704829259e-5,
    3.0588236307020493552e-5,
    1.5282259408651871733e-5,
    7.6371976378997622736e-6,
    3.8172932649998398565e-6,
    1.9082127165539389257e-6,
    9.5396203387279611315e-7,
    4.7693298678780646312e-7,
    2.3845050272773299e-7,
    1.1921992596531107307e-7,
    5.9608189051259479612e-8,
    2.9803503514652280186e-8,
    1.4901554828365041235e-8,
    7.450711789835429492e-9,
    3.7253340247884570548e-9,
    1.8626597235130490064e-9,
    9.3132743241966818287e-10,
    4.656629065033784073e-10,
    2.328311833676505492e-10,
    1.1641550172700519776e-10,
    5.8207720879027008892e-11,
    2.9103850444970996869e-11,
    1.4551921891041984236e-11,
    7.2759598350574810145e-12,
    3.6379795473786511902e-12,
    1.8189896503070659476e-12,
    9.0949478402638892825e-13,
];

// Bernoulli coefficients B₂ₖ / (2k(2k − 1)) for the Stirling tail.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ln Γ(2 + e)` for `|e| ≤ ½` from the Taylor series in ζ values.
fn ln_gamma_near_two(e: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = -e;
    for (i, z) in ZETA_M1.iter().enumerate() {
        pow *= -e;
        let k = (i + 2) as f64;
        let term = z * pow / k;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    (1.0 - EULER_GAMMA) * e + sum
}

fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut tail = 0.0;
    let mut p = inv;
    for c in STIRLING {
        tail += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + tail
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(domain!("ln_gamma needs a finite x > 0, got {x}"));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x >= 10.0 {
        return ln_gamma_stirling(x);
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x, applied once or twice.
        return ln_gamma_unchecked(x + 1.0) - x.ln();
    }
    if x < 1.5 {
        return ln_gamma_near_two(x - 1.0) - (x - 1.0).ln_1p();
    }
    let mut y = x;
    let mut prod = 1.0;
    while y > 2.5 {
        y -= 1.0;
        prod *= y;
    }
    ln_gamma_near_two(y - 2.0) + prod.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn reference_values() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-300);
        let half = 0.5 * std::f64::consts::PI.ln();
        assert!(rel(ln_gamma(0.5).unwrap(), half) < 1e-14);
        // high-precision reference values
        let cases = [
            (10.5, 13.940_625_219_403_763_633),
            (1e-3, 6.907_178_885_383_853_661_7),
            (1.5, -0.120_782_237_635_245_222_35),
            (2.3, 0.154_189_454_959_630_474_50),
            (1e6, 12_815_504.569_147_611_660),
            (0.999, 5.780_385_328_913_802_381_7e-4),
        ];
        for (x, want) in cases {
            let got = ln_gamma(x).unwrap();
            assert!(rel(got, want) < 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn ten_and_a_half_via_double_factorial() {
        // Γ(10.5) = √π · 19!! / 2¹⁰
        let df: f64 = (1..=19).step_by(2).map(|k| k as f64).product();
        let want = 0.5 * std::f64::consts::PI.ln() + df.ln() - 10.0 * 2f64.ln();
        assert!(rel(ln_gamma(10.5).unwrap(), want) < 1e-13);
    }

    #[test]
    fn recurrence_holds_across_branches() {
        let mut x = 1e-3;
        while x < 1e4 {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + x.ln();
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "x={x}");
            x *= 1.37;
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
        assert!(ln_gamma(f64::NAN).is_err());
    }
}

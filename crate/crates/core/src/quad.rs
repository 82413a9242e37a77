//! Adaptive Gauss–Kronrod quadrature and a log-domain driver.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_584_637_024,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Weights of the embedded 10-point Gauss rule at XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Kronrod panel: `(value, error estimate)`, with the error
/// scaled as in QUADPACK's `qk21`.
pub fn gauss_kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut resabs = kronrod.abs();
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let (result, resabs, resasc) = (kronrod * half, resabs * half.abs(), resasc * half.abs());
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive quadrature over `[a, b]`, starting from the given
/// breakpoints (which must lie inside `[a, b]`).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|&x| x > lo && x < hi))
        .chain(std::iter::once(hi))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let (v, e) = gauss_kronrod21(&mut f, w[0], w[1]);
        evaluations += 21;
        total += v;
        total_err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    if !total.is_finite() {
        return Err(Error::Convergence("integrand produced a non-finite value".into()));
    }
    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Convergence(format!(
                "adaptive quadrature on [{lo}, {hi}] hit {} intervals (estimate {total:e}, error {total_err:e}, abs_tol {:e})",
                opts.max_intervals, opts.abs_tol
            )));
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; accept it as is.
            heap.push(Panel { error: 0.0, ..worst });
            total_err = heap.iter().map(|p| p.error).sum();
            continue;
        }
        let (v1, e1) = gauss_kronrod21(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        if !total.is_finite() {
            return Err(Error::Convergence("integrand produced a non-finite value".into()));
        }
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult { value: sign * value, error, evaluations })
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Drop in log-integrand below the peak beyond which mass is ignored.
const LOG_DROP: f64 = 80.0;

/// `ln ∫_lo^hi exp(h(x)) dx` for a log-integrand `h` that may be far outside
/// the range of `f64` after exponentiation.
///
/// The peak of `h` is located on a grid of `grid` points and refined by golden
/// section; the integration range is then trimmed to where `h` is within
/// [`LOG_DROP`] of the peak and integrated adaptively with the peak as a
/// breakpoint. Suited to integrands with one dominant mode.
pub fn log_integral<H: Fn(f64) -> f64>(h: H, lo: f64, hi: f64, grid: usize, opts: QuadOptions) -> Result<f64> {
    log_integral_with_breaks(h, lo, hi, grid, &[], opts)
}

/// [`log_integral`] with extra known kinks of `h` passed to the adaptive rule.
pub fn log_integral_with_breaks<H: Fn(f64) -> f64>(
    h: H,
    lo: f64,
    hi: f64,
    grid: usize,
    kinks: &[f64],
    opts: QuadOptions,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty log-integration range [{lo}, {hi}]")));
    }
    let grid = grid.max(16);
    let step = (hi - lo) / grid as f64;
    let xs: Vec<f64> = (0..=grid).map(|i| if i == grid { hi } else { lo + step * i as f64 }).collect();
    let hs: Vec<f64> = xs.iter().map(|&x| sanitize(h(x))).collect();
    let (imax, &hgrid) = hs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    if hgrid == f64::NEG_INFINITY {
        // Possibly a spike narrower than the grid; probe midpoints once.
        let mids: Vec<f64> = xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let best = mids.iter().map(|&x| sanitize(h(x))).fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
    }
    // Golden-section refinement of the peak around the best grid point.
    let a0 = xs[imax.saturating_sub(1)];
    let b0 = xs[(imax + 1).min(grid)];
    let (xpeak, hpeak) = golden_max(&h, a0, b0, xs[imax], hgrid);

    let left_grid = hs
        .iter()
        .position(|&v| v > hpeak - LOG_DROP)
        .map(|i| xs[i.saturating_sub(1)])
        .unwrap_or(lo);
    let right_grid = hs
        .iter()
        .rposition(|&v| v > hpeak - LOG_DROP)
        .map(|i| xs[(i + 1).min(grid)])
        .unwrap_or(hi);
    let left = left_grid.min(walk_to_drop(&h, xpeak, hpeak, lo, -1.0, step));
    let right = right_grid.max(walk_to_drop(&h, xpeak, hpeak, hi, 1.0, step));

    let mut breaks: Vec<f64> = kinks.iter().copied().filter(|&k| k > left && k < right).collect();
    breaks.push(xpeak);
    // Extra breakpoints on a geometric ladder around the peak help the
    // adaptive rule find sharp shoulders.
    for k in 1..=6 {
        let d = step * 0.5f64.powi(k * 2);
        breaks.push(xpeak - d);
        breaks.push(xpeak + d);
    }
    let r = integrate_with_breaks(|x| sanitize(h(x) - hpeak).exp(), left, right, &breaks, opts)?;
    if r.value <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(hpeak + r.value.ln())
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn golden_max<H: Fn(f64) -> f64>(h: &H, mut a: f64, mut b: f64, x0: f64, h0: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (x0, h0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut hc = sanitize(h(c));
    let mut hd = sanitize(h(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - INV_PHI * (b - a);
            hc = sanitize(h(c));
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + INV_PHI * (b - a);
            hd = sanitize(h(d));
        }
        if hc > best.1 {
            best = (c, hc);
        }
        if hd > best.1 {
            best = (d, hd);
        }
    }
    best
}

/// Walks from the peak towards `bound` with geometrically growing steps until
/// the log-integrand has dropped by [`LOG_DROP`]; returns that abscissa
/// (or `bound`).
fn walk_to_drop<H: Fn(f64) -> f64>(h: &H, xpeak: f64, hpeak: f64, bound: f64, dir: f64, step: f64) -> f64 {
    let mut d = step * 1e-6;
    loop {
        let x = xpeak + dir * d;
        if (dir > 0.0 && x >= bound) || (dir < 0.0 && x <= bound) {
            return bound;
        }
        if sanitize(h(x)) < hpeak - LOG_DROP {
            return x;
        }
        d *= 2.0;
    }
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
pub fn wynn_epsilon(seq: &[f64]) -> f64 {
    let Some(&last) = seq.last() else { return f64::NAN };
    let mut prev = vec![0.0; seq.len() + 1];
    let mut curr = seq.to_vec();
    let mut best = last;
    let mut column = 0;
    while curr.len() > 1 {
        let mut next = Vec::with_capacity(curr.len() - 1);
        for i in 0..curr.len() - 1 {
            let d = curr[i + 1] - curr[i];
            if d == 0.0 || !d.is_finite() {
                return if column % 2 == 0 { curr[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        column += 1;
        prev = curr;
        curr = next;
        if column % 2 == 0 {
            best = *curr.last().expect("nonempty column");
        }
    }
    best
}

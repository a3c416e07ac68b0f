//! Adaptive Gauss–Kronrod quadrature.
//!
//! The 21-point Kronrod rule with its embedded 10-point Gauss rule, driven
//! by a global subdivision strategy: the interval with the largest error
//! estimate is bisected until the summed estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_310_847,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the nodes XGK[1], XGK[3], .., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn with_budget(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;

    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
            evaluations: self.evaluations + rhs.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One application of the 21-point Kronrod rule on `[a, b]`.
///
/// Returns `(value, error_estimate)` using the QUADPACK error heuristic.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

/// Fixed 10-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss10<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (k, w) in WG.iter().enumerate() {
        let dx = half * XGK[2 * k + 1];
        sum += w * (f(center - dx) + f(center + dx));
    }
    sum * half
}

/// Globally adaptive integration over the union of the intervals between
/// consecutive `points` (which must be sorted and contain at least two
/// entries). Breakpoints mark places where the integrand is not smooth.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::domain("quadrature needs at least two breakpoints"));
    }
    let mut heap = BinaryHeap::with_capacity(points.len() * 2);
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b >= a) {
            return Err(Error::domain(format!("breakpoints not sorted: {a} > {b}")));
        }
        if b == a {
            continue;
        }
        let (value, error) = gk21(&f, a, b);
        evaluations += 21;
        total += value;
        total_err += error;
        heap.push(Segment { a, b, value, error });
    }
    // Segments too narrow to bisect further are retired here.
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Tolerance {
                context: "adaptive quadrature".into(),
                estimate: total,
                error_bound: total_err,
            });
        }
        let seg = match heap.pop() {
            Some(seg) => seg,
            None => break,
        };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b || (seg.b - seg.a) <= 4.0 * f64::EPSILON * mid.abs() {
            frozen_value += seg.value;
            frozen_err += seg.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gk21(&f, seg.a, mid);
        let (v2, e2) = gk21(&f, mid, seg.b);
        evaluations += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    // Re-sum to avoid drift from the running updates.
    let mut value = frozen_value;
    let mut error = frozen_err;
    for seg in heap.iter() {
        value += seg.value;
        error += seg.error;
    }
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// Integrates over `[a, b]`, trying one Kronrod panel before falling back to
/// adaptive subdivision. Used for long sums of panels where most are smooth.
pub fn integrate_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    let (value, error) = gk21(f, a, b);
    if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
        return Ok(QuadResult {
            value,
            error,
            evaluations: 21,
        });
    }
    integrate(f, &[a, b], opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rules_are_exact_on_polynomials() {
        for deg in 0..=31 {
            let exact = (1.0 - (-1.0f64).powi(deg + 1)) / (deg as f64 + 1.0);
            let (v, _) = gk21(&|x: f64| x.powi(deg), -1.0, 1.0);
            assert!((v - exact).abs() < 1e-14, "kronrod degree {deg}");
            if deg <= 19 {
                let g = gauss10(&|x: f64| x.powi(deg), -1.0, 1.0);
                assert!((g - exact).abs() < 1e-14, "gauss degree {deg}");
            }
        }
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫₀¹ x^{-1/2} dx = 2
        let r = integrate(|x: f64| x.powf(-0.5), &[0.0, 1.0], QuadOptions::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{r:?}");
        assert!(r.error < 1e-9);
    }

    #[test]
    fn oscillatory_with_breakpoints() {
        let pts: Vec<f64> = (0..=40).map(|k| k as f64 * std::f64::consts::PI / 4.0).collect();
        let r = integrate(|x: f64| (4.0 * x).cos() * (-x).exp(), &pts, QuadOptions::default()).unwrap();
        let b = 10.0 * std::f64::consts::PI;
        // ∫₀ᵇ e^{-x} cos 4x dx
        let exact = (1.0 - (-b).exp() * ((4.0 * b).cos() - 4.0 * (4.0 * b).sin())) / 17.0;
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let err = integrate(|x: f64| (1.0 / x).sin() / x, &[1e-9, 1.0], QuadOptions::new(1e-15, 1e-15).with_budget(8))
            .unwrap_err();
        assert!(matches!(err, Error::Tolerance { .. }));
    }

    #[test]
    fn unsorted_breakpoints_rejected() {
        assert!(integrate(|x| x, &[1.0, 0.0], QuadOptions::default()).is_err());
        assert!(integrate(|x| x, &[1.0], QuadOptions::default()).is_err());
    }
}

//! Fourier symbol `W(ξ) = ∫ (cos ξy - 1) J(y) dy ≤ 0`.
//!
//! The integral is split at `L = 100/ξ`. On `[0, L]` the integrand
//! `-2 sin²(ξy/2) J(y)` has one sign and is integrated adaptively on panels
//! no wider than a quarter period. Beyond `L` the cosine part is summed by
//! repeated integration by parts and the `-1` part is an exact tail mass.

use rayon::prelude::*;
use serde::Serialize;

use super::KernelSpec;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions, QuadResult};
use crate::stats::fit_power_law;

const SPLIT: f64 = 100.0;

/// Symbol with the quadrature's error estimate.
pub fn symbol_with_error(spec: &KernelSpec, xi: f64, rel_tol: f64) -> Result<QuadResult> {
    spec.require_symmetric()?;
    if !xi.is_finite() {
        return Err(Error::domain("symbol frequency must be finite"));
    }
    let xi = xi.abs();
    if xi == 0.0 {
        return Ok(QuadResult::default());
    }
    let split = SPLIT / xi;
    let width = std::f64::consts::FRAC_PI_4 / xi;
    let panels = (split / width).ceil() as usize;
    let mut pts: Vec<f64> = (0..=panels).map(|k| (k as f64 * width).min(split)).collect();
    pts.extend(spec.breakpoints().into_iter().filter(|b| *b < split));
    if spec.r0 < split {
        pts.push(spec.r0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let j = spec.evaluator();
    let body = integrate(
        |y: f64| {
            let h = (0.5 * xi * y).sin();
            -2.0 * h * h * j(y)
        },
        &pts,
        QuadOptions::new(0.0, rel_tol).with_budget(40 * pts.len() + 4000),
    )
    .map_err(|e| match e {
        Error::Tolerance {
            estimate, error_bound, ..
        } => Error::Tolerance {
            context: format!("symbol at xi = {xi}"),
            estimate: 2.0 * estimate,
            error_bound: 2.0 * error_bound,
        },
        other => other,
    })?;
    let (osc, osc_err) = spec.cos_transform_tail(xi, split);
    let value = 2.0 * (body.value + osc - spec.tail_mass(split));
    let error = 2.0 * (body.error + osc_err) + 4.0 * f64::EPSILON * value.abs();
    Ok(QuadResult {
        value: value.min(0.0),
        error,
        evaluations: body.evaluations,
    })
}

pub fn symbol(spec: &KernelSpec, xi: f64) -> Result<f64> {
    symbol_with_error(spec, xi, 1e-10).map(|r| r.value)
}

/// Symbol sampled on a frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct FourierSymbol {
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
    pub error: Vec<f64>,
}

impl FourierSymbol {
    pub fn tabulate(spec: &KernelSpec, xi: &[f64]) -> Result<Self> {
        let results: Vec<QuadResult> = xi
            .par_iter()
            .map(|&x| symbol_with_error(spec, x, 1e-10))
            .collect::<Result<_>>()?;
        Ok(FourierSymbol {
            xi: xi.to_vec(),
            w: results.iter().map(|r| r.value).collect(),
            error: results.iter().map(|r| r.error).collect(),
        })
    }
}

/// `W(ξ) ≈ -constant · ξ^slope` fitted on a log grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallFreqFit {
    pub slope: f64,
    pub constant: f64,
    pub max_log_residual: f64,
}

pub fn fit_small_freq_exponent(spec: &KernelSpec, lo: f64, hi: f64, samples: usize) -> Result<SmallFreqFit> {
    if !(lo > 0.0 && hi > lo) || samples < 2 {
        return Err(Error::config("symbol.fit_range", "need 0 < lo < hi and at least two samples"));
    }
    let grid = super::log_samples(lo, hi, samples);
    let sym = FourierSymbol::tabulate(spec, &grid)?;
    if let Some(k) = sym.w.iter().position(|w| !(*w < 0.0)) {
        return Err(Error::Tolerance {
            context: format!("symbol vanishes at xi = {}", grid[k]),
            estimate: sym.w[k],
            error_bound: sym.error[k],
        });
    }
    let neg: Vec<f64> = sym.w.iter().map(|w| -w).collect();
    let fit = fit_power_law(&grid, &neg)?;
    Ok(SmallFreqFit {
        slope: fit.slope,
        constant: fit.intercept.exp(),
        max_log_residual: fit.max_residual,
    })
}

/// Fast evaluator of the symbol for repeated use.
///
/// Pure power kernels scale exactly, `W(ξ) = W(1) |ξ|^{2s}`. Integrable
/// kernels are tabulated: `log(-W)` against `log ξ` below `ξ = 1`, and the
/// bounded part `Ĵ(ξ) = W(ξ) + m` on a uniform grid above it.
#[derive(Debug, Clone)]
pub enum SymbolModel {
    PurePower {
        w1: f64,
        exponent: f64,
    },
    Plateau {
        /// Total kernel mass `m`; `W → -m` as `ξ → ∞`.
        mass: f64,
        exponent: f64,
        log_xi: Vec<f64>,
        log_neg_w: Vec<f64>,
        step: f64,
        jhat: Vec<f64>,
    },
}

const LOG_XI_MIN: f64 = -8.0 * std::f64::consts::LN_10;
const LOG_POINTS_PER_DECADE: usize = 20;

impl SymbolModel {
    /// Builds the model; tables for integrable kernels cover `[0, xi_max]`.
    pub fn new(spec: &KernelSpec, xi_max: f64) -> Result<Self> {
        spec.require_symmetric()?;
        let exponent = 2.0 * spec.s;
        if !spec.is_integrable() {
            return Ok(SymbolModel::PurePower {
                w1: symbol(spec, 1.0)?,
                exponent,
            });
        }
        let mass = spec.mass();
        let n_log = 8 * LOG_POINTS_PER_DECADE + 1;
        let log_xi: Vec<f64> = (0..n_log)
            .map(|k| LOG_XI_MIN * (1.0 - k as f64 / (n_log - 1) as f64))
            .collect();
        let xis: Vec<f64> = log_xi.iter().map(|l| l.exp()).collect();
        let small = FourierSymbol::tabulate(spec, &xis)?;
        if small.w.iter().any(|w| !(*w < 0.0)) {
            return Err(Error::invariant("symbol is not negative at small frequency"));
        }
        let log_neg_w = small.w.iter().map(|w| (-w).ln()).collect();
        let step = 0.25;
        let n_uniform = ((xi_max.max(2.0) / step).ceil() as usize) + 4;
        let grid: Vec<f64> = (0..n_uniform).map(|k| k as f64 * step).collect();
        let large = FourierSymbol::tabulate(spec, &grid)?;
        let jhat = large.w.iter().map(|w| w + mass).collect();
        Ok(SymbolModel::Plateau {
            mass,
            exponent,
            log_xi,
            log_neg_w,
            step,
            jhat,
        })
    }

    /// `W(|ξ|)`.
    pub fn eval(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        match self {
            SymbolModel::PurePower { w1, exponent } => w1 * xi.powf(*exponent),
            SymbolModel::Plateau { mass, .. } => {
                if xi == 0.0 {
                    return 0.0;
                }
                if xi < 1.0 {
                    -self.small(xi)
                } else {
                    self.jhat(xi) - mass
                }
            }
        }
    }

    /// `W(ξ) + m`, the bounded part, for integrable kernels.
    pub fn jhat(&self, xi: f64) -> f64 {
        match self {
            SymbolModel::PurePower { .. } => f64::NAN,
            SymbolModel::Plateau { mass, step, jhat, .. } => {
                let xi = xi.abs();
                if xi < 1.0 {
                    return mass - self.small(xi);
                }
                let u = xi / step;
                if u >= (jhat.len() - 2) as f64 {
                    return 0.0;
                }
                lagrange4(jhat, u)
            }
        }
    }

    /// `-W(ξ)` for `0 < ξ < 1` from the log table.
    fn small(&self, xi: f64) -> f64 {
        match self {
            SymbolModel::Plateau {
                exponent,
                log_xi,
                log_neg_w,
                ..
            } => {
                let l = xi.ln();
                let h = log_xi[1] - log_xi[0];
                if l <= log_xi[0] {
                    return (log_neg_w[0] + exponent * (l - log_xi[0])).exp();
                }
                lagrange4(log_neg_w, (l - log_xi[0]) / h).exp()
            }
            SymbolModel::PurePower { w1, exponent } => -w1 * xi.powf(*exponent),
        }
    }

    /// Interpolation nodes of the tables, where the model is only continuous.
    pub fn nodes(&self, xi_max: f64) -> Vec<f64> {
        match self {
            SymbolModel::PurePower { .. } => Vec::new(),
            SymbolModel::Plateau { log_xi, step, .. } => {
                let mut v: Vec<f64> = log_xi.iter().map(|l| l.exp()).filter(|x| *x < 1.0).collect();
                v.extend((1..).map(|k| k as f64 * step).skip_while(|x| *x <= 1.0).take_while(|x| *x < xi_max));
                v
            }
        }
    }

    pub fn plateau(&self) -> Option<f64> {
        match self {
            SymbolModel::Plateau { mass, .. } => Some(-mass),
            SymbolModel::PurePower { .. } => None,
        }
    }
}

/// Cubic Lagrange interpolation of uniformly spaced `values` at fractional index `u`.
fn lagrange4(values: &[f64], u: f64) -> f64 {
    let n = values.len();
    let i = (u.floor() as isize).clamp(1, n as isize - 3) as usize;
    let t = u - i as f64;
    let (y0, y1, y2, y3) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    l0 * y0 + l1 * y1 + l2 * y2 + l3 * y3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelTable, log_samples};
    use std::f64::consts::PI;

    #[test]
    fn cauchy_symbol_is_minus_abs() {
        let spec = KernelSpec::fractional(0.5, 1.0 / PI).unwrap();
        for xi in [1e-3, 0.1, 1.0, 7.5, 300.0] {
            let w = symbol(&spec, xi).unwrap();
            assert!((w + xi).abs() <= 1e-9 * xi, "xi={xi}: {w}");
        }
        assert_eq!(symbol(&spec, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn laplacian_normalization() {
        for s in [0.1, 0.25, 0.4] {
            let spec = KernelSpec::fractional_laplacian(s).unwrap();
            for xi in [0.01, 1.0, 50.0] {
                let w = symbol(&spec, xi).unwrap();
                assert!((w / -xi.powf(2.0 * s) - 1.0).abs() < 1e-8, "s={s} xi={xi}: {w}");
            }
        }
    }

    #[test]
    fn truncated_symbol_against_direct_cosine_integral() {
        // For the flat-core kernel W = Ĵ - m with Ĵ(ξ) = 2∫ cos(ξy) J.
        let spec = KernelSpec::truncated_power_tail(0.5, 1.0, 1.0).unwrap();
        // Ĵ(ξ) = 2[sin ξ/ξ + ∫_1^∞ cos(ξy)/y² dy], m = 4.
        // ∫_1^∞ cos(ξy)/y² dy = cos ξ - ξ (π/2 - Si(ξ))
        let si = |x: f64| {
            integrate(|t: f64| if t == 0.0 { 1.0 } else { t.sin() / t }, &[0.0, x], QuadOptions::new(1e-15, 1e-13))
                .unwrap()
                .value
        };
        for xi in [0.3f64, 2.0, 9.0] {
            let jhat = 2.0 * (xi.sin() / xi + xi.cos() - xi * (PI / 2.0 - si(xi)));
            let w = symbol(&spec, xi).unwrap();
            assert!((w - (jhat - 4.0)).abs() < 1e-9, "xi={xi}: {w} vs {}", jhat - 4.0);
        }
    }

    #[test]
    fn error_bound_covers_refinement() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        for xi in [0.05, 3.0] {
            let coarse = symbol_with_error(&spec, xi, 1e-6).unwrap();
            let fine = symbol_with_error(&spec, xi, 1e-12).unwrap();
            assert!((coarse.value - fine.value).abs() <= coarse.error.max(1e-15));
        }
    }

    #[test]
    fn small_frequency_slope() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        let fit = fit_small_freq_exponent(&spec, 1e-3, 1e-2, 12).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-8);
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        let table = KernelTable::new(vec![0.5, 1.0], vec![1.0, 0.5])
            .unwrap()
            .with_mirror(vec![1.0, 0.7])
            .unwrap();
        let spec = KernelSpec::tabulated(0.25, table).unwrap();
        assert!(matches!(symbol(&spec, 1.0), Err(Error::Invariant(_))));
    }

    #[test]
    fn plateau_model_interpolates() {
        let table = KernelTable::new(
            log_samples(0.05, 20.0, 25),
            log_samples(0.05, 20.0, 25).iter().map(|z| 0.3 / (0.1 + z * z).powf(0.75)).collect(),
        )
        .unwrap();
        let spec = KernelSpec::tabulated(0.25, table).unwrap();
        let model = SymbolModel::new(&spec, 40.0).unwrap();
        for xi in [3e-9, 2e-4, 0.37, 1.3, 11.1, 33.3] {
            let direct = symbol(&spec, xi).unwrap();
            let fast = model.eval(xi);
            assert!((fast - direct).abs() < 2e-5 * direct.abs(), "xi={xi}: {fast} vs {direct}");
        }
        assert!((model.plateau().unwrap() + spec.mass()).abs() < 1e-14);
    }
}

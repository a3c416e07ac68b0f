//! Heat kernel `G(t, ·)` of `u_t = D[u]` and its Heaviside solution.
//!
//! `G(t,x) = (1/π) ∫₀^∞ e^{W(ξ)t} cos(xξ) dξ` by oscillatory quadrature on
//! quarter-period panels. For pure power kernels the substitution
//! `η = (Ct)^{1/2s} ξ` reduces everything to `g(y) = (1/π)∫ e^{-η^{2s}} cos(yη) dη`,
//! whose tail beyond a cut `c` with `yc ≫ 1` is summed by repeated
//! integration by parts, with derivatives from Taylor-series arithmetic.
//!
//! For integrable kernels `W → -m`, so `G` carries an atom `e^{-mt} δ₀`.
//! The absolutely continuous part is computed from `e^{Wt} - e^{-mt}` with a
//! Gaussian damping `e^{-δξ²}` and Richardson extrapolation in `δ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, SymbolModel};
use crate::quadrature::{integrate, QuadOptions, QuadResult};

/// Damping parameters of the plateau path, finest last.
pub const DAMPING: [f64; 3] = [1e-4, 5e-5, 2.5e-5];

/// Amplitudes below this end the quadrature.
const CUTOFF: f64 = 1e-17;
/// `y · c` at the start of the integration-by-parts tail.
const IBP_START: f64 = 60.0;
const TAYLOR_TERMS: usize = 48;

/// A value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Prepared evaluator for one kernel.
pub struct Greens {
    model: SymbolModel,
    s: f64,
}

impl Greens {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        let xi_max = (-CUTOFF.ln() / DAMPING[2]).sqrt();
        Ok(Greens {
            model: SymbolModel::new(spec, xi_max)?,
            s: spec.s,
        })
    }

    pub fn model(&self) -> &SymbolModel {
        &self.model
    }

    /// Weight of the atom at the origin, `e^{-mt}` (zero for singular kernels).
    pub fn atom(&self, t: f64) -> f64 {
        match self.model.plateau() {
            Some(w_inf) => (w_inf * t).exp(),
            None => 0.0,
        }
    }

    /// `G(t, x)`, excluding the atom at the origin.
    pub fn density(&self, t: f64, x: f64) -> Result<Estimate> {
        check_t(t)?;
        let x = x.abs();
        match &self.model {
            SymbolModel::PurePower { w1, exponent } => {
                let scale = (-w1 * t).powf(1.0 / exponent);
                let g = stable_density(*exponent, x / scale)?;
                Ok(Estimate {
                    value: g.value / scale,
                    error: g.error / scale,
                })
            }
            SymbolModel::Plateau { .. } => self.plateau_transform(t, x, Transform::Cos),
        }
    }

    /// `v(t, x) = ∫_x^∞ G(t, y) dy` with the atom split evenly at `x = 0`.
    pub fn heaviside(&self, t: f64, x: f64) -> Result<Estimate> {
        check_t(t)?;
        if x == 0.0 {
            return Ok(Estimate { value: 0.5, error: 0.0 });
        }
        let sign = x.signum();
        let half_integral = match &self.model {
            SymbolModel::PurePower { w1, exponent } => {
                let scale = (-w1 * t).powf(1.0 / exponent);
                stable_sine_integral(*exponent, x.abs() / scale)?
            }
            SymbolModel::Plateau { .. } => {
                let r = self.plateau_transform(t, x.abs(), Transform::SinOverXi)?;
                Estimate {
                    value: r.value + 0.5 * self.atom(t),
                    error: r.error,
                }
            }
        };
        Ok(Estimate {
            value: 0.5 - sign * half_integral.value,
            error: half_integral.error,
        })
    }

    /// `x^{1+2s} G(t,x) / t`.
    pub fn tail_constant(&self, t: f64, x: f64) -> Result<Estimate> {
        let g = self.density(t, x)?;
        let k = x.abs().powf(1.0 + 2.0 * self.s) / t;
        Ok(Estimate {
            value: k * g.value,
            error: k * g.error,
        })
    }

    fn plateau_transform(&self, t: f64, x: f64, kind: Transform) -> Result<Estimate> {
        let w_inf = self.model.plateau().expect("plateau model");
        let atom = (w_inf * t).exp();
        let levels: Vec<QuadResult> = DAMPING
            .iter()
            .map(|&delta| {
                let xi_max = (-CUTOFF.ln() / delta).sqrt();
                let amp = |xi: f64| {
                    let a = if xi < 1.0 {
                        (self.model.eval(xi) * t).exp() - atom
                    } else {
                        atom * (self.model.jhat(xi) * t).exp_m1()
                    };
                    a * (-delta * xi * xi).exp()
                };
                let nodes = self.model.nodes(xi_max);
                oscillatory(&amp, x, xi_max, kind, &nodes)
            })
            .collect::<Result<_>>()?;
        let (i1, i2, i3) = (levels[0].value, levels[1].value, levels[2].value);
        let extrapolated = (8.0 * i3 - 6.0 * i2 + i1) / 3.0;
        let two_level = 2.0 * i3 - i2;
        let quad_err = levels.iter().map(|l| l.error).fold(0.0, f64::max);
        Ok(Estimate {
            value: extrapolated / PI,
            error: ((extrapolated - two_level).abs() + 5.0 * quad_err) / PI,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Transform {
    /// `∫ a(ξ) cos(xξ) dξ`
    Cos,
    /// `∫ a(ξ) sin(xξ)/ξ dξ`
    SinOverXi,
}

/// Quarter-period panels on `[0, xi_max]`, also split at `nodes`.
fn oscillatory<F: Fn(f64) -> f64 + Sync>(amp: &F, x: f64, xi_max: f64, kind: Transform, nodes: &[f64]) -> Result<QuadResult> {
    let width = if x > 0.0 { (PI / (2.0 * x)).min(xi_max / 8.0) } else { xi_max / 8.0 };
    let panels = (xi_max / width).ceil() as usize;
    let mut edges: Vec<f64> = (0..panels).map(|k| k as f64 * width).chain(nodes.iter().copied()).collect();
    edges.push(xi_max);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let f = |xi: f64| match kind {
        Transform::Cos => amp(xi) * (x * xi).cos(),
        Transform::SinOverXi => {
            if xi == 0.0 {
                amp(0.0) * x
            } else {
                amp(xi) * (x * xi).sin() / xi
            }
        }
    };
    panel_sum(&f, &edges)
}

/// Sum of adaptive integrals over consecutive `edges`, in order.
fn panel_sum<F: Fn(f64) -> f64 + Sync>(f: &F, edges: &[f64]) -> Result<QuadResult> {
    const CHUNK: usize = 256;
    let panels = edges.len() - 1;
    let chunks: Vec<QuadResult> = (0..panels.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ci| {
            let mut acc = QuadResult::default();
            for k in ci * CHUNK..((ci + 1) * CHUNK).min(panels) {
                let (lo, hi) = (edges[k], edges[k + 1]);
                if hi <= lo {
                    continue;
                }
                acc = acc + integrate(f, &[lo, hi], QuadOptions::new(1e-18, 1e-12).with_budget(200))?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().fold(QuadResult::default(), |a, b| a + b))
}

/// Taylor coefficients of `exp(-(c+ε)^α)` in `ε`, optionally divided by `(c+ε)`.
fn amplitude_series(alpha: f64, c: f64, over_xi: bool) -> Vec<f64> {
    let n = TAYLOR_TERMS;
    // (c+ε)^α = c^α Σ binom(α,k) (ε/c)^k
    let mut p = vec![0.0; n];
    let mut binom = 1.0;
    for (k, pk) in p.iter_mut().enumerate() {
        *pk = c.powf(alpha - k as f64) * binom;
        binom *= (alpha - k as f64) / (k as f64 + 1.0);
    }
    let mut e = vec![0.0; n];
    e[0] = (-p[0]).exp();
    for k in 1..n {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * (-p[j]) * e[k - j];
        }
        e[k] = acc / k as f64;
    }
    if !over_xi {
        return e;
    }
    // multiply by 1/(c+ε) = Σ (-1)^k ε^k / c^{k+1}
    let inv: Vec<f64> = (0..n).map(|k| (-1f64).powi(k as i32) / c.powi(k as i32 + 1)).collect();
    (0..n).map(|k| (0..=k).map(|j| e[j] * inv[k - j]).sum()).collect()
}

/// `∫_c^∞ a(η) e^{iyη} dη = -e^{iyc} Σ_k (-1)^k a^{(k)}(c) / (iy)^{k+1}` from
/// Taylor coefficients `a^{(k)}(c)/k!`. Stops at the smallest term.
fn ibp_tail(coeffs: &[f64], y: f64, c: f64) -> (Complex64, f64) {
    let i = Complex64::new(0.0, 1.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut fact = 1.0 / y; // k! / y^{k+1}
    let mut ipow = Complex64::new(1.0, 0.0) / i; // 1 / i^{k+1}
    let mut last = f64::INFINITY;
    for (k, ck) in coeffs.iter().enumerate() {
        if k > 0 {
            fact *= k as f64 / y;
            ipow /= i;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = ipow * (sign * ck * fact);
        let mag = term.norm();
        if mag > last {
            break;
        }
        sum += term;
        last = mag;
        if mag <= 1e-18 * sum.norm() {
            break;
        }
    }
    (-(i * y * c).exp() * sum, last)
}

/// Start of the tail where integration by parts converges, or `None` if
/// the amplitude is negligible there anyway.
fn ibp_cut(alpha: f64, y: f64, eta_max: f64) -> Option<f64> {
    let smooth = if alpha < 1.0 {
        (10.0 * alpha / y).powf(1.0 / (1.0 - alpha))
    } else if y >= 10.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let c = (IBP_START / y).max(smooth);
    (c < eta_max).then_some(c)
}

/// `g(y) = (1/π) ∫₀^∞ e^{-η^α} cos(yη) dη`, the symmetric α-stable density
/// with characteristic exponent `-|ξ|^α`.
pub fn stable_density(alpha: f64, y: f64) -> Result<Estimate> {
    stable_transform(alpha, y.abs(), Transform::Cos)
}

/// `(1/π) ∫₀^∞ e^{-η^α} sin(yη)/η dη = P(0 < Y < y)` for the same law.
pub fn stable_sine_integral(alpha: f64, y: f64) -> Result<Estimate> {
    stable_transform(alpha, y, Transform::SinOverXi)
}

fn stable_transform(alpha: f64, y: f64, kind: Transform) -> Result<Estimate> {
    let eta_max = (-CUTOFF.ln()).powf(1.0 / alpha);
    let amp = |eta: f64| (-eta.powf(alpha)).exp();
    let cut = if y > 0.0 { ibp_cut(alpha, y, eta_max) } else { None };
    let end = cut.unwrap_or(eta_max);
    let body = oscillatory(&amp, y, end, kind, &[])?;
    let (tail, tail_err) = match cut {
        Some(c) => {
            let coeffs = amplitude_series(alpha, c, kind == Transform::SinOverXi);
            let (z, err) = ibp_tail(&coeffs, y, c);
            let v = match kind {
                Transform::Cos => z.re,
                Transform::SinOverXi => z.im,
            };
            (v, err)
        }
        None => {
            // ∫_{η_max}^∞ e^{-η^α} dη = Γ(1/α, η_max^α) / α
            let a = 1.0 / alpha;
            let bound = statrs::function::gamma::gamma_ur(a, eta_max.powf(alpha)) * statrs::function::gamma::gamma(a) / alpha;
            (0.0, bound)
        }
    };
    Ok(Estimate {
        value: (body.value + tail) / PI,
        error: (body.error + tail_err) / PI,
    })
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// `G(t, x)` for one kernel; see [`Greens`] to amortize setup over many points.
pub fn greens_eval(spec: &KernelSpec, t: f64, x: f64) -> Result<Estimate> {
    Greens::new(spec)?.density(t, x)
}

pub fn tail_constant(spec: &KernelSpec, t: f64, x_probe: f64) -> Result<Estimate> {
    Greens::new(spec)?.tail_constant(t, x_probe)
}

pub fn heaviside_linear_solution(spec: &KernelSpec, t: f64, x: f64) -> Result<Estimate> {
    Greens::new(spec)?.heaviside(t, x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatteningReport {
    pub t: f64,
    pub x: Vec<f64>,
    /// `x^{1+2s} G(t,x) / t` at each sample.
    pub scaled: Vec<f64>,
    pub scaled_error: Vec<f64>,
    pub c0_estimate: f64,
    /// `max/min - 1` of the scaled values.
    pub variation: f64,
    pub max_error: f64,
    pub pass: bool,
}

/// Minimum of `x^{1+2s} G / t` over log-spaced `x ∈ [x_lo, x_hi]`; passes when
/// that minimum exceeds ten times the largest error estimate.
pub fn flattening_check(spec: &KernelSpec, t: f64, x_lo: f64, x_hi: f64, samples: usize) -> Result<FlatteningReport> {
    Greens::new(spec)?.flattening(t, x_lo, x_hi, samples)
}

impl Greens {
    pub fn flattening(&self, t: f64, x_lo: f64, x_hi: f64, samples: usize) -> Result<FlatteningReport> {
        if !(x_lo > 0.0 && x_hi >= x_lo) {
            return Err(Error::domain(format!("flattening range [{x_lo}, {x_hi}] must be positive")));
        }
        let x = crate::kernel::log_samples(x_lo, x_hi, samples.max(2));
        let est: Vec<Estimate> = x.iter().map(|&xi| self.tail_constant(t, xi)).collect::<Result<_>>()?;
        let scaled: Vec<f64> = est.iter().map(|e| e.value).collect();
        let scaled_error: Vec<f64> = est.iter().map(|e| e.error).collect();
        let c0 = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_error = scaled_error.iter().copied().fold(0.0, f64::max);
        Ok(FlatteningReport {
            t,
            x,
            scaled,
            scaled_error,
            c0_estimate: c0,
            variation: hi / c0 - 1.0,
            max_error,
            pass: c0 > 0.0 && c0 > 10.0 * max_error,
        })
    }
}

/// `G(t, ·)` on a grid with the derived tail and flattening estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreensResult {
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub g_values: Vec<f64>,
    pub g_errors: Vec<f64>,
    pub atom: f64,
    pub tail_constant_estimate: f64,
    pub c0_estimate: f64,
}

impl Greens {
    /// Evaluates on `x_grid`; the tail constant and `C₀` are read at the grid's
    /// largest `|x|` and minimized over its positive entries respectively.
    pub fn on_grid(&self, t: f64, x_grid: &[f64]) -> Result<GreensResult> {
        let est: Vec<Estimate> = x_grid.iter().map(|&x| self.density(t, x)).collect::<Result<_>>()?;
        let q = 1.0 + 2.0 * self.s;
        let scaled: Vec<f64> = x_grid
            .iter()
            .zip(&est)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, e)| x.powf(q) * e.value / t)
            .collect();
        let far = x_grid
            .iter()
            .zip(&est)
            .max_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
            .map(|(x, e)| x.abs().powf(q) * e.value / t)
            .unwrap_or(f64::NAN);
        Ok(GreensResult {
            t,
            x_grid: x_grid.to_vec(),
            g_values: est.iter().map(|e| e.value).collect(),
            g_errors: est.iter().map(|e| e.error).collect(),
            atom: self.atom(t),
            tail_constant_estimate: far,
            c0_estimate: scaled.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_density_and_cdf() {
        for x in [0.0f64, 0.3, 1.0, 7.0, 50.0, 400.0] {
            let g = stable_density(1.0, x).unwrap();
            let exact = 1.0 / (PI * (1.0 + x * x));
            assert!((g.value / exact - 1.0).abs() < 1e-9, "x={x}: {} vs {exact}", g.value);
            if x > 0.0 {
                let h = stable_sine_integral(1.0, x).unwrap();
                assert!((h.value - x.atan() / PI).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_limit_alpha_two_at_origin() {
        // ∫₀^∞ e^{-η^α} dη = Γ(1 + 1/α)
        for alpha in [0.5, 0.8, 1.0] {
            let g = stable_density(alpha, 0.0).unwrap();
            let exact = statrs::function::gamma::gamma(1.0 + 1.0 / alpha) / PI;
            assert!((g.value / exact - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn series_reproduces_derivatives() {
        // d/dη e^{-η^α} = -α η^{α-1} e^{-η^α}
        let (alpha, c) = (0.5, 3.0);
        let e = amplitude_series(alpha, c, false);
        let a = (-c.powf(alpha)).exp();
        assert!((e[0] - a).abs() < 1e-16);
        assert!((e[1] + alpha * c.powf(alpha - 1.0) * a).abs() < 1e-16);
        let b = amplitude_series(alpha, c, true);
        assert!((b[0] - a / c).abs() < 1e-16);
    }
}

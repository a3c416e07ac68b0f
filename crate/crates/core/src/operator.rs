//! The nonlocal operator `D[u](x) = P.V. ∫ (u(y) - u(x)) J(x - y) dy` on a
//! uniform grid, closed analytically by the far-field states.
//!
//! Writing `D[u](x) = ∫₀^∞ E(z) J(z) dz` with the even second difference
//! `E(z) = u(x+z) + u(x-z) - 2u(x)`, `E` is replaced by `E₁ z²/h²` on the
//! first cell and by its piecewise-linear interpolant beyond. This yields
//! nonnegative weights `c_k` with `D_i = Σ_k c_k (E_k)`, so the explicit
//! scheme is monotone. Nodes past either window edge carry the far-field
//! state, and their weights sum in closed form to `S(K) = Σ_{k≥K} c_k`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::gauss10;

/// Default tolerance for the window-adequacy check.
pub const EDGE_TOL: f64 = 1e-3;

/// A grid function with constant far-field states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub left_state: f64,
    pub right_state: f64,
    pub time: f64,
    /// When set, [`Profile::validate`] also checks `u[i+1] ≤ u[i] + 1e-10`.
    pub monotone: bool,
}

impl Profile {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>, left_state: f64, right_state: f64) -> Self {
        Profile {
            x0,
            dx,
            values,
            left_state,
            right_state,
            time: 0.0,
            monotone: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_right(&self) -> f64 {
        self.x(self.len().saturating_sub(1))
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + 1e-10)
    }

    /// Range, monotonicity (if flagged) and window adequacy within `edge_tol`.
    pub fn validate(&self, edge_tol: f64) -> Result<()> {
        if self.values.len() < 2 || !(self.dx > 0.0) {
            return Err(Error::invariant("profile needs two or more nodes and dx > 0"));
        }
        if let Some(i) = self.values.iter().position(|v| !(*v >= -1e-8 && *v <= 1.0 + 1e-8)) {
            return Err(Error::invariant(format!(
                "u = {} at x = {} is outside [0, 1]",
                self.values[i],
                self.x(i)
            )));
        }
        if self.monotone {
            if let Some(i) = self.values.windows(2).position(|w| w[1] > w[0] + 1e-10) {
                return Err(Error::invariant(format!("profile increases at x = {}", self.x(i))));
            }
        }
        let n = self.len();
        if (self.values[0] - self.left_state).abs() > edge_tol {
            return Err(Error::invariant(format!(
                "left edge value {} differs from left state {} by more than {edge_tol}",
                self.values[0], self.left_state
            )));
        }
        if (self.values[n - 1] - self.right_state).abs() > edge_tol {
            return Err(Error::invariant(format!(
                "right edge value {} differs from right state {} by more than {edge_tol}",
                self.values[n - 1],
                self.right_state
            )));
        }
        Ok(())
    }
}

/// Grid weights of the operator for one spacing.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub dx: f64,
    /// `c[k]` for `k ≥ 1`; `c[0]` is unused and zero.
    pub c: Vec<f64>,
    /// `tail[K] = Σ_{k≥K} c_k` for `K ≥ 1`.
    pub tail: Vec<f64>,
}

/// Offsets below this use closed-form moments; the cancellation in
/// `M₁/h - (k-1)M₀` grows with `k`, so farther cells use Gauss rules.
const CLOSED_FORM_CELLS: usize = 16;

impl Stencil {
    /// Weights for offsets up to `n` cells.
    pub fn new(spec: &KernelSpec, dx: f64, n: usize) -> Result<Self> {
        spec.require_symmetric()?;
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::config("sim.dx", "grid spacing must be positive"));
        }
        let mut st = Stencil {
            dx,
            c: vec![0.0],
            tail: vec![f64::NAN],
        };
        st.extend(spec, n);
        Ok(st)
    }

    /// Makes weights available for offsets `1..=n+1`.
    pub fn extend(&mut self, spec: &KernelSpec, n: usize) {
        let h = self.dx;
        let start = self.c.len();
        if start > n + 1 {
            return;
        }
        let j = spec.evaluator();
        let kinks = spec.breakpoints();
        let new: Vec<(f64, f64)> = (start..=n + 1)
            .into_par_iter()
            .map(|k| {
                let rising = ramp_up(spec, &j, &kinks, h, k);
                let falling = ramp_down(spec, &j, &kinks, h, k);
                let c = if k == 1 {
                    spec.moment(2, 0.0, h) / (h * h) + falling
                } else {
                    rising + falling
                };
                let tail = if k == 1 {
                    spec.moment(2, 0.0, h) / (h * h) + spec.tail_mass(h)
                } else {
                    rising + spec.tail_mass(k as f64 * h)
                };
                (c, tail)
            })
            .collect();
        for (c, t) in new {
            self.c.push(c);
            self.tail.push(t);
        }
    }

    /// Discrete row sum `2 S(1) = Σ_{k≠0} c_{|k|}`, the stability constant.
    pub fn row_sum(&self) -> f64 {
        2.0 * self.tail[1]
    }
}

/// `∫_{(k-1)h}^{kh} (z/h - k + 1) J(z) dz`.
fn ramp_up<F: Fn(f64) -> f64>(spec: &KernelSpec, j: &F, kinks: &[f64], h: f64, k: usize) -> f64 {
    let (a, b) = ((k - 1) as f64 * h, k as f64 * h);
    if k < CLOSED_FORM_CELLS {
        return spec.moment(1, a, b) / h - (k - 1) as f64 * spec.moment(0, a, b);
    }
    split_gauss(|z| ((z - a) / h) * j(z), kinks, a, b)
}

/// `∫_{kh}^{(k+1)h} (k + 1 - z/h) J(z) dz`.
fn ramp_down<F: Fn(f64) -> f64>(spec: &KernelSpec, j: &F, kinks: &[f64], h: f64, k: usize) -> f64 {
    let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
    if k < CLOSED_FORM_CELLS {
        return (k + 1) as f64 * spec.moment(0, a, b) - spec.moment(1, a, b) / h;
    }
    split_gauss(|z| ((b - z) / h) * j(z), kinks, a, b)
}

fn split_gauss<F: Fn(f64) -> f64>(f: F, kinks: &[f64], a: f64, b: f64) -> f64 {
    let mut lo = a;
    let mut total = 0.0;
    for &p in kinks.iter().filter(|p| **p > a && **p < b) {
        total += gauss10(&f, lo, p);
        lo = p;
    }
    total + gauss10(&f, lo, b)
}

/// Pointwise evaluation from a prepared stencil.
pub fn apply_with(st: &Stencil, p: &Profile, i: usize) -> f64 {
    let n = p.len();
    let u = &p.values;
    let ui = u[i];
    let kr = n - i;
    let kl = i + 1;
    let mut sum = 0.0;
    for k in 1..kr {
        sum += st.c[k] * (u[i + k] - ui);
    }
    for k in 1..kl {
        sum += st.c[k] * (u[i - k] - ui);
    }
    sum + st.tail[kr] * (p.right_state - ui) + st.tail[kl] * (p.left_state - ui)
}

fn check_window(spec: &KernelSpec, p: &Profile, edge_tol: f64) -> Result<()> {
    let width = p.dx * (p.len().saturating_sub(1)) as f64;
    if width < spec.r0 {
        return Err(Error::config(
            "sim.window",
            format!("window width {width} is smaller than R0 = {}", spec.r0),
        ));
    }
    p.validate(edge_tol)
}

/// `D[u](x_i)`.
pub fn apply(spec: &KernelSpec, p: &Profile, i: usize) -> Result<f64> {
    check_window(spec, p, EDGE_TOL)?;
    if i >= p.len() {
        return Err(Error::domain(format!("grid index {i} outside 0..{}", p.len())));
    }
    let st = Stencil::new(spec, p.dx, p.len())?;
    Ok(apply_with(&st, p, i))
}

/// `D[u]` at every node, by the same direct sums as [`apply`].
pub fn apply_all(spec: &KernelSpec, p: &Profile) -> Result<Vec<f64>> {
    check_window(spec, p, EDGE_TOL)?;
    let st = Stencil::new(spec, p.dx, p.len())?;
    Ok((0..p.len()).into_par_iter().map(|i| apply_with(&st, p, i)).collect())
}

/// How `u` is continued past the right edge of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RightClosure {
    /// `u ≡ right_state` beyond the last node.
    Constant,
    /// `u(y) = R + (u_last - R)(x_last / y)^exponent` beyond the last node
    /// `x_last > 0`, the algebraic decay of a front driven by a heavy tail.
    PowerLaw { exponent: f64 },
}

/// Reusable operator for one kernel and spacing, with an FFT path for the
/// interior Toeplitz sum. Grows with the window.
pub struct Operator {
    spec: KernelSpec,
    stencil: Stencil,
    edge_tol: f64,
    closure: RightClosure,
    fft_len: usize,
    fft: Option<FftPlan>,
    /// `(n, x_last, weights)` of the power-law closure.
    far: Option<(usize, f64, Vec<f64>)>,
}

/// Forward and inverse plans with the transformed weights.
type FftPlan = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>, Vec<Complex64>);

/// Below this many nodes the direct O(N²) sum is used.
const FFT_THRESHOLD: usize = 512;

impl Operator {
    pub fn new(spec: &KernelSpec, dx: f64, n: usize, edge_tol: f64) -> Result<Self> {
        Ok(Operator {
            spec: spec.clone(),
            stencil: Stencil::new(spec, dx, n)?,
            edge_tol,
            closure: RightClosure::Constant,
            fft_len: 0,
            fft: None,
            far: None,
        })
    }

    pub fn with_closure(mut self, closure: RightClosure) -> Self {
        self.closure = closure;
        self
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn row_sum(&self) -> f64 {
        self.stencil.row_sum()
    }

    /// `D[u]` at every node.
    pub fn apply_all(&mut self, p: &Profile) -> Result<Vec<f64>> {
        if (p.dx - self.stencil.dx).abs() > 1e-14 * p.dx {
            return Err(Error::config("sim.dx", "profile spacing differs from the operator's"));
        }
        check_window(&self.spec, p, self.edge_tol)?;
        let n = p.len();
        self.stencil.extend(&self.spec, n);
        let mut d: Vec<f64> = if n < FFT_THRESHOLD {
            let st = &self.stencil;
            (0..n).map(|i| apply_with(st, p, i)).collect()
        } else {
            let conv = self.toeplitz(&p.values);
            let st = &self.stencil;
            let s1 = st.tail[1];
            (0..n)
                .map(|i| {
                    let ui = p.values[i];
                    conv[i] - 2.0 * s1 * ui + st.tail[n - i] * p.right_state + st.tail[i + 1] * p.left_state
                })
                .collect()
        };
        if let RightClosure::PowerLaw { exponent } = self.closure {
            let x_last = p.x_right();
            if !(x_last > 0.0) {
                return Err(Error::config("sim.window", "power-law closure needs a positive right edge"));
            }
            let excess = p.values[n - 1] - p.right_state;
            let weights = self.far_weights(n, x_last, exponent);
            for (i, di) in d.iter_mut().enumerate() {
                *di += excess * weights[n - i];
            }
        }
        Ok(d)
    }

    /// `F(K) = Σ_{m≥0} c_{K+m} (x_last / (x_last + (m+1)h))^p` for `K = 1..=n`:
    /// the weight of the last node's excess in the continued profile.
    fn far_weights(&mut self, n: usize, x_last: f64, p: f64) -> &[f64] {
        const DIRECT: usize = 64;
        let fresh = matches!(&self.far, Some((m, x, _)) if *m == n && *x == x_last);
        if !fresh {
            let h = self.stencil.dx;
            self.stencil.extend(&self.spec, n + DIRECT + 1);
            let st = &self.stencil;
            let j = self.spec.evaluator();
            let rho = |m: f64| (x_last / (x_last + (m + 1.0) * h)).powf(p);
            let mut w = vec![0.0; n + 1];
            w[1..].par_iter_mut().enumerate().for_each(|(idx, out)| {
                let k = idx + 1;
                let mut sum = 0.0;
                for m in 0..DIRECT {
                    sum += st.c[k + m] * rho(m as f64);
                }
                // Remaining cells as an integral of J against the continued profile.
                let shift = (k as f64 - 1.0) * h;
                let g = |z: f64| j(z) * (x_last / (x_last + z - shift)).powf(p);
                let mut a = (k + DIRECT) as f64 * h - 0.5 * h;
                for _ in 0..90 {
                    sum += gauss10(&g, a, 2.0 * a);
                    a *= 2.0;
                }
                *out = sum;
            });
            self.far = Some((n, x_last, w));
        }
        &self.far.as_ref().expect("filled above").2
    }

    /// `Σ_{j≠i} c_{|i-j|} u_j` for every `i`.
    fn toeplitz(&mut self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let m = (2 * n).next_power_of_two();
        if self.fft_len != m {
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(m);
            let inv = planner.plan_fft_inverse(m);
            let mut a = vec![Complex64::new(0.0, 0.0); m];
            for k in 1..n {
                a[k].re = self.stencil.c[k];
                a[m - k].re = self.stencil.c[k];
            }
            fwd.process(&mut a);
            self.fft = Some((fwd, inv, a));
            self.fft_len = m;
        }
        let (fwd, inv, a) = self.fft.as_ref().expect("planned above");
        let mut b: Vec<Complex64> = u.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        b.resize(m, Complex64::new(0.0, 0.0));
        fwd.process(&mut b);
        for (x, y) in b.iter_mut().zip(a) {
            *x *= y;
        }
        inv.process(&mut b);
        let scale = 1.0 / m as f64;
        b[..n].iter().map(|z| z.re * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::symbol;
    use crate::quadrature::{integrate, QuadOptions};

    fn flat(n: usize, v: f64) -> Profile {
        Profile::new(-(n as f64) / 2.0 * 0.1, 0.1, vec![v; n], v, v)
    }

    #[test]
    fn constant_profile_is_fixed() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        let p = flat(101, 0.7);
        for d in apply_all(&spec, &p).unwrap() {
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn weights_are_positive_and_sum() {
        let spec = KernelSpec::truncated_power_tail(0.3, 1.0, 0.5).unwrap();
        let st = Stencil::new(&spec, 0.2, 400).unwrap();
        assert!(st.c[1..].iter().all(|c| *c > 0.0));
        // S(1) - Σ_{k<K} c_k = S(K)
        let partial: f64 = st.c[1..40].iter().sum();
        assert!((st.tail[1] - partial - st.tail[40]).abs() < 1e-12 * st.tail[1]);
        // with a finite mass, S(1) → m/2 as h → 0 (the quadratic cell vanishes)
        let fine = Stencil::new(&spec, 1e-4, 4).unwrap();
        assert!((fine.row_sum() / spec.mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn far_weights_match_adaptive_quadrature() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        let h = 0.3;
        let st = Stencil::new(&spec, h, 60).unwrap();
        for k in [2usize, 15, 16, 40] {
            let kf = k as f64;
            let exact = integrate(
                |z: f64| (1.0 - (z / h - kf).abs()) * spec.eval_abs(z),
                &[(kf - 1.0) * h, kf * h, (kf + 1.0) * h],
                QuadOptions::new(1e-16, 1e-13),
            )
            .unwrap()
            .value;
            assert!((st.c[k] / exact - 1.0).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn sine_reproduces_symbol() {
        let spec = KernelSpec::fractional_laplacian(0.25).unwrap();
        let xi = 1.0;
        let dx = std::f64::consts::PI / (160.0 * xi);
        let half = 32_000.0 * dx;
        let n = 64_001;
        let values: Vec<f64> = (0..n).map(|i| 0.5 + 0.4 * (xi * (-half + i as f64 * dx)).sin()).collect();
        let p = Profile::new(-half, dx, values, 0.5, 0.5);
        let i = n / 2 + 39;
        let d = apply(&spec, &p, i).unwrap();
        let expected = symbol(&spec, xi).unwrap() * 0.4 * (xi * p.x(i)).sin();
        assert!((d / expected - 1.0).abs() < 0.01, "{d} vs {expected}");
    }

    #[test]
    fn fft_path_matches_direct() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        let n = 1500;
        let values: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + ((i as f64 - 300.0) * 0.05).exp())).collect();
        let mut p = Profile::new(-15.0, 0.05, values, 1.0, 0.0);
        p.values[n - 1] = 0.0;
        let direct = apply_all(&spec, &p).unwrap();
        let mut op = Operator::new(&spec, 0.05, n, EDGE_TOL).unwrap();
        let fast = op.apply_all(&p).unwrap();
        let scale = op.row_sum();
        for (a, b) in direct.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn narrow_window_rejected() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap().with_constants(None, None, Some(5.0)).unwrap();
        assert!(matches!(apply(&spec, &flat(11, 0.5), 5), Err(Error::Config { .. })));
    }
}

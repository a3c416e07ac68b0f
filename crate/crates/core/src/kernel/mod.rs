//! Symmetric jump kernels with power-law tails.
//!
//! Every built-in family is piecewise a power law, `J(z) = j_ref (z/z_ref)^p`
//! on consecutive intervals of `(0, ∞)`, ending in the declared tail
//! `c z^{-1-2s}`. Moments, tail masses and the oscillatory tail transform
//! are therefore available in closed form, which the operator weights and
//! the symbol quadrature rely on.

mod symbol;

pub use symbol::{fit_small_freq_exponent, symbol, symbol_with_error, FourierSymbol, SmallFreqFit, SymbolModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Sampled jump density on positive abscissae.
///
/// `mirror`, when present, holds the values at `-z`; it exists so that
/// asymmetric data can be represented and rejected by
/// [`verify_hypothesis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub z: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror: Option<Vec<f64>>,
}

impl KernelTable {
    pub fn new(z: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let table = KernelTable { z, values, mirror: None };
        table.validate()?;
        Ok(table)
    }

    pub fn with_mirror(mut self, mirror: Vec<f64>) -> Result<Self> {
        if mirror.len() != self.z.len() || mirror.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("kernel.table", "mirror values must be positive, one per node"));
        }
        self.mirror = Some(mirror);
        Ok(self)
    }

    /// Parses a two-column `z,J` CSV. A non-numeric first line is treated as a header.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (z, values) = parse_two_columns(text, "kernel.table")?;
        KernelTable::new(z, values)
    }

    fn validate(&self) -> Result<()> {
        if self.z.len() < 2 || self.z.len() != self.values.len() {
            return Err(Error::config("kernel.table", "need at least two (z, J) rows"));
        }
        if !(self.z[0] > 0.0) {
            return Err(Error::config("kernel.table", "abscissae must be positive"));
        }
        if self.z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("kernel.table", "abscissae must be strictly increasing"));
        }
        if self.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config("kernel.table", "kernel values must be positive and finite"));
        }
        Ok(())
    }
}

pub(crate) fn parse_two_columns(text: &str, field: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (first, second) = match (cols.next(), cols.next()) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::config(field, format!("line {}: expected two columns", lineno + 1))),
        };
        match (first.parse::<f64>(), second.parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                a.push(x);
                b.push(y);
            }
            _ if a.is_empty() && lineno == 0 => continue,
            _ => return Err(Error::config(field, format!("line {}: not a number", lineno + 1))),
        }
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// `J(z) = c |z|^{-1-2s}` on all of `ℝ \ {0}`.
    FractionalPure,
    /// `J(z) = c max(|z|, r_c)^{-1-2s}`: flat core of radius `r_c ≤ 1`, power tail.
    TruncatedPowerTail { core_radius: f64 },
    /// Log-log interpolated samples, constant below the first node and
    /// `c z^{-1-2s}` beyond the last one.
    TabulatedSymmetric { table: KernelTable },
}

/// A jump kernel together with its comparability constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub s: f64,
    /// Tail amplitude: `J(z) = c z^{-1-2s}` for `z` beyond [`KernelSpec::tail_start`].
    pub c: f64,
    pub j0: f64,
    pub j1: f64,
    pub r0: f64,
}

/// One power-law segment `J(z) = j_ref (z / z_ref)^p` on `[a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPiece {
    pub a: f64,
    pub b: f64,
    pub z_ref: f64,
    pub j_ref: f64,
    pub p: f64,
}

impl PowerPiece {
    #[inline]
    fn eval(&self, z: f64) -> f64 {
        self.j_ref * (z / self.z_ref).powf(self.p)
    }

    /// `∫_lo^hi z^m J(z) dz` for `a ≤ lo ≤ hi ≤ b`.
    fn moment(&self, m: i32, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let g = m as f64 + self.p + 1.0;
        let scale = self.j_ref * self.z_ref.powi(m + 1);
        let r_lo = lo / self.z_ref;
        let r_hi = hi / self.z_ref;
        if g.abs() < 1e-13 {
            if lo == 0.0 || hi.is_infinite() {
                return f64::INFINITY;
            }
            return scale * ((hi - lo) / lo).ln_1p();
        }
        if lo == 0.0 {
            if g < 0.0 {
                return f64::INFINITY;
            }
            return scale * r_hi.powf(g) / g;
        }
        if hi.is_infinite() {
            if g > 0.0 {
                return f64::INFINITY;
            }
            return -scale * r_lo.powf(g) / g;
        }
        scale * r_lo.powf(g) * (g * ((hi - lo) / lo).ln_1p()).exp_m1() / g
    }

    /// k-th derivative of the segment's power law at `y`.
    fn derivative(&self, k: usize, y: f64) -> f64 {
        let mut coef = 1.0;
        for j in 0..k {
            coef *= self.p - j as f64;
        }
        if coef == 0.0 {
            return 0.0;
        }
        self.j_ref * coef * (y / self.z_ref).powf(self.p) / y.powi(k as i32)
    }
}

impl KernelSpec {
    /// Pure fractional kernel `c |z|^{-1-2s}`, with `𝒥₀ = max(c, 1/c)`,
    /// the sharp `𝒥₁ = c / (2(1-s))` and `R₀ = 1`.
    pub fn fractional(s: f64, c: f64) -> Result<Self> {
        check_s(s)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config("kernel.c", "amplitude must be positive"));
        }
        let spec = KernelSpec {
            family: KernelFamily::FractionalPure,
            s,
            c,
            j0: c.max(1.0 / c),
            j1: c / (2.0 * (1.0 - s)),
            r0: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Fractional kernel normalized so that its symbol is exactly `-|ξ|^{2s}`
    /// (the fractional Laplacian `(-Δ)^s` up to sign).
    pub fn fractional_laplacian(s: f64) -> Result<Self> {
        check_s(s)?;
        KernelSpec::fractional(s, fractional_laplacian_constant(s))
    }

    pub fn truncated_power_tail(s: f64, c: f64, core_radius: f64) -> Result<Self> {
        check_s(s)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config("kernel.c", "amplitude must be positive"));
        }
        if !(core_radius > 0.0 && core_radius <= 1.0) {
            return Err(Error::config("kernel.core_radius", "must lie in (0, 1]"));
        }
        let mut spec = KernelSpec {
            family: KernelFamily::TruncatedPowerTail { core_radius },
            s,
            c,
            j0: 1.0,
            j1: 1.0,
            r0: 1.0,
        };
        spec.derive_constants();
        spec.validate()?;
        Ok(spec)
    }

    /// Tabulated symmetric kernel. The tail amplitude is fitted so the
    /// power-law extrapolation is continuous at the last node.
    pub fn tabulated(s: f64, table: KernelTable) -> Result<Self> {
        check_s(s)?;
        table.validate()?;
        let n = table.z.len();
        let c = table.values[n - 1] * table.z[n - 1].powf(1.0 + 2.0 * s);
        let mut spec = KernelSpec {
            family: KernelFamily::TabulatedSymmetric { table },
            s,
            c,
            j0: 1.0,
            j1: 1.0,
            r0: 1.0,
        };
        spec.derive_constants();
        spec.validate()?;
        Ok(spec)
    }

    /// Replaces the comparability constants.
    pub fn with_constants(mut self, j0: Option<f64>, j1: Option<f64>, r0: Option<f64>) -> Result<Self> {
        if let Some(j0) = j0 {
            self.j0 = j0;
        }
        if let Some(j1) = j1 {
            self.j1 = j1;
        }
        if let Some(r0) = r0 {
            self.r0 = r0;
        }
        self.validate()?;
        Ok(self)
    }

    /// Smallest constants for which the tail bounds and moment bound hold with `R₀ = 1`.
    fn derive_constants(&mut self) {
        self.r0 = 1.0;
        let (upper, lower) = self.tail_ratio_extremes(1.0);
        self.j0 = upper.max(1.0 / lower);
        self.j1 = self.moment(2, 0.0, 1.0);
    }

    pub fn validate(&self) -> Result<()> {
        check_s(self.s)?;
        for (name, v) in [("kernel.c", self.c), ("kernel.J0", self.j0), ("kernel.J1", self.j1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive and finite"));
            }
        }
        if !(self.r0 >= 1.0 && self.r0.is_finite()) {
            return Err(Error::config("kernel.R0", "must be at least 1"));
        }
        if let KernelFamily::TabulatedSymmetric { table } = &self.family {
            table.validate()?;
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            KernelFamily::TabulatedSymmetric { table } => match &table.mirror {
                Some(m) => m == &table.values,
                None => true,
            },
            _ => true,
        }
    }

    pub(crate) fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::invariant("kernel table is not symmetric"))
        }
    }

    /// Power-law segments covering `(0, ∞)`.
    pub fn pieces(&self) -> Vec<PowerPiece> {
        let tail_p = -1.0 - 2.0 * self.s;
        match &self.family {
            KernelFamily::FractionalPure => vec![PowerPiece {
                a: 0.0,
                b: f64::INFINITY,
                z_ref: 1.0,
                j_ref: self.c,
                p: tail_p,
            }],
            KernelFamily::TruncatedPowerTail { core_radius } => {
                let rc = *core_radius;
                vec![
                    PowerPiece {
                        a: 0.0,
                        b: rc,
                        z_ref: rc,
                        j_ref: self.c * rc.powf(tail_p),
                        p: 0.0,
                    },
                    PowerPiece {
                        a: rc,
                        b: f64::INFINITY,
                        z_ref: rc,
                        j_ref: self.c * rc.powf(tail_p),
                        p: tail_p,
                    },
                ]
            }
            KernelFamily::TabulatedSymmetric { table } => table_pieces(&table.z, &table.values, tail_p),
        }
    }

    /// Points where `J` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces().iter().skip(1).map(|p| p.a).collect()
    }

    /// Start of the pure `c z^{-1-2s}` tail.
    pub fn tail_start(&self) -> f64 {
        self.pieces().last().map(|p| p.a).unwrap_or(0.0)
    }

    pub fn is_integrable(&self) -> bool {
        !matches!(self.family, KernelFamily::FractionalPure)
    }

    /// Evaluates `J(z)`; `z = 0` is rejected since the singular families blow up there.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if z == 0.0 || !z.is_finite() {
            return Err(Error::domain("kernel evaluated at z = 0"));
        }
        if z < 0.0 {
            if let KernelFamily::TabulatedSymmetric { table } = &self.family {
                if let Some(mirror) = &table.mirror {
                    let tail_p = -1.0 - 2.0 * self.s;
                    let pieces = table_pieces(&table.z, mirror, tail_p);
                    return Ok(eval_pieces(&pieces, -z));
                }
            }
        }
        Ok(self.eval_abs(z.abs()))
    }

    /// `J(|z|)` for `z > 0` without argument checks.
    #[inline]
    pub fn eval_abs(&self, z: f64) -> f64 {
        match &self.family {
            KernelFamily::FractionalPure => self.c * z.powf(-1.0 - 2.0 * self.s),
            KernelFamily::TruncatedPowerTail { core_radius } => {
                self.c * z.max(*core_radius).powf(-1.0 - 2.0 * self.s)
            }
            KernelFamily::TabulatedSymmetric { .. } => eval_pieces(&self.pieces(), z),
        }
    }

    /// `J(|z|)` as a closure that reuses one segment table; use in hot loops.
    pub fn evaluator(&self) -> impl Fn(f64) -> f64 + Sync {
        let pieces = self.pieces();
        move |z: f64| eval_pieces(&pieces, z)
    }

    /// `∫_lo^hi z^m J(z) dz` over `0 ≤ lo ≤ hi ≤ ∞`, in closed form.
    pub fn moment(&self, m: i32, lo: f64, hi: f64) -> f64 {
        moment_pieces(&self.pieces(), m, lo, hi)
    }

    /// `∫_Z^∞ J(z) dz`; equals `c / (2s Z^{2s})` on the pure tail.
    pub fn tail_mass(&self, z: f64) -> f64 {
        self.moment(0, z, f64::INFINITY)
    }

    /// Total mass `∫_ℝ J`, infinite for the singular family.
    pub fn mass(&self) -> f64 {
        2.0 * self.moment(0, 0.0, f64::INFINITY)
    }

    /// `(sup, inf)` of `J(z) z^{1+2s}` over `z ≥ from`.
    fn tail_ratio_extremes(&self, from: f64) -> (f64, f64) {
        let q = 1.0 + 2.0 * self.s;
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for piece in self.pieces() {
            if piece.b <= from {
                continue;
            }
            let start = piece.a.max(from);
            let mut probe = |z: f64| {
                let r = piece.eval(z) * z.powf(q);
                hi = hi.max(r);
                lo = lo.min(r);
            };
            probe(start);
            if piece.b.is_finite() {
                // Limit from the left of the segment end.
                let r = piece.eval(piece.b) * piece.b.powf(q);
                hi = hi.max(r);
                lo = lo.min(r);
            } else {
                probe(start.max(1.0) * 2.0);
            }
        }
        (hi, lo)
    }

    /// `∫_L^∞ cos(ξy) J(y) dy` by integrating each power-law segment by parts
    /// repeatedly. Requires `ξ L` large (the terms shrink like `k / (ξ y)`).
    /// Returns `(value, error_estimate)`.
    pub fn cos_transform_tail(&self, xi: f64, from: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut err = 0.0;
        for piece in self.pieces() {
            if piece.b <= from {
                continue;
            }
            let a = piece.a.max(from);
            let (v, e) = ibp_series(&piece, xi, a);
            re += v;
            err += e;
            if piece.b.is_finite() {
                let (v, e) = ibp_series(&piece, xi, piece.b);
                re -= v;
                err += e;
            }
        }
        (re, err)
    }
}

/// `Re Σ_k g^{(k)}(y) e^{-iξy} / (iξ)^{k+1}`: the boundary contribution at `y`
/// of `∫_y^∞ g(t) cos(ξt) dt`.
fn ibp_series(piece: &PowerPiece, xi: f64, y: f64) -> (f64, f64) {
    let (sin, cos) = (xi * y).sin_cos();
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut inv = 1.0 / xi;
    for k in 0..80 {
        let d = piece.derivative(k, y);
        // 1/(i)^{k+1} cycles through -i, -1, i, 1.
        let term_complex = d * inv;
        let re = match k % 4 {
            0 => -sin * term_complex,
            1 => -cos * term_complex,
            2 => sin * term_complex,
            _ => cos * term_complex,
        };
        let mag = term_complex.abs();
        if mag > last {
            break;
        }
        sum += re;
        last = mag;
        if mag <= 1e-17 * sum.abs().max(1e-300) || d == 0.0 {
            last = 0.0;
            break;
        }
        inv /= xi;
    }
    (sum, last)
}

fn table_pieces(z: &[f64], values: &[f64], tail_p: f64) -> Vec<PowerPiece> {
    let n = z.len();
    let mut pieces = Vec::with_capacity(n + 1);
    pieces.push(PowerPiece {
        a: 0.0,
        b: z[0],
        z_ref: z[0],
        j_ref: values[0],
        p: 0.0,
    });
    for i in 0..n - 1 {
        let p = (values[i + 1] / values[i]).ln() / (z[i + 1] / z[i]).ln();
        pieces.push(PowerPiece {
            a: z[i],
            b: z[i + 1],
            z_ref: z[i],
            j_ref: values[i],
            p,
        });
    }
    pieces.push(PowerPiece {
        a: z[n - 1],
        b: f64::INFINITY,
        z_ref: z[n - 1],
        j_ref: values[n - 1],
        p: tail_p,
    });
    pieces
}

fn eval_pieces(pieces: &[PowerPiece], z: f64) -> f64 {
    let idx = pieces.partition_point(|p| p.b <= z).min(pieces.len() - 1);
    pieces[idx].eval(z)
}

fn moment_pieces(pieces: &[PowerPiece], m: i32, lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for piece in pieces {
        let a = piece.a.max(lo);
        let b = piece.b.min(hi);
        if b > a {
            total += piece.moment(m, a, b);
        }
    }
    total
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 0.5) {
        return Err(Error::config("kernel.s", format!("tail exponent {s} outside (0, 1/2]")));
    }
    Ok(())
}

/// `c_s` with `∫ (1 - cos ξy) c_s |y|^{-1-2s} dy = |ξ|^{2s}`:
/// `c_s = s / (Γ(2-2s) · sin(π(1/2 - s)) / (1 - 2s))`, equal to `1/π` at `s = 1/2`.
pub fn fractional_laplacian_constant(s: f64) -> f64 {
    let u = 0.5 - s;
    let h = if u.abs() < 1e-8 {
        std::f64::consts::FRAC_PI_2 * (1.0 - (std::f64::consts::PI * u).powi(2) / 6.0)
    } else {
        (std::f64::consts::PI * u).sin() / (2.0 * u)
    };
    s / (statrs::function::gamma::gamma(2.0 - 2.0 * s) * h)
}

/// Outcome of checking the kernel hypotheses on a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub symmetric: bool,
    pub moment_bound: bool,
    pub tail_upper: bool,
    pub tail_lower: bool,
    /// `∫_{|z|≤1} z² J(z) dz` as computed.
    pub second_moment: f64,
    pub witnesses: Witnesses,
}

/// First failing sample for each check.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Witnesses {
    pub symmetric: Option<f64>,
    pub moment_bound: Option<f64>,
    pub tail_upper: Option<f64>,
    pub tail_lower: Option<f64>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.symmetric && self.moment_bound && self.tail_upper && self.tail_lower
    }
}

/// Checks symmetry, the near-origin second-moment bound and the two-sided
/// tail comparability at every sample.
pub fn verify_hypothesis(spec: &KernelSpec, z_samples: &[f64]) -> HypothesisReport {
    let q = 1.0 + 2.0 * spec.s;
    let mut w = Witnesses::default();
    for &z in z_samples.iter().filter(|z| **z > 0.0 && z.is_finite()) {
        let (jp, jm) = match (spec.eval(z), spec.eval(-z)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        if w.symmetric.is_none() && (jp - jm).abs() > 1e-12 * jp.abs().max(jm.abs()) {
            w.symmetric = Some(z);
        }
        for (j, signed) in [(jp, z), (jm, -z)] {
            if z >= 1.0 && w.tail_upper.is_none() && j > spec.j0 * z.powf(-q) {
                w.tail_upper = Some(signed);
            }
            if z >= spec.r0 && w.tail_lower.is_none() && j < z.powf(-q) / spec.j0 {
                w.tail_lower = Some(signed);
            }
        }
    }
    // Composite Gauss–Kronrod on (0, 1] for each side, split at the kernel's kinks.
    let mut pts = vec![0.0];
    pts.extend(spec.breakpoints().into_iter().filter(|b| *b < 1.0));
    pts.push(1.0);
    let side = |neg: bool| {
        integrate(
            |z: f64| {
                let j = if neg { spec.eval(-z) } else { spec.eval(z) };
                z * z * j.unwrap_or(0.0)
            },
            &pts,
            QuadOptions::new(1e-15, 1e-12).with_budget(20_000),
        )
        .map(|r| r.value)
        .unwrap_or(f64::INFINITY)
    };
    let second_moment = side(false) + side(true);
    let moment_bound = second_moment <= 2.0 * spec.j1 * (1.0 + 1e-10);
    if !moment_bound {
        w.moment_bound = Some(second_moment);
    }
    HypothesisReport {
        symmetric: w.symmetric.is_none(),
        moment_bound,
        tail_upper: w.tail_upper.is_none(),
        tail_lower: w.tail_lower.is_none(),
        second_moment,
        witnesses: w,
    }
}

/// Log-spaced positive samples on `[lo, hi]`.
pub fn log_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cauchy_kernel_value() {
        let spec = KernelSpec::fractional(0.5, 1.0 / PI).unwrap();
        let j = spec.eval(2.0).unwrap();
        assert!((j - 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert_eq!(spec.eval(-2.0).unwrap(), j);
    }

    #[test]
    fn zero_argument_is_rejected() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        assert!(matches!(spec.eval(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn truncated_tail_is_comparable() {
        let spec = KernelSpec::truncated_power_tail(0.25, 1.0, 1.0)
            .unwrap()
            .with_constants(Some(2.0), None, Some(1.0))
            .unwrap();
        let j = spec.eval(10.0).unwrap();
        let base = 10f64.powf(-1.5);
        assert!(j >= base / 2.0 && j <= 2.0 * base);
    }

    #[test]
    fn moment_matches_antiderivative() {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        // ∫₀¹ z² z^{-3/2} dz = 2/3
        assert!((spec.moment(2, 0.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((spec.tail_mass(4.0) - 1.0 / (0.5 * 2.0)).abs() < 1e-15);
        assert!(spec.moment(0, 0.0, 1.0).is_infinite());
        // narrow far cell keeps full relative accuracy
        let (a, b) = (1e4, 1e4 + 1e-3);
        let approx = 1e-3 * (a + 5e-4f64).powf(-1.5);
        assert!((spec.moment(0, a, b) / approx - 1.0).abs() < 1e-9);
    }

    #[test]
    fn truncated_mass_closed_form() {
        let (s, c, rc) = (0.25, 1.0, 0.5);
        let spec = KernelSpec::truncated_power_tail(s, c, rc).unwrap();
        let expected = 2.0 * c * rc.powf(-2.0 * s) * (1.0 + 1.0 / (2.0 * s));
        assert!((spec.mass() - expected).abs() < 1e-13);
    }

    #[test]
    fn tabulated_interpolates_log_log() {
        let table = KernelTable::new(vec![0.5, 1.0, 2.0], vec![4.0, 1.0, 0.25]).unwrap();
        let spec = KernelSpec::tabulated(0.5, table).unwrap();
        // slope -2 between nodes and in the tail
        assert!((spec.eval(1.5).unwrap() - 1.0 / 2.25).abs() < 1e-14);
        assert!((spec.eval(4.0).unwrap() - 1.0 / 16.0).abs() < 1e-14);
        // flat below the first node
        assert_eq!(spec.eval(0.1).unwrap(), 4.0);
        assert!((spec.c - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csv_table_with_header() {
        let t = KernelTable::from_csv_str("z,J\n0.5,2\n1,1\n").unwrap();
        assert_eq!(t.z, vec![0.5, 1.0]);
        assert!(KernelTable::from_csv_str("z,J\n1,1\n0.5,2\n").is_err());
        assert!(KernelTable::from_csv_str("z,J\n1,1\nfoo,2\n").is_err());
    }

    #[test]
    fn verify_pure_fractional_equality_case() {
        let spec = KernelSpec::fractional(0.25, 1.0)
            .unwrap()
            .with_constants(Some(1.0 + 1e-9), None, None)
            .unwrap();
        let report = verify_hypothesis(&spec, &log_samples(1e-3, 1e4, 60));
        assert!(report.all_hold(), "{report:?}");
    }

    #[test]
    fn second_moment_threshold() {
        // ∫_{|z|≤1} z² |z|^{-3/2} dz = 4/3, so the bound needs 𝒥₁ ≥ 2/3.
        let samples = log_samples(1e-3, 1e3, 20);
        let ok = KernelSpec::fractional(0.25, 1.0)
            .unwrap()
            .with_constants(None, Some(2.0 / 3.0 + 1e-6), None)
            .unwrap();
        let r = verify_hypothesis(&ok, &samples);
        assert!(r.moment_bound);
        assert!((r.second_moment - 4.0 / 3.0).abs() < 1e-10);
        let bad = ok.with_constants(None, Some(2.0 / 3.0 - 1e-6), None).unwrap();
        let r = verify_hypothesis(&bad, &samples);
        assert!(!r.moment_bound);
        assert!(r.witnesses.moment_bound.is_some());
    }

    #[test]
    fn asymmetric_table_has_witness() {
        let table = KernelTable::new(vec![0.5, 1.0, 2.0], vec![4.0, 1.0, 0.25])
            .unwrap()
            .with_mirror(vec![4.0, 1.5, 0.25])
            .unwrap();
        let spec = KernelSpec::tabulated(0.5, table).unwrap();
        let report = verify_hypothesis(&spec, &log_samples(0.1, 10.0, 41));
        assert!(!report.symmetric);
        let w = report.witnesses.symmetric.unwrap();
        assert!(w > 0.5 && w < 2.0);
        assert!(spec.require_symmetric().is_err());
    }

    #[test]
    fn tail_violation_is_located() {
        let spec = KernelSpec::fractional(0.25, 3.0)
            .unwrap()
            .with_constants(Some(2.0), None, None)
            .unwrap();
        let report = verify_hypothesis(&spec, &[0.5, 1.0, 2.0]);
        assert!(!report.tail_upper);
        assert_eq!(report.witnesses.tail_upper, Some(1.0));
        assert!(report.tail_lower);
    }

    #[test]
    fn derived_constants_satisfy_hypothesis() {
        let table = KernelTable::new(
            log_samples(0.05, 20.0, 30),
            log_samples(0.05, 20.0, 30).iter().map(|z| 0.3 / (0.1 + z * z).powf(0.75)).collect(),
        )
        .unwrap();
        for spec in [
            KernelSpec::fractional(0.3, 0.5).unwrap(),
            KernelSpec::truncated_power_tail(0.25, 1.0, 0.5).unwrap(),
            KernelSpec::tabulated(0.25, table).unwrap(),
        ] {
            let report = verify_hypothesis(&spec, &log_samples(1e-3, 1e4, 200));
            assert!(report.all_hold(), "{:?}: {report:?}", spec.family);
        }
    }

    #[test]
    fn laplacian_constant_known_values() {
        assert!((fractional_laplacian_constant(0.5) - 1.0 / PI).abs() < 1e-15);
        let via_gamma = |s: f64| {
            s / (statrs::function::gamma::gamma(1.0 - 2.0 * s) * (PI * s).cos())
        };
        for s in [0.1, 0.25, 0.4] {
            assert!((fractional_laplacian_constant(s) / via_gamma(s) - 1.0).abs() < 1e-12);
        }
        assert!((fractional_laplacian_constant(0.5 - 1e-10) - 1.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn cos_tail_matches_quadrature() {
        let spec = KernelSpec::truncated_power_tail(0.25, 1.0, 0.5).unwrap();
        let xi = 3.0;
        let from = 40.0;
        let (v, e) = spec.cos_transform_tail(xi, from);
        // brute force to a far cutoff, then the exact pure-tail series beyond
        let far = 4000.0;
        let pts: Vec<f64> = (0..=((far - from) / 0.25) as usize).map(|k| from + 0.25 * k as f64).collect();
        let body = integrate(|y: f64| (xi * y).cos() * spec.eval_abs(y), &pts, QuadOptions::new(1e-14, 1e-12).with_budget(100_000))
            .unwrap();
        let (rest, _) = spec.cos_transform_tail(xi, far);
        assert!((v - (body.value + rest)).abs() < 1e-12, "{v} vs {}", body.value + rest);
        assert!(e < 1e-12);
    }
}

//! The explicit sub-solution
//!
//! `ū = ε` for `x ≤ X(t)` and `ū = q(w) = 3w(1 - w/ε + w²/(3ε²))` beyond, with
//! `w = [x^{2s}/(κt) + γ]^{-1}` and `X(t)` the `ε`-level of `w`,
//! together with a pointwise checker of `ū_t ≤ D[ū] + f(ū)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::operator::Profile;
use crate::quadrature::{integrate, QuadOptions, QuadResult};
use crate::reaction::Reaction;

/// Default `σ`, with `γ = (1 - σ)/ε`.
pub const DEFAULT_SIGMA: f64 = 0.05;
/// Default relative residual tolerance of the certificate.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Ratio of the geometric `t`-scan.
pub const SCAN_RATIO: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsolutionParams {
    pub s: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub eta: f64,
    pub t_star: Option<f64>,
    pub kernel_j0: f64,
    pub kernel_j1: f64,
    pub kernel_r0: f64,
}

/// `κ* = 1 / (48 J₀ s (1+ε)²)`.
pub fn kappa_star(j0: f64, s: f64, epsilon: f64) -> f64 {
    1.0 / (48.0 * j0 * s * (1.0 + epsilon) * (1.0 + epsilon))
}

/// Unique positive root of `z³/ε² + z - (ε - θ)`, by bisection on `(0, ε - θ]`.
pub fn eta_root(epsilon: f64, theta: f64) -> Result<f64> {
    if !(epsilon > theta) {
        return Err(Error::domain(format!("η needs ε > θ, got ε = {epsilon}, θ = {theta}")));
    }
    let p = |z: f64| z * z * z / (epsilon * epsilon) + z - (epsilon - theta);
    let (mut lo, mut hi) = (0.0, epsilon - theta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl SubsolutionParams {
    /// Parameters for a kernel and reaction; `kappa = None` selects `κ*`.
    pub fn new(spec: &KernelSpec, f: &Reaction, epsilon: f64, sigma: f64, kappa: Option<f64>) -> Result<Self> {
        let theta = f.theta();
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::config("subsolution.sigma", "must lie in (0, 1)"));
        }
        if !(epsilon > theta && epsilon < 1.0) {
            return Err(Error::config("subsolution.epsilon", format!("must lie in (θ, 1) = ({theta}, 1)")));
        }
        let kappa = kappa.unwrap_or_else(|| kappa_star(spec.j0, spec.s, epsilon));
        let p = SubsolutionParams {
            s: spec.s,
            theta,
            epsilon,
            gamma: (1.0 - sigma) / epsilon,
            sigma,
            kappa,
            eta: eta_root(epsilon, theta)?,
            t_star: None,
            kernel_j0: spec.j0,
            kernel_j1: spec.j1,
            kernel_r0: spec.r0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s <= 0.5) {
            return Err(Error::config("kernel.s", "the construction needs s in (0, 1/2]"));
        }
        if !(self.theta < self.epsilon && self.epsilon < 1.0) {
            return Err(Error::config("subsolution.epsilon", "must lie in (θ, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0 / self.epsilon) {
            return Err(Error::invariant(format!("γ = {} must lie in (0, 1/ε)", self.gamma)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::config("subsolution.kappa", "must be positive"));
        }
        if !(self.eta > 0.0 && self.eta < self.epsilon - self.theta) {
            return Err(Error::invariant("η must lie in (0, ε - θ)"));
        }
        Ok(())
    }

    pub fn kappa_star(&self) -> f64 {
        kappa_star(self.kernel_j0, self.s, self.epsilon)
    }

    fn level(&self, value: f64, t: f64) -> f64 {
        ((1.0 / value - self.gamma) * self.kappa * t).powf(0.5 / self.s)
    }

    /// `X(t)`, where `w = ε`.
    pub fn x_front(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if !(self.gamma < 1.0 / self.epsilon) {
            return Err(Error::invariant("X(t) needs γ < 1/ε"));
        }
        Ok(self.level(self.epsilon, t))
    }

    /// `X_η(t)`, where `w = ε - η`.
    pub fn x_eta(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if !(self.gamma < 1.0 / (self.epsilon - self.eta)) {
            return Err(Error::invariant("X_η(t) needs γ < 1/(ε - η)"));
        }
        Ok(self.level(self.epsilon - self.eta, t))
    }

    pub fn w(&self, t: f64, x: f64) -> Result<f64> {
        check_time(t)?;
        if !(x > 0.0) {
            return Err(Error::domain(format!("w needs x > 0, got {x}")));
        }
        Ok(self.w_raw(t, x))
    }

    #[inline]
    fn w_raw(&self, t: f64, x: f64) -> f64 {
        1.0 / (x.powf(2.0 * self.s) / (self.kappa * t) + self.gamma)
    }

    /// `q(w) = 3w(1 - w/ε + w²/(3ε²)) = ε - (ε - w)³/ε²`.
    #[inline]
    fn cubic(&self, w: f64) -> f64 {
        let e = self.epsilon;
        3.0 * w * (1.0 - w / e + w * w / (3.0 * e * e))
    }

    pub fn ubar(&self, t: f64, x: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.ubar_raw(t, x, self.level(self.epsilon, t)))
    }

    #[inline]
    fn ubar_raw(&self, t: f64, x: f64, front: f64) -> f64 {
        if x <= front {
            self.epsilon
        } else {
            self.cubic(self.w_raw(t, x))
        }
    }

    /// `w_t`, `w_x`, `w_xx` from differentiating `w = 1/g`, `g = x^{2s}/(κt) + γ`.
    pub fn w_derivatives(&self, t: f64, x: f64) -> Result<(f64, f64, f64)> {
        let w = self.w(t, x)?;
        let (s, kt) = (self.s, self.kappa * t);
        let wt = self.kappa * w * w * x.powf(2.0 * s) / (kt * kt);
        let wx = -2.0 * s * w * w * x.powf(2.0 * s - 1.0) / kt;
        let wxx = 8.0 * s * s * w.powi(3) * x.powf(4.0 * s - 2.0) / (kt * kt)
            + 2.0 * s * (1.0 - 2.0 * s) * w * w * x.powf(2.0 * s - 2.0) / kt;
        Ok((wt, wx, wxx))
    }

    pub fn derivatives(&self, t: f64, x: f64) -> Result<UbarDerivatives> {
        let front = self.x_front(t)?;
        if x < front {
            return Ok(UbarDerivatives::default());
        }
        if x == front {
            return Ok(UbarDerivatives {
                junction: true,
                ..Default::default()
            });
        }
        let w = self.w_raw(t, x);
        let (wt, wx, wxx) = self.w_derivatives(t, x)?;
        let a = 1.0 - w / self.epsilon;
        Ok(UbarDerivatives {
            ut: 3.0 * wt * a * a,
            ux: 3.0 * wx * a * a,
            uxx: 3.0 * a * (wxx * a - 2.0 * wx * wx / self.epsilon),
            junction: false,
        })
    }

    pub fn zone(&self, t: f64, x: f64) -> Result<Zone> {
        let front = self.x_front(t)?;
        Ok(if x <= front {
            Zone::Blue
        } else if x <= (front + self.kernel_r0).max(self.x_eta(t)?) {
            Zone::Orange
        } else {
            Zone::Green
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::domain(format!("the sub-solution is defined for t ≥ 1, got {t}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UbarDerivatives {
    pub ut: f64,
    pub ux: f64,
    pub uxx: f64,
    /// Evaluated exactly at `X(t)`, where both one-sided limits vanish.
    pub junction: bool,
}

/// Closed-form constants of the existence proof, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProofConstants {
    /// Radius past which the far-field reaction dominates the kernel tail.
    pub b_far: f64,
    pub nu0: f64,
    pub c0_far: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub frak_c2: f64,
    pub m0: f64,
    pub gamma0: f64,
    pub kappa_star: f64,
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub delta: f64,
}

/// `∫₁^B z^{-p} dz`.
fn power_integral(p: f64, b: f64) -> f64 {
    if (p - 1.0).abs() < 1e-15 {
        b.ln()
    } else {
        (b.powf(1.0 - p) - 1.0) / (1.0 - p)
    }
}

pub fn compute_proof_constants(params: &SubsolutionParams, f: &Reaction) -> Result<ProofConstants> {
    params.validate()?;
    let SubsolutionParams {
        s,
        epsilon: e,
        gamma,
        sigma,
        kappa,
        eta,
        kernel_j0: j0,
        kernel_j1: j1,
        kernel_r0: r0,
        theta,
        ..
    } = *params;
    if s >= 0.5 {
        return Err(Error::Unsupported(
            "the far-field constants are only available for s < 1/2".into(),
        ));
    }
    let fe = f.eval(e)?;
    if !(fe > 0.0) {
        return Err(Error::domain("f(ε) must be positive"));
    }
    let a = 1.0 - gamma * e;
    // Onset time at which X(t) (or X_η(t)) reaches `target`.
    let onset = |level: f64, target: f64| -> f64 {
        let unit = (1.0 / level - gamma).powf(0.5 / s);
        (target.max(0.0) / unit).powf(2.0 * s) / kappa
    };

    let b = (e * (j0 + 1.0) / (s * fe)).powf(0.5 / s);
    let c0 = 3.0 * (j1 + j0 * power_integral(2.0 * s - 1.0, b));
    let t0 = onset(e, (8.0 * c0 * s * s * e * e * a * a / fe).sqrt());

    let m0 = f.min_on_interval(theta + eta, e)?;
    // f(ū) in the definition of ν₀ is replaced by f(ε).
    let nu0 = 4f64.powf(0.5 / s).max(s * fe / (j0 * e) + 1.0);
    let b_plateau = nu0 * j0 * e / (s * fe);
    let c1_plateau = 3.0 * (j1 + j0 * power_integral(2.0 * s - 1.0, b_plateau.max(1.0)));
    let t2 = onset(e, 6.0 * r0 * s * e * a / (e - theta - eta));
    let t1 = onset(e, (16.0 * s * s * e * a * a * c1_plateau / m0).sqrt()).max(t2);

    let c1 = j0 * j0 / eta;
    let c2 = 12.0 * s * s;
    let frak_c2 = c2 / (1.0 - 2.0 * s);
    let c3 = frak_c2.powf(2.0 * s)
        * ((1.0 - 2.0 * s).powf(2.0 * s) / (2.0 * s).powf(2.0 * s)
            + (2.0 * s).powf(1.0 - 2.0 * s) / (1.0 - 2.0 * s).powf(1.0 - 2.0 * s));
    // The far-field floor η/(16 J₀ s x^{2s}) needs C₁C₃σ^{2s} ≤ 5/8.
    let sigma0 = (5.0 / (8.0 * c1 * c3)).powf(0.5 / s).min(1.0);
    let gamma0 = (1.0 - sigma0) / e;
    let t_prime = onset(e - eta, 1.0 + (384.0 * j0 * j1 * s.powi(3) * e * sigma * sigma / eta).powf(1.0 / (2.0 - 2.0 * s)));
    let t_second = (frak_c2 * (1.0 - 2.0 * s) * sigma / s).powf(2.0 * s) * kappa * (e * e / eta);
    let t3 = t_prime.max(t_second);

    let t_star = t0.max(t1).max(t2).max(t3);
    let t4 = t_star.max(6.0 * e * e * (1.0 + 1.0 / (e - eta)) / m0);
    Ok(ProofConstants {
        b_far: b,
        nu0,
        c0_far: c0,
        c1,
        c2,
        c3,
        frak_c2,
        m0,
        gamma0,
        kappa_star: params.kappa_star(),
        t0,
        t1,
        t2,
        t3,
        t4,
        t5: t_star,
        delta: r0.max(b),
    })
}

/// Zones of the certificate: the plateau `x ≤ X(t)`, the transition up to
/// `max(X + R₀, X_η)`, and the far field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Blue,
    Orange,
    Green,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::Blue, Zone::Orange, Zone::Green];

    pub fn name(self) -> &'static str {
        match self {
            Zone::Blue => "blue",
            Zone::Orange => "orange",
            Zone::Green => "green",
        }
    }
}

/// Sample points in `x` for one time, built from `X(t)` and `X_η(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XSampling {
    /// Points on `[X - depth·X, X]`, clustered toward `X`.
    pub blue: usize,
    pub blue_depth: f64,
    pub orange: usize,
    /// Log-spaced points on `(max(X + R₀, X_η), far·X_η]`.
    pub green: usize,
    pub far: f64,
}

impl Default for XSampling {
    fn default() -> Self {
        XSampling {
            blue: 12,
            blue_depth: 2.0,
            orange: 12,
            green: 16,
            far: 1e4,
        }
    }
}

impl XSampling {
    pub fn points(&self, params: &SubsolutionParams, t: f64) -> Result<Vec<f64>> {
        let front = params.x_front(t)?;
        let edge = (front + params.kernel_r0).max(params.x_eta(t)?);
        let mut xs = Vec::new();
        for k in 0..self.blue {
            // geometric approach to X from the left, ending at X itself
            let frac = if k + 1 == self.blue {
                0.0
            } else {
                self.blue_depth * 1e-4f64.powf(k as f64 / (self.blue - 1) as f64)
            };
            xs.push(front - frac * front.max(1.0));
        }
        for k in 1..=self.orange {
            xs.push(front + (edge - front) * k as f64 / self.orange as f64);
        }
        if self.green > 0 {
            let ratio = self.far.powf(1.0 / self.green as f64);
            let mut x = edge;
            for _ in 0..self.green {
                x *= ratio;
                xs.push(x);
            }
        }
        Ok(xs)
    }
}

/// `D[ū](t, x)` on the whole line with exact point values of `ū`.
///
/// Near `z = 0` the symmetric second difference is replaced by
/// `ū_xx(x) z²`, integrated against `J` in closed form.
pub fn operator_on_ubar(params: &SubsolutionParams, spec: &KernelSpec, t: f64, x: f64) -> Result<QuadResult> {
    let front = params.x_front(t)?;
    let scale = front.max(x.abs()).max(1.0);
    let h = 1e-4 * scale;
    let u0 = params.ubar_raw(t, x, front);
    let near = params.derivatives(t, x)?.uxx * spec.moment(2, 0.0, h);
    let jz = spec.evaluator();
    let integrand = |z: f64| (params.ubar_raw(t, x + z, front) + params.ubar_raw(t, x - z, front) - 2.0 * u0) * jz(z);
    let z_max = 1e10 * scale;
    let mut points: Vec<f64> = vec![h];
    let mut p = h;
    while p < z_max {
        p *= 4.0;
        points.push(p.min(z_max));
    }
    let junction = (x - front).abs();
    points.extend(spec.breakpoints().into_iter().chain([junction]).filter(|z| *z > h && *z < z_max));
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let body = integrate(integrand, &points, QuadOptions::new(1e-13, 1e-11).with_budget(20_000))?;
    // Beyond z_max: ū(x - z) = ε and 0 < ū(x + z) ≤ ū(x + z_max).
    let tail_mass = spec.tail_mass(z_max);
    let right = params.ubar_raw(t, x + z_max, front);
    let tail = (params.epsilon - 2.0 * u0 + 0.5 * right) * tail_mass;
    Ok(QuadResult {
        value: near + body.value + tail,
        error: body.error + 0.5 * right * tail_mass + (1e-8 * near).abs(),
        evaluations: body.evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSample {
    pub t: f64,
    pub x: f64,
    pub zone: Zone,
    /// `ū_t - D[ū] - f(ū)`; the inequality holds where this is `≤ 0`.
    pub residual: f64,
    pub scale: f64,
    pub operator: f64,
    pub quad_error: f64,
}

impl ResidualSample {
    pub fn passes(&self, tol: f64) -> bool {
        self.residual <= tol * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneSummary {
    pub zone: Zone,
    pub samples: usize,
    /// Largest `residual / scale`, with its location.
    pub worst: f64,
    pub worst_t: f64,
    pub worst_x: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub params: SubsolutionParams,
    pub constants: Option<ProofConstants>,
    pub tol: f64,
    pub zones: Vec<ZoneSummary>,
    pub pass: bool,
    pub t_star: Option<f64>,
    #[serde(skip)]
    pub samples: Vec<ResidualSample>,
}

impl CertificateReport {
    /// `t,x,zone,residual` rows.
    pub fn residuals_csv(&self) -> String {
        let mut out = String::from("t,x,zone,residual\n");
        for r in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", r.t, r.x, r.zone.name(), r.residual));
        }
        out
    }

    pub fn worst_zone(&self) -> Option<&ZoneSummary> {
        self.zones.iter().max_by(|a, b| a.worst.total_cmp(&b.worst))
    }
}

fn reaction_range(f: &Reaction) -> f64 {
    match f {
        Reaction::QuadraticBump { theta, amplitude } => amplitude * (1.0 - theta).powi(2) / 4.0,
        Reaction::Tabulated { f, .. } => f.iter().copied().fold(0.0, f64::max),
    }
}

pub fn residual_at(params: &SubsolutionParams, spec: &KernelSpec, f: &Reaction, t: f64, x: f64) -> Result<ResidualSample> {
    let zone = params.zone(t, x)?;
    let d = operator_on_ubar(params, spec, t, x)?;
    let ut = params.derivatives(t, x)?.ut;
    let u = params.ubar(t, x)?;
    let fu = f.eval(u)?;
    Ok(ResidualSample {
        t,
        x,
        zone,
        residual: ut - d.value - fu,
        scale: d.value.abs().max(reaction_range(f)).max(ut.abs()),
        operator: d.value,
        quad_error: d.error,
    })
}

/// Checks `ū_t ≤ D[ū] + f(ū)` at every `t` in `t_grid` and every point of `x_grid`.
pub fn certify(
    params: &SubsolutionParams,
    spec: &KernelSpec,
    f: &Reaction,
    t_grid: &[f64],
    x_grid: &XSampling,
    tol: f64,
) -> Result<CertificateReport> {
    spec.require_symmetric()?;
    params.validate()?;
    let mut jobs = Vec::new();
    for &t in t_grid {
        for x in x_grid.points(params, t)? {
            jobs.push((t, x));
        }
    }
    let samples: Vec<ResidualSample> = jobs
        .par_iter()
        .map(|&(t, x)| residual_at(params, spec, f, t, x))
        .collect::<Result<_>>()?;
    let zones: Vec<ZoneSummary> = Zone::ALL
        .iter()
        .map(|&zone| {
            let mut summary = ZoneSummary {
                zone,
                samples: 0,
                worst: f64::NEG_INFINITY,
                worst_t: f64::NAN,
                worst_x: f64::NAN,
                pass: true,
            };
            for r in samples.iter().filter(|r| r.zone == zone) {
                summary.samples += 1;
                let rel = r.residual / r.scale;
                if rel > summary.worst {
                    summary.worst = rel;
                    summary.worst_t = r.t;
                    summary.worst_x = r.x;
                }
                summary.pass &= r.passes(tol);
            }
            summary
        })
        .collect();
    Ok(CertificateReport {
        params: *params,
        constants: compute_proof_constants(params, f).ok(),
        tol,
        pass: zones.iter().all(|z| z.pass),
        zones,
        t_star: params.t_star,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub t: f64,
    pub pass: bool,
    pub worst: f64,
    pub worst_zone: Zone,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TStarSearch {
    pub t_star: Option<f64>,
    pub scan: Vec<ScanPoint>,
}

impl TStarSearch {
    /// The failing scan point with the largest relative residual.
    pub fn worst_failure(&self) -> Option<&ScanPoint> {
        self.scan.iter().filter(|p| !p.pass).max_by(|a, b| a.worst.total_cmp(&b.worst))
    }
}

/// Smallest `t = 1.25^k ≤ t_max` from which every later scanned time certifies.
pub fn find_t_star(
    params: &SubsolutionParams,
    spec: &KernelSpec,
    f: &Reaction,
    t_max: f64,
    x_grid: &XSampling,
    tol: f64,
) -> Result<TStarSearch> {
    if params.kappa > params.kappa_star() * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "κ = {} exceeds κ* = {}",
            params.kappa,
            params.kappa_star()
        )));
    }
    let mut scan = Vec::new();
    let mut t = 1.0;
    while t <= t_max * (1.0 + 1e-12) {
        let report = certify(params, spec, f, &[t], x_grid, tol)?;
        let worst = report.worst_zone().expect("three zones");
        scan.push(ScanPoint {
            t,
            pass: report.pass,
            worst: worst.worst,
            worst_zone: worst.zone,
        });
        t *= SCAN_RATIO;
    }
    let first_of_tail = scan.iter().rposition(|p| !p.pass).map_or(0, |k| k + 1);
    Ok(TStarSearch {
        t_star: scan.get(first_of_tail).map(|p| p.t),
        scan,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub t_offset: f64,
    pub shift: f64,
    /// Snapshot times that were compared (those with `t - t_offset ≥ 1`).
    pub times: Vec<f64>,
    /// `min (u - ū)` per compared snapshot.
    pub margins: Vec<f64>,
    /// `X(t - t_offset) + shift`, a lower bound for `x_λ(t)` when `λ ≤ ε`.
    pub implied_front: Vec<f64>,
    pub pass: bool,
}

fn min_margin(params: &SubsolutionParams, p: &Profile, tau: f64, shift: f64) -> f64 {
    let front = params.level(params.epsilon, tau);
    (0..p.len())
        .map(|i| p.values[i] - params.ubar_raw(tau, p.x(i) - shift, front))
        .fold(f64::INFINITY, f64::min)
}

/// Largest shift in `[lo, hi]` (to bisection accuracy) with `u ≥ ū(τ, · - shift) - tol` on the grid.
pub fn align_shift(params: &SubsolutionParams, p: &Profile, tau: f64, tol: f64, lo: f64, hi: f64) -> Result<f64> {
    check_time(tau)?;
    let ok = |shift: f64| min_margin(params, p, tau, shift) >= -tol;
    if !ok(lo) {
        return Err(Error::domain(format!("no alignment: ū(τ = {tau}) is not dominated even at shift {lo}")));
    }
    if ok(hi) {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if ok(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}

/// Checks `u(t, x) ≥ ū(t - t_offset, x - shift) - tol` on every snapshot with `t - t_offset ≥ 1`.
pub fn compare_with_simulation(
    params: &SubsolutionParams,
    snapshots: &[Profile],
    t_offset: f64,
    shift: f64,
    tol: f64,
) -> Result<ComparisonReport> {
    let eligible: Vec<&Profile> = snapshots.iter().filter(|p| p.time - t_offset >= 1.0).collect();
    let first = eligible
        .first()
        .ok_or_else(|| Error::domain("no snapshot after the alignment time"))?;
    if min_margin(params, first, first.time - t_offset, shift) < -tol {
        return Err(Error::domain(format!(
            "alignment fails: u(t = {}) does not dominate the shifted sub-solution",
            first.time
        )));
    }
    let mut report = ComparisonReport {
        t_offset,
        shift,
        times: Vec::new(),
        margins: Vec::new(),
        implied_front: Vec::new(),
        pass: true,
    };
    for p in eligible {
        let tau = p.time - t_offset;
        let m = min_margin(params, p, tau, shift);
        report.times.push(p.time);
        report.margins.push(m);
        report.implied_front.push(params.level(params.epsilon, tau) + shift);
        report.pass &= m >= -tol;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SubsolutionParams {
        let spec = KernelSpec::fractional(0.25, 1.0).unwrap();
        let f = Reaction::quadratic_bump(0.25, 1.0).unwrap();
        SubsolutionParams::new(&spec, &f, 0.5, DEFAULT_SIGMA, None).unwrap()
    }

    #[test]
    fn w_at_unit_values() {
        let mut p = params();
        p.kappa = 1.0;
        p.gamma = 1.0;
        p.s = 0.5;
        assert_eq!(p.w(1.0, 1.0).unwrap(), 0.5);
        assert!(p.w(0.5, 1.0).is_err());
    }

    #[test]
    fn front_formula() {
        let mut p = params();
        p.gamma = 1.0;
        p.kappa = 1.0;
        assert!((p.x_front(1.0).unwrap() - 1.0).abs() < 1e-15);
        let ratio = p.x_front(6.0).unwrap() / p.x_front(3.0).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn eta_bracket_and_identity() {
        let eta = eta_root(0.5, 0.25).unwrap();
        assert!(eta > 0.2 && eta < 0.25);
        let p = params();
        let v = p.epsilon - eta;
        assert!((p.cubic(v) - (0.25 + eta)).abs() < 1e-12);
        assert!(eta_root(0.3, 0.3).is_err());
        assert!(eta_root(0.5, 0.5 - 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn kappa_star_value() {
        assert_eq!(kappa_star(1.0, 0.25, 0.5), 1.0 / 27.0);
        assert_eq!(params().kappa, 1.0 / 27.0);
    }

    #[test]
    fn junction_is_flat() {
        let p = params();
        let x = p.x_front(4.0).unwrap();
        let d = p.derivatives(4.0, x).unwrap();
        assert!(d.junction && d.ux == 0.0 && d.uxx == 0.0);
        assert_eq!(p.ubar(4.0, x).unwrap(), 0.5);
        let right = p.derivatives(4.0, x * (1.0 + 1e-9)).unwrap();
        assert!(right.ux.abs() < 1e-12 && right.uxx.abs() < 1e-6);
    }

    #[test]
    fn zones_partition() {
        let p = params();
        let t = 1e4;
        let (x, xe) = (p.x_front(t).unwrap(), p.x_eta(t).unwrap());
        assert!(xe > x);
        assert_eq!(p.zone(t, x).unwrap(), Zone::Blue);
        assert_eq!(p.zone(t, 0.5 * (x + xe.max(x + 1.0))).unwrap(), Zone::Orange);
        assert_eq!(p.zone(t, 2.0 * xe + 2.0).unwrap(), Zone::Green);
    }

    #[test]
    fn s_half_constants_unsupported() {
        let spec = KernelSpec::fractional(0.5, 1.0).unwrap();
        let f = Reaction::quadratic_bump(0.25, 1.0).unwrap();
        let p = SubsolutionParams::new(&spec, &f, 0.5, DEFAULT_SIGMA, None).unwrap();
        assert!(matches!(compute_proof_constants(&p, &f), Err(Error::Unsupported(_))));
    }
}

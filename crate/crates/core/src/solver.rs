//! Explicit time stepping of `u_t = D[u] + f(u)` from Heaviside data on a
//! window that grows to the right as the front accelerates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::operator::{Operator, Profile, RightClosure};
use crate::reaction::{Reaction, RANGE_SLACK};
use crate::stats::fit_power_law;

/// Safety factor on the monotonicity bound of the Euler step.
pub const CFL: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub kernel: KernelSpec,
    pub reaction: Reaction,
    pub x_left: f64,
    pub x_right: f64,
    pub dx: f64,
    /// Time step; `None` selects [`CFL`] times the stability bound.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub levels: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    /// The window grows once a tracked level comes this close to the right edge.
    pub regrid_margin: f64,
    /// The window also grows once `window_ratio` times the farthest tracked
    /// level passes the right edge.
    pub window_ratio: f64,
    /// Window-adequacy tolerance on the edge values.
    pub edge_tol: f64,
    pub right_closure: RightClosure,
    pub max_nodes: usize,
    /// Record the level positions every this many steps.
    pub trace_every: usize,
}

impl SimConfig {
    /// Defaults around a kernel and reaction: window `[-50, 50]`, `dx = 0.5`,
    /// `t_end = 50`, and the profile continued past the window as `x^{-2s}`.
    pub fn new(kernel: KernelSpec, reaction: Reaction) -> Self {
        let exponent = 2.0 * kernel.s;
        SimConfig {
            kernel,
            reaction,
            x_left: -50.0,
            x_right: 50.0,
            dx: 0.5,
            dt: None,
            t_end: 50.0,
            levels: vec![0.5],
            snapshot_times: Vec::new(),
            regrid_margin: 10.0,
            window_ratio: 3.0,
            edge_tol: 0.5,
            right_closure: RightClosure::PowerLaw { exponent },
            max_nodes: 1 << 16,
            trace_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.reaction.validate()?;
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::config("sim.dx", "must be positive"));
        }
        if !(self.x_left < 0.0 && 0.0 < self.x_right) {
            return Err(Error::config("sim.window", "need x_left < 0 < x_right"));
        }
        if self.x_right - self.x_left < self.kernel.r0 {
            return Err(Error::config("sim.window", "window narrower than the kernel's R0"));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::config("sim.t_end", "must be positive"));
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::config("sim.levels", "levels must lie strictly inside (0, 1)"));
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::config("sim.snapshot_times", "must be nonnegative"));
        }
        if !(self.regrid_margin > 0.0) {
            return Err(Error::config("sim.regrid_margin", "must be positive"));
        }
        if !(self.window_ratio >= 1.0) {
            return Err(Error::config("sim.window_ratio", "must be at least 1"));
        }
        if !(self.edge_tol > 0.0 && self.edge_tol < 1.0) {
            return Err(Error::config("sim.edge_tol", "must lie in (0, 1)"));
        }
        if self.trace_every == 0 {
            return Err(Error::config("sim.trace_every", "must be at least 1"));
        }
        if self.node_count() > self.max_nodes {
            return Err(Error::config("sim.max_nodes", "initial window already exceeds the node budget"));
        }
        if let Some(dt) = self.dt {
            let bound = self.stability_bound()?;
            if !(dt > 0.0 && dt <= bound) {
                return Err(Error::config(
                    "sim.dt",
                    format!("dt = {dt} exceeds the stability bound {bound}"),
                ));
            }
        }
        Ok(())
    }

    fn node_count(&self) -> usize {
        ((self.x_right - self.x_left) / self.dx).round() as usize + 1
    }

    /// `1 / (2 S(1) + Lip f)`: above this the Euler step loses monotonicity.
    pub fn stability_bound(&self) -> Result<f64> {
        let op = Operator::new(&self.kernel, self.dx, 2, 1.0)?;
        Ok(1.0 / (op.row_sum() + self.reaction.lipschitz()))
    }

    pub fn time_step(&self) -> Result<f64> {
        match self.dt {
            Some(dt) => Ok(dt),
            None => Ok(CFL * self.stability_bound()?),
        }
    }
}

/// Heaviside data mollified over one cell on each side of the origin.
pub fn init_profile(config: &SimConfig) -> Profile {
    let n = config.node_count();
    let dx = config.dx;
    let values = (0..n)
        .map(|i| {
            let x = config.x_left + i as f64 * dx;
            (0.5 - x / (2.0 * dx)).clamp(0.0, 1.0)
        })
        .collect();
    let mut p = Profile::new(config.x_left, dx, values, 1.0, 0.0);
    p.monotone = true;
    p
}

/// One forward-Euler step with a prepared operator.
pub fn step_with(op: &mut Operator, reaction: &Reaction, p: &Profile, dt: f64) -> Result<Profile> {
    let d = op.apply_all(p)?;
    let mut next = p.clone();
    next.time = p.time + dt;
    for (i, (u, di)) in next.values.iter_mut().zip(&d).enumerate() {
        let v = *u + dt * (di + reaction.eval_clamped(u.clamp(0.0, 1.0)));
        if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
            return Err(Error::Stability {
                time: next.time,
                x: p.x(i),
                value: v,
            });
        }
        *u = v.clamp(0.0, 1.0);
    }
    Ok(next)
}

/// One step with the configured kernel, reaction and time step.
pub fn step(config: &SimConfig, p: &Profile) -> Result<Profile> {
    let mut op = Operator::new(&config.kernel, p.dx, p.len(), config.edge_tol)?.with_closure(config.right_closure);
    step_with(&mut op, &config.reaction, p, config.time_step()?)
}

/// Rightmost `x` with `u(x) ≥ λ`, linearly interpolated between nodes.
pub fn level_position(p: &Profile, lam: f64) -> Result<f64> {
    if !(lam > p.right_state && lam < p.left_state) {
        return Err(Error::domain(format!(
            "level {lam} outside ({}, {})",
            p.right_state, p.left_state
        )));
    }
    if !p.is_monotone_decreasing() {
        return Err(Error::invariant("level position needs a nonincreasing profile"));
    }
    let n = p.len();
    let i = match p.values.iter().rposition(|u| *u >= lam) {
        Some(i) => i,
        None => return Err(Error::domain(format!("level {lam} lies left of the window"))),
    };
    if i + 1 == n {
        return Ok(p.x(i));
    }
    let (a, b) = (p.values[i], p.values[i + 1]);
    Ok(p.x(i) + p.dx * (a - lam) / (a - b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub lambda: f64,
    pub x_lambda: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelSetTrace {
    pub rows: Vec<TraceRow>,
}

impl LevelSetTrace {
    /// `(t, x_λ)` samples for one level.
    pub fn series(&self, lam: f64) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| r.lambda == lam)
            .map(|r| (r.t, r.x_lambda))
            .unzip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares slope of `log x_λ` against `log t` over `[t_lo, t_hi]`.
pub fn fit_spreading_exponent(trace: &LevelSetTrace, lam: f64, t_lo: f64, t_hi: f64) -> Result<ExponentFit> {
    let (t, x) = trace.series(lam);
    let (t, x): (Vec<f64>, Vec<f64>) = t
        .into_iter()
        .zip(x)
        .filter(|(t, _)| *t >= t_lo && *t <= t_hi && *t > 0.0)
        .unzip();
    if t.len() < 10 {
        return Err(Error::domain(format!(
            "need at least 10 samples of level {lam} in [{t_lo}, {t_hi}], found {}",
            t.len()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::domain(format!("nonpositive level position {bad} in fit range")));
    }
    let fit = fit_power_law(&t, &x)?;
    Ok(ExponentFit {
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.max_residual,
        samples: t.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowChange {
    pub t: f64,
    pub x_right: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub trace: LevelSetTrace,
    pub snapshots: Vec<Profile>,
    pub final_profile: Profile,
    pub dt: f64,
    pub steps: usize,
    pub window_history: Vec<WindowChange>,
    /// Largest `u` seen before clipping, over all steps.
    pub max_value: f64,
    pub min_value: f64,
}

/// A failed run with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub partial: RunOutput,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (last stable time {})", self.error, self.partial.final_profile.time)
    }
}

impl std::error::Error for RunFailure {}

/// Runs from Heaviside data to `t_end`.
pub fn run(config: &SimConfig) -> std::result::Result<RunOutput, Box<RunFailure>> {
    let p = init_profile(config);
    let fail = |error: Error, p: &Profile| {
        Box::new(RunFailure {
            error,
            partial: RunOutput {
                trace: LevelSetTrace::default(),
                snapshots: Vec::new(),
                final_profile: p.clone(),
                dt: 0.0,
                steps: 0,
                window_history: Vec::new(),
                max_value: 1.0,
                min_value: 0.0,
            },
        })
    };
    if let Err(e) = config.validate() {
        return Err(fail(e, &p));
    }
    let dt = match config.time_step() {
        Ok(dt) => dt,
        Err(e) => return Err(fail(e, &p)),
    };
    let op = match Operator::new(&config.kernel, config.dx, p.len(), config.edge_tol) {
        Ok(op) => op.with_closure(config.right_closure),
        Err(e) => return Err(fail(e, &p)),
    };
    let mut state = RunState {
        config,
        op,
        dt,
        out: RunOutput {
            trace: LevelSetTrace::default(),
            snapshots: Vec::new(),
            final_profile: p,
            dt,
            steps: 0,
            window_history: Vec::new(),
            max_value: 1.0,
            min_value: 0.0,
        },
    };
    match state.advance() {
        Ok(()) => Ok(state.out),
        Err(error) => Err(Box::new(RunFailure {
            error,
            partial: state.out,
        })),
    }
}

struct RunState<'a> {
    config: &'a SimConfig,
    op: Operator,
    dt: f64,
    out: RunOutput,
}

impl RunState<'_> {
    fn advance(&mut self) -> Result<()> {
        let cfg = self.config;
        let mut snaps: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|t| *t <= cfg.t_end).collect();
        snaps.sort_by(f64::total_cmp);
        snaps.dedup();
        let mut next_snap = 0;
        let eps = 1e-9 * self.dt;
        self.out.window_history.push(WindowChange {
            t: 0.0,
            x_right: self.out.final_profile.x_right(),
            nodes: self.out.final_profile.len(),
        });
        self.record()?;
        while next_snap < snaps.len() && snaps[next_snap] <= eps {
            self.out.snapshots.push(self.out.final_profile.clone());
            next_snap += 1;
        }
        loop {
            let t = self.out.final_profile.time;
            if t >= cfg.t_end - eps {
                break;
            }
            let mut target = cfg.t_end;
            if next_snap < snaps.len() {
                target = target.min(snaps[next_snap]);
            }
            let h = self.dt.min(target - t);
            let next = self.euler(h)?;
            self.out.final_profile = next;
            self.out.steps += 1;
            let landed = self.out.final_profile.time;
            if next_snap < snaps.len() && landed >= snaps[next_snap] - eps {
                self.out.final_profile.time = snaps[next_snap];
            }
            if landed >= cfg.t_end - eps {
                self.out.final_profile.time = cfg.t_end;
            }
            let at_snap = next_snap < snaps.len() && self.out.final_profile.time == snaps[next_snap];
            let at_end = self.out.final_profile.time == cfg.t_end;
            if self.out.steps.is_multiple_of(cfg.trace_every) || at_snap || at_end {
                self.record()?;
            }
            if at_snap {
                self.out.snapshots.push(self.out.final_profile.clone());
                next_snap += 1;
            }
            self.maybe_grow()?;
        }
        Ok(())
    }

    fn euler(&mut self, h: f64) -> Result<Profile> {
        let p = &self.out.final_profile;
        let d = self.op.apply_all(p)?;
        let mut next = p.clone();
        next.time = p.time + h;
        for (i, (u, di)) in next.values.iter_mut().zip(&d).enumerate() {
            let v = *u + h * (di + self.config.reaction.eval_clamped(*u));
            self.out.max_value = self.out.max_value.max(v);
            self.out.min_value = self.out.min_value.min(v);
            if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
                return Err(Error::Stability {
                    time: next.time,
                    x: p.x(i),
                    value: v,
                });
            }
            *u = v.clamp(0.0, 1.0);
        }
        if !next.is_monotone_decreasing() {
            return Err(Error::invariant(format!("profile lost monotonicity at t = {}", next.time)));
        }
        Ok(next)
    }

    fn record(&mut self) -> Result<()> {
        let p = &self.out.final_profile;
        for &lam in &self.config.levels {
            let x = level_position(p, lam)?;
            self.out.trace.rows.push(TraceRow {
                t: p.time,
                lambda: lam,
                x_lambda: x,
            });
        }
        Ok(())
    }

    fn maybe_grow(&mut self) -> Result<()> {
        let cfg = self.config;
        let p = &self.out.final_profile;
        let x_right = p.x_right();
        let front = cfg
            .levels
            .iter()
            .filter_map(|l| level_position(p, *l).ok())
            .fold(f64::NEG_INFINITY, f64::max);
        if front <= x_right - cfg.regrid_margin && cfg.window_ratio * front <= x_right {
            return Ok(());
        }
        let new_right = 1.5 * x_right.max(cfg.regrid_margin);
        let extra = ((new_right - x_right) / p.dx).ceil() as usize;
        let nodes = p.len() + extra;
        if nodes > cfg.max_nodes {
            return Err(Error::Resource(format!(
                "growing the window to x = {new_right} needs {nodes} nodes, budget is {}",
                cfg.max_nodes
            )));
        }
        let mut grown = p.clone();
        match cfg.right_closure {
            RightClosure::Constant => grown.values.resize(nodes, grown.right_state),
            RightClosure::PowerLaw { exponent } => {
                // Continue with the same profile the closure assumed.
                let (r, last) = (p.right_state, p.values[p.len() - 1]);
                for k in 1..=extra {
                    let y = x_right + k as f64 * p.dx;
                    grown.values.push(r + (last - r) * (x_right / y).powf(exponent));
                }
            }
        }
        self.out.window_history.push(WindowChange {
            t: grown.time,
            x_right: grown.x_right(),
            nodes,
        });
        self.out.final_profile = grown;
        Ok(())
    }
}

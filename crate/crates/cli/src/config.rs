//! TOML run configuration.

use std::path::{Path, PathBuf};

use fracfront::kernel::{KernelSpec, KernelTable};
use fracfront::operator::RightClosure;
use fracfront::reaction::Reaction;
use fracfront::solver::SimConfig;
use fracfront::subsolution::{XSampling, DEFAULT_SIGMA, DEFAULT_TOL};
use fracfront::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub reaction: Option<ReactionConfig>,
    #[serde(default)]
    pub symbol: SymbolSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub greens: GreensSection,
    #[serde(default)]
    pub subsolution: SubsolutionSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: Some(PathBuf::from("fracfront-out")),
            kernel: Some(KernelConfig::default()),
            reaction: Some(ReactionConfig::default()),
            symbol: SymbolSection::default(),
            sim: SimSection::default(),
            greens: GreensSection::default(),
            subsolution: SubsolutionSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamilyName {
    /// `J = c |z|^{-1-2s}`.
    FractionalPure,
    /// `FractionalPure` with `c` chosen so the symbol is `-|ξ|^{2s}`.
    FractionalLaplacian,
    TruncatedPowerTail,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamilyName,
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_radius: Option<f64>,
    /// CSV with `z,J` rows (and an optional third column for `J(-z)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            family: KernelFamilyName::FractionalLaplacian,
            s: 0.25,
            c: None,
            core_radius: None,
            table: None,
            j0: None,
            j1: None,
            r0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionKind {
    QuadraticBump,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionConfig {
    pub kind: ReactionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// CSV with `u,f` rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

impl Default for ReactionConfig {
    fn default() -> Self {
        ReactionConfig {
            kind: ReactionKind::QuadraticBump,
            theta: Some(0.25),
            amplitude: Some(1.0),
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolSection {
    pub xi_min: f64,
    pub xi_max: f64,
    /// Log-spaced frequencies on `[xi_min, xi_max]`.
    pub points: usize,
    /// Grid points inside `[fit_min, fit_max]` enter the power-law fit.
    pub fit_min: f64,
    pub fit_max: f64,
}

impl Default for SymbolSection {
    fn default() -> Self {
        SymbolSection {
            xi_min: 1e-4,
            xi_max: 10.0,
            points: 51,
            fit_min: 1e-3,
            fit_max: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub x_left: f64,
    pub x_right: f64,
    pub dx: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub levels: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub regrid_margin: f64,
    pub window_ratio: f64,
    pub edge_tol: f64,
    /// `"power_law"` continues the profile as `x^{-closure_exponent}` past the window.
    pub closure: ClosureName,
    /// Defaults to `2s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure_exponent: Option<f64>,
    pub max_nodes: usize,
    pub trace_every: usize,
    /// Exponent fits use `t ∈ [fit_from · t_end, t_end]`.
    pub fit_from: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureName {
    Constant,
    PowerLaw,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
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
            closure: ClosureName::PowerLaw,
            closure_exponent: None,
            max_nodes: 1 << 16,
            trace_every: 1,
            fit_from: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreensSection {
    pub t: f64,
    /// Evaluation grid for `greens.csv`: `points` values evenly spaced on `[x_min, x_max]`.
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    /// Flattening window in units of `t^{1/2s}`.
    pub flatten_lo: f64,
    pub flatten_hi: f64,
    pub flatten_samples: usize,
}

impl Default for GreensSection {
    fn default() -> Self {
        GreensSection {
            t: 1.0,
            x_min: -50.0,
            x_max: 50.0,
            points: 201,
            flatten_lo: 10.0,
            flatten_hi: 1000.0,
            flatten_samples: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubsolutionSection {
    pub epsilon: f64,
    pub sigma: f64,
    /// Defaults to the largest admissible value `κ*`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub t_max: f64,
    pub tol: f64,
    /// After the search, the certificate is re-checked on `[t*, span · t*]`.
    pub verify_span: f64,
    pub verify_points: usize,
    pub residuals_csv: bool,
    pub blue_points: usize,
    pub orange_points: usize,
    pub green_points: usize,
    pub far_factor: f64,
}

impl Default for SubsolutionSection {
    fn default() -> Self {
        let x = XSampling::default();
        SubsolutionSection {
            epsilon: 0.5,
            sigma: DEFAULT_SIGMA,
            kappa: None,
            t_max: 1e6,
            tol: DEFAULT_TOL,
            verify_span: 4.0,
            verify_points: 7,
            residuals_csv: false,
            blue_points: x.blue,
            orange_points: x.orange,
            green_points: x.green,
            far_factor: x.far,
        }
    }
}

impl SubsolutionSection {
    pub fn sampling(&self) -> XSampling {
        XSampling {
            blue: self.blue_points,
            orange: self.orange_points,
            green: self.green_points,
            far: self.far_factor,
            ..XSampling::default()
        }
    }
}

fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

fn read_table(base: &Path, path: &Path, field: &str) -> Result<String, Error> {
    let full = base.join(path);
    std::fs::read_to_string(&full).map_err(|e| config_error(field, format!("cannot read {}: {e}", full.display())))
}

fn required(v: Option<f64>, field: &str) -> Result<f64, Error> {
    v.ok_or_else(|| config_error(field, "required for this family"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| config_error("config", e.message().to_string()))
    }

    /// Builds the kernel; table paths are resolved against `base`.
    pub fn kernel_spec(&self, base: &Path) -> Result<KernelSpec, Error> {
        let k = self.kernel.as_ref().ok_or_else(|| config_error("kernel", "section is missing"))?;
        let spec = match k.family {
            KernelFamilyName::FractionalPure => KernelSpec::fractional(k.s, required(k.c, "kernel.c")?)?,
            KernelFamilyName::FractionalLaplacian => KernelSpec::fractional_laplacian(k.s)?,
            KernelFamilyName::TruncatedPowerTail => KernelSpec::truncated_power_tail(
                k.s,
                required(k.c, "kernel.c")?,
                required(k.core_radius, "kernel.core_radius")?,
            )?,
            KernelFamilyName::Tabulated => {
                let path = k.table.as_ref().ok_or_else(|| config_error("kernel.table", "required for this family"))?;
                let table = KernelTable::from_csv_str(&read_table(base, path, "kernel.table")?)?;
                KernelSpec::tabulated(k.s, table)?
            }
        };
        spec.with_constants(k.j0, k.j1, k.r0)
    }

    pub fn reaction(&self, base: &Path) -> Result<Reaction, Error> {
        let r = self
            .reaction
            .as_ref()
            .ok_or_else(|| config_error("reaction", "section is missing"))?;
        match r.kind {
            ReactionKind::QuadraticBump => Reaction::quadratic_bump(
                required(r.theta, "reaction.theta")?,
                required(r.amplitude, "reaction.amplitude")?,
            ),
            ReactionKind::Tabulated => {
                let path = r
                    .table
                    .as_ref()
                    .ok_or_else(|| config_error("reaction.table", "required for this kind"))?;
                Reaction::from_csv_str(&read_table(base, path, "reaction.table")?)
            }
        }
    }

    pub fn sim_config(&self, base: &Path) -> Result<SimConfig, Error> {
        let spec = self.kernel_spec(base)?;
        let s = &self.sim;
        let closure = match s.closure {
            ClosureName::Constant => RightClosure::Constant,
            ClosureName::PowerLaw => RightClosure::PowerLaw {
                exponent: s.closure_exponent.unwrap_or(2.0 * spec.s),
            },
        };
        if !(s.fit_from > 0.0 && s.fit_from < 1.0) {
            return Err(config_error("sim.fit_from", "must lie in (0, 1)"));
        }
        let mut c = SimConfig::new(spec, self.reaction(base)?);
        c.x_left = s.x_left;
        c.x_right = s.x_right;
        c.dx = s.dx;
        c.dt = s.dt;
        c.t_end = s.t_end;
        c.levels = s.levels.clone();
        c.snapshot_times = s.snapshot_times.clone();
        c.regrid_margin = s.regrid_margin;
        c.window_ratio = s.window_ratio;
        c.edge_tol = s.edge_tol;
        c.right_closure = closure;
        c.max_nodes = s.max_nodes;
        c.trace_every = s.trace_every;
        c.validate()?;
        Ok(c)
    }
}

use std::f64::consts::PI;
use std::path::Path;

use fracfront::greens::{FlatteningReport, Greens};
use fracfront::kernel::{log_samples, FourierSymbol, KernelSpec, SymbolModel};
use fracfront::solver::{self, ExponentFit, RunOutput, WindowChange};
use fracfront::stats::fit_power_law;
use fracfront::subsolution::{self, CertificateReport, SubsolutionParams, TStarSearch};
use fracfront::Error;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv, OutputDir, Report};

pub struct Context<'a> {
    pub config: &'a RunConfig,
    /// Directory against which table paths are resolved.
    pub base: &'a Path,
    pub out: &'a OutputDir,
}

#[derive(Serialize)]
struct SymbolFit {
    slope: f64,
    constant: f64,
    max_log_residual: f64,
    samples: usize,
    expected_exponent: f64,
}

#[derive(Serialize)]
struct SymbolBody {
    fit: SymbolFit,
    max_error: f64,
}

pub fn symbol(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.config.kernel_spec(ctx.base)?;
    let sec = &ctx.config.symbol;
    if !(sec.xi_min > 0.0 && sec.xi_max > sec.xi_min) || sec.points < 2 {
        return Err(Error::Config {
            field: "symbol".into(),
            reason: "need 0 < xi_min < xi_max and points >= 2".into(),
        }
        .into());
    }
    let grid = log_samples(sec.xi_min, sec.xi_max, sec.points);
    let sym = FourierSymbol::tabulate(&spec, &grid)?;
    ctx.out.write(
        "symbol.csv",
        &csv(
            &["xi", "W", "error"],
            (0..grid.len()).map(|k| vec![sym.xi[k], sym.w[k], sym.error[k]]),
        ),
    )?;
    let (xs, ws): (Vec<f64>, Vec<f64>) = sym
        .xi
        .iter()
        .zip(&sym.w)
        .filter(|(x, _)| **x >= sec.fit_min && **x <= sec.fit_max)
        .map(|(x, w)| (*x, -*w))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Config {
            field: "symbol.fit_min".into(),
            reason: format!(
                "only {} grid point(s) lie in [{}, {}]; the fit needs two",
                xs.len(),
                sec.fit_min,
                sec.fit_max
            ),
        }
        .into());
    }
    if let Some(w) = ws.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::Domain(format!("symbol is not negative in the fit range (W = {})", -w)).into());
    }
    let fit = fit_power_law(&xs, &ws)?;
    let body = SymbolBody {
        fit: SymbolFit {
            slope: fit.slope,
            constant: fit.intercept.exp(),
            max_log_residual: fit.max_residual,
            samples: xs.len(),
            expected_exponent: 2.0 * spec.s,
        },
        max_error: sym.error.iter().copied().fold(0.0, f64::max),
    };
    ctx.out.write_json("symbol_report.json", &Report::new("symbol", ctx.config, body))?;
    Ok(())
}

#[derive(Serialize)]
struct LevelFit {
    lambda: f64,
    fit: Option<ExponentFit>,
    fit_error: Option<String>,
    /// `slope · 2s`; one when the front spreads like `t^{1/2s}`.
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct SimBody {
    status: &'static str,
    error: Option<String>,
    dt: f64,
    steps: usize,
    t_reached: f64,
    predicted_exponent: f64,
    fit_window: [f64; 2],
    fits: Vec<LevelFit>,
    window_history: Vec<WindowChange>,
    max_value: f64,
    min_value: f64,
}

fn write_run(ctx: &Context, spec: &KernelSpec, run: &RunOutput, error: Option<&Error>) -> Result<(), CliError> {
    let sim = &ctx.config.sim;
    ctx.out.write(
        "trace.csv",
        &csv(
            &["t", "lambda", "x_lambda"],
            run.trace.rows.iter().map(|r| vec![r.t, r.lambda, r.x_lambda]),
        ),
    )?;
    for p in &run.snapshots {
        let rows = (0..p.len()).map(|i| vec![p.x(i), p.values[i]]);
        ctx.out.write(&format!("snapshots/u_t{}.csv", p.time), &csv(&["x", "u"], rows))?;
    }
    let t_hi = run.final_profile.time;
    let t_lo = sim.fit_from * sim.t_end;
    let fits = sim
        .levels
        .iter()
        .map(|&lambda| match solver::fit_spreading_exponent(&run.trace, lambda, t_lo, t_hi) {
            Ok(fit) => LevelFit {
                lambda,
                ratio: Some(fit.slope * 2.0 * spec.s),
                fit: Some(fit),
                fit_error: None,
            },
            Err(e) => LevelFit {
                lambda,
                fit: None,
                fit_error: Some(e.to_string()),
                ratio: None,
            },
        })
        .collect();
    let body = SimBody {
        status: if error.is_some() { "failed" } else { "ok" },
        error: error.map(|e| e.to_string()),
        dt: run.dt,
        steps: run.steps,
        t_reached: t_hi,
        predicted_exponent: 1.0 / (2.0 * spec.s),
        fit_window: [t_lo, t_hi],
        fits,
        window_history: run.window_history.clone(),
        max_value: run.max_value,
        min_value: run.min_value,
    };
    ctx.out.write_json("run_report.json", &Report::new("simulate", ctx.config, body))?;
    Ok(())
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let config = ctx.config.sim_config(ctx.base)?;
    match solver::run(&config) {
        Ok(run) => write_run(ctx, &config.kernel, &run, None),
        Err(failure) => {
            write_run(ctx, &config.kernel, &failure.partial, Some(&failure.error))?;
            Err(CliError::Run(failure))
        }
    }
}

#[derive(Serialize)]
struct CauchyCheck {
    /// `a` in `G = a / (π (a² + x²))`.
    width: f64,
    max_rel_error: f64,
}

#[derive(Serialize)]
struct GreensBody {
    t: f64,
    atom: f64,
    tail_constant_estimate: f64,
    c0_estimate: f64,
    max_error: f64,
    flattening: FlatteningReport,
    cauchy: Option<CauchyCheck>,
}

pub fn greens(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.config.kernel_spec(ctx.base)?;
    let sec = &ctx.config.greens;
    if !(sec.t > 0.0) || sec.points < 1 || !(sec.x_max >= sec.x_min) {
        return Err(Error::Config {
            field: "greens".into(),
            reason: "need t > 0, x_min <= x_max and points >= 1".into(),
        }
        .into());
    }
    let g = Greens::new(&spec)?;
    let grid: Vec<f64> = if sec.points == 1 {
        vec![sec.x_min]
    } else {
        let h = (sec.x_max - sec.x_min) / (sec.points - 1) as f64;
        (0..sec.points).map(|k| sec.x_min + k as f64 * h).collect()
    };
    let res = g.on_grid(sec.t, &grid)?;
    ctx.out.write(
        "greens.csv",
        &csv(
            &["x", "G", "error"],
            (0..grid.len()).map(|k| vec![res.x_grid[k], res.g_values[k], res.g_errors[k]]),
        ),
    )?;
    let scale = sec.t.powf(1.0 / (2.0 * spec.s));
    let flattening = g.flattening(sec.t, sec.flatten_lo * scale, sec.flatten_hi * scale, sec.flatten_samples)?;
    let cauchy = match g.model() {
        SymbolModel::PurePower { w1, exponent } if (exponent - 1.0).abs() < 1e-14 => {
            let a = -w1 * sec.t;
            let max_rel_error = grid
                .iter()
                .zip(&res.g_values)
                .map(|(x, v)| (v * PI * (a * a + x * x) / a - 1.0).abs())
                .fold(0.0, f64::max);
            Some(CauchyCheck { width: a, max_rel_error })
        }
        _ => None,
    };
    let body = GreensBody {
        t: res.t,
        atom: res.atom,
        tail_constant_estimate: res.tail_constant_estimate,
        c0_estimate: res.c0_estimate,
        max_error: res.g_errors.iter().copied().fold(0.0, f64::max),
        flattening,
        cauchy,
    };
    ctx.out.write_json("flattening_report.json", &Report::new("greens", ctx.config, body))?;
    Ok(())
}

#[derive(Serialize)]
struct CertifyBody {
    pass: bool,
    search: TStarSearch,
    /// Re-check on a log grid over `[t*, verify_span · t*]`.
    verification: Option<CertificateReport>,
}

pub fn certify(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.config.kernel_spec(ctx.base)?;
    let f = ctx.config.reaction(ctx.base)?;
    let sec = &ctx.config.subsolution;
    let mut params = SubsolutionParams::new(&spec, &f, sec.epsilon, sec.sigma, sec.kappa)?;
    let sampling = sec.sampling();
    let search = subsolution::find_t_star(&params, &spec, &f, sec.t_max, &sampling, sec.tol)?;
    let verification = match search.t_star {
        Some(t_star) => {
            params.t_star = Some(t_star);
            let times = log_samples(t_star, t_star * sec.verify_span.max(1.0), sec.verify_points.max(2));
            Some(subsolution::certify(&params, &spec, &f, &times, &sampling, sec.tol)?)
        }
        None => None,
    };
    let pass = verification.as_ref().is_some_and(|v| v.pass);
    if let (true, Some(v)) = (sec.residuals_csv, &verification) {
        ctx.out.write("residuals.csv", &v.residuals_csv())?;
    }
    let failure = match (&search.t_star, &verification) {
        (None, _) => Some(CliError::NotFound(match search.worst_failure() {
            Some(p) => format!(
                "no t* up to t_max = {}; worst failure at t = {} in the {} zone",
                sec.t_max,
                p.t,
                p.worst_zone.name()
            ),
            None => format!("no scan points up to t_max = {}", sec.t_max),
        })),
        (Some(_), Some(v)) if !v.pass => Some(CliError::Failed(match v.worst_zone() {
            Some(z) => format!("verification failed in the {} zone at t = {}", z.zone.name(), z.worst_t),
            None => "verification failed".into(),
        })),
        _ => None,
    };
    let body = CertifyBody {
        pass,
        search,
        verification,
    };
    ctx.out.write_json("certificate.json", &Report::new("certify", ctx.config, body))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

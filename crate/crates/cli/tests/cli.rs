use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fracfront"))
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(dir.join("out"))
        .args(args)
        .env_remove("FRACFRONT_THREADS")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const KERNEL: &str = "[kernel]\nfamily = \"fractional_pure\"\ns = 0.25\nc = 1.0\n";
const REACTION: &str = "[reaction]\nkind = \"quadratic_bump\"\ntheta = 0.25\namplitude = 1.0\n";

#[test]
fn symbol_output_is_deterministic() {
    let cfg = format!("{KERNEL}{REACTION}[symbol]\npoints = 21\n");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(d.path(), &cfg, &["symbol"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["symbol.csv", "symbol_report.json"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
        assert!(!x.contains(&b'\r'));
    }
    let csv = fs::read_to_string(a.path().join("out/symbol.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("xi,W,error"));
    assert_eq!(csv.lines().count(), 22);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("out/symbol_report.json")).unwrap()).unwrap();
    let slope = report["fit"]["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 1e-6, "slope {slope}");
    assert_eq!(report["config"]["kernel"]["family"], "fractional_pure");
    assert!(report["version"].is_string());
}

#[test]
fn missing_kernel_section_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), REACTION, &["symbol"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`kernel`"), "{}", stderr(&o));
}

#[test]
fn fit_range_with_one_grid_point_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    // 3 points at 1e-4, 1e-2, 1: only 1e-2 falls in the window
    let cfg = format!("{KERNEL}[symbol]\nxi_min = 1e-4\nxi_max = 1.0\npoints = 3\nfit_min = 1e-3\nfit_max = 0.1\n");
    let o = run(d.path(), &cfg, &["symbol"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("symbol.fit_min"), "{}", stderr(&o));
}

#[test]
fn unknown_field_and_missing_file_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &format!("{KERNEL}[sim]\ndxx = 1.0\n"), &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_fracfront"))
        .args(["--config", "/nonexistent/run.toml", "symbol"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = run(d.path(), &format!("{KERNEL}{REACTION}[sim]\ndt = 100.0\n"), &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.dt"));
}

#[test]
fn simulate_writes_trace_snapshots_and_partial_report_on_budget_failure() {
    let d = tempfile::tempdir().unwrap();
    let sim = "[sim]\nx_left = -20.0\nx_right = 20.0\ndx = 0.5\nt_end = 10.0\nsnapshot_times = [0.0, 2.5]\n";
    let o = run(d.path(), &format!("{KERNEL}{REACTION}{sim}"), &["simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = d.path().join("out");
    assert!(out.join("snapshots/u_t0.csv").exists());
    assert!(out.join("snapshots/u_t2.5.csv").exists());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,lambda,x_lambda"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run_report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    assert_eq!(report["predicted_exponent"], 2.0);

    let d = tempfile::tempdir().unwrap();
    let sim = "[sim]\nx_left = -20.0\nx_right = 20.0\ndx = 0.5\nt_end = 200.0\nmax_nodes = 200\n";
    let o = run(d.path(), &format!("{KERNEL}{REACTION}{sim}"), &["simulate"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("last stable time"));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("out/run_report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "failed");
    assert!(report["t_reached"].as_f64().unwrap() < 200.0);
    assert!(d.path().join("out/trace.csv").exists());
}

#[test]
fn tables_resolve_relative_to_the_config_file() {
    let d = tempfile::tempdir().unwrap();
    let rows: String = (0..=20)
        .map(|k| {
            let u = k as f64 / 20.0;
            let f = if u > 0.25 { (u - 0.25) * (1.0 - u) } else { 0.0 };
            format!("{u},{f}\n")
        })
        .collect();
    fs::create_dir(d.path().join("tables")).unwrap();
    fs::write(d.path().join("tables/f.csv"), format!("u,f\n{rows}")).unwrap();
    let cfg = format!("{KERNEL}[reaction]\nkind = \"tabulated\"\ntable = \"tables/f.csv\"\n[sim]\nx_left = -10.0\nx_right = 10.0\nt_end = 1.0\n");
    let o = run(d.path(), &cfg, &["simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn greens_reports_cauchy_cross_check() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[kernel]\nfamily = \"fractional_laplacian\"\ns = 0.5\n[greens]\nt = 2.0\npoints = 21\nflatten_samples = 4\n";
    let o = run(d.path(), cfg, &["greens"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("out/flattening_report.json")).unwrap()).unwrap();
    assert!((report["cauchy"]["width"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(report["cauchy"]["max_rel_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["flattening"]["pass"], true);
}

#[test]
fn certify_finds_t_star_and_writes_residuals() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{KERNEL}{REACTION}[subsolution]\nt_max = 1e4\nverify_points = 3\nresiduals_csv = true\n");
    let o = run(d.path(), &cfg, &["certify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cert: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("out/certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["pass"], true);
    let t_star = cert["search"]["t_star"].as_f64().unwrap();
    assert!(t_star > 1.0 && t_star < 1e4);
    let residuals = fs::read_to_string(d.path().join("out/residuals.csv")).unwrap();
    assert_eq!(residuals.lines().next(), Some("t,x,zone,residual"));

    // the scan ends before the inequality holds
    let cfg = format!("{KERNEL}{REACTION}[subsolution]\nt_max = 1.0\n");
    let o = run(d.path(), &cfg, &["certify"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let cert: serde_json::Value =
        serde_json::from_slice(&fs::read(d.path().join("out/certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["pass"], false);
    assert!(cert["search"]["t_star"].is_null());

    // κ far above κ* is refused before any search
    let cfg = format!("{KERNEL}{REACTION}[subsolution]\nkappa = 10.0\nt_max = 10.0\n");
    let o = run(d.path(), &cfg, &["certify"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn print_defaults_parses_back() {
    let o = Command::new(env!("CARGO_BIN_EXE_fracfront")).arg("--print-defaults").output().unwrap();
    assert!(o.status.success());
    let d = tempfile::tempdir().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[kernel]"));
    let o = run(d.path(), &text, &["symbol"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

use std::f64::consts::PI;

use fracfront::kernel::KernelSpec;
use fracfront::reaction::Reaction;
use fracfront::solver::{run, SimConfig};

/// Cauchy kernel, window [-60, 60], dx = 0.1.
fn cauchy_config(t_end: f64) -> SimConfig {
    let mut c = SimConfig::new(
        KernelSpec::fractional_laplacian(0.5).unwrap(),
        Reaction::quadratic_bump(0.25, 1.0).unwrap(),
    );
    c.x_left = -60.0;
    c.x_right = 60.0;
    c.dx = 0.1;
    c.t_end = t_end;
    c.levels = vec![0.3, 0.5];
    c
}

/// Heaviside data under the Cauchy semigroup: `v = 1/2 - atan(x/t)/π`.
fn cauchy_v(t: f64, x: f64) -> f64 {
    0.5 - (x / t).atan() / PI
}

#[test]
fn solution_lies_above_linear_evolution() {
    // f ≥ 0, so by comparison u ≥ v; the gap is at most t · max f.
    let t = 0.5;
    let out = run(&cauchy_config(t)).unwrap();
    let p = &out.final_profile;
    assert!((p.time - t).abs() < 1e-12);
    let max_f = 0.75f64.powi(2) / 4.0;
    let (mut below, mut above): (f64, f64) = (0.0, 0.0);
    for i in 0..p.len() {
        let x = p.x(i);
        if x.abs() < 1.0 || x.abs() > 30.0 {
            continue;
        }
        let gap = p.values[i] - cauchy_v(t, x);
        below = below.max(-gap);
        above = above.max(gap);
    }
    assert!(below < 5e-3, "u below v by {below}");
    assert!(above < t * max_f + 5e-3, "u above v by {above}");
}

#[test]
fn level_sets_are_ordered_and_advance() {
    let out = run(&cauchy_config(8.0)).unwrap();
    let (t3, x3) = out.trace.series(0.3);
    let (t5, x5) = out.trace.series(0.5);
    assert_eq!(t3, t5);
    for k in 0..x3.len() {
        assert!(x3[k] >= x5[k]);
    }
    let late: Vec<f64> = x5.iter().copied().filter(|x| *x > 1.0).collect();
    assert!(late.windows(2).all(|w| w[1] >= w[0] - 1e-12), "front retreats");
    assert!(*x5.last().unwrap() > 1.0);
    assert!(out.final_profile.is_monotone_decreasing());
}

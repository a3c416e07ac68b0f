use std::f64::consts::PI;

use fracfront::kernel::{symbol, KernelSpec};
use fracfront::operator::{apply_all, Operator, Profile, EDGE_TOL};
use fracfront::reaction::Reaction;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

/// `∫ (1 - cos ξy) |y|^{-1-2s} dy = π |ξ|^{2s} / (Γ(1+2s) sin πs)`.
fn pure_symbol(s: f64, c: f64, xi: f64) -> f64 {
    -c * PI * xi.abs().powf(2.0 * s) / (gamma(1.0 + 2.0 * s) * (PI * s).sin())
}

/// Decreasing profile from 1 to 0 built from positive random steps.
fn monotone_profile(steps: &[f64], dx: f64) -> Profile {
    let total: f64 = steps.iter().sum();
    let mut values = vec![1.0; 8];
    let mut acc = 0.0;
    for s in steps {
        acc += s;
        values.push(1.0 - acc / total);
    }
    values.extend(std::iter::repeat_n(0.0, 8));
    let x0 = -(values.len() as f64) * dx / 2.0;
    let mut p = Profile::new(x0, dx, values, 1.0, 0.0);
    p.monotone = true;
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pure_power_symbol_matches_closed_form(s in 0.05f64..0.49, c in 0.1f64..3.0, xi in 1e-3f64..20.0) {
        let spec = KernelSpec::fractional(s, c).unwrap();
        let w = symbol(&spec, xi).unwrap();
        prop_assert!((w / pure_symbol(s, c, xi) - 1.0).abs() < 1e-8);
        prop_assert_eq!(symbol(&spec, -xi).unwrap(), w);
    }

    #[test]
    fn truncated_symbol_is_negative_and_bounded_by_mass(s in 0.05f64..0.45, r in 0.1f64..1.0, xi in 1e-3f64..50.0) {
        let spec = KernelSpec::truncated_power_tail(s, 1.0, r).unwrap();
        let w = symbol(&spec, xi).unwrap();
        prop_assert!(w < 0.0);
        // W = Ĵ(ξ) - m with |Ĵ| ≤ m
        prop_assert!(w >= -2.0 * spec.mass() * (1.0 + 1e-9));
    }

    #[test]
    fn bump_reaction_shape(theta in 0.05f64..0.9, a in 0.1f64..5.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let f = Reaction::quadratic_bump(theta, a).unwrap();
        let (fu, fv) = (f.eval(u).unwrap(), f.eval(v).unwrap());
        prop_assert!(fu >= 0.0);
        if u <= theta {
            prop_assert_eq!(fu, 0.0);
        }
        prop_assert!((fu - fv).abs() <= f.lipschitz() * (u - v).abs() * (1.0 + 1e-12) + 1e-15);
        prop_assert_eq!(f.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn operator_respects_the_maximum_principle(
        steps in prop::collection::vec(0.01f64..1.0, 20..200),
        s in 0.1f64..0.45,
    ) {
        let spec = KernelSpec::fractional(s, 1.0).unwrap();
        let p = monotone_profile(&steps, 0.3);
        let d = apply_all(&spec, &p).unwrap();
        // the plateau at 1 sees only smaller values, the plateau at 0 only larger ones
        prop_assert!(d[0] <= 1e-15);
        prop_assert!(*d.last().unwrap() >= -1e-15);
        let mut op = Operator::new(&spec, 0.3, p.len(), EDGE_TOL).unwrap();
        let fast = op.apply_all(&p).unwrap();
        let scale = op.row_sum();
        for (a, b) in d.iter().zip(&fast) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn integrable_kernel_operator_matches_mass_formula() {
    // For integrable J and an isolated spike, D[u](x_i) = -u_i · (mass seen by the grid).
    let spec = KernelSpec::truncated_power_tail(0.25, 1.0, 1.0).unwrap();
    let n = 4001;
    let mut values = vec![0.0; n];
    values[n / 2] = 1.0;
    let p = Profile::new(-200.0, 0.1, values, 0.0, 0.0);
    let d = apply_all(&spec, &p).unwrap();
    // the spike loses mass at rate ≈ m, the neighbours gain ≈ J(0.1)·dx
    assert!((d[n / 2] / -spec.mass() - 1.0).abs() < 0.05, "{} vs {}", d[n / 2], spec.mass());
    let gain = d[n / 2 + 20];
    let expected = spec.eval(2.0).unwrap() * 0.1;
    assert!((gain / expected - 1.0).abs() < 0.01, "{gain} vs {expected}");
}

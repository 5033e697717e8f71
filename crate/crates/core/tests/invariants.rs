use lse_core::numerics::{find_root_1d, q_function, radial_expectation, QuadratureRule};
use lse_core::penalty::{prox, prox_oracle, PenaltySpec, Support};
use lse_core::spectral::{asymptotic_distortion, lambda_rs, MarcenkoPastur};
use lse_core::Complex64;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = PenaltySpec> {
    (0.0..2.0f64, 0.0..2.0f64, prop::option::of(0.05..4.0f64)).prop_map(|(l, l0, peak)| match peak {
        Some(peak) => PenaltySpec::disk(l, l0, peak).unwrap(),
        None => PenaltySpec::full_plane(l, l0).unwrap(),
    })
}

fn z_strategy() -> impl Strategy<Value = Complex64> {
    (0.0..4.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn prox_is_globally_optimal(spec in spec_strategy(), z in z_strategy(), c in 0.05..3.0f64) {
        let x = prox(&spec, z, c);
        let o = prox_oracle(&spec, z, c, 201);
        // the oracle may only tie or lose
        prop_assert!(spec.objective(x, z, c) <= spec.objective(o, z, c) + 1e-12);
    }

    #[test]
    fn prox_is_phase_equivariant(spec in spec_strategy(), z in z_strategy(), c in 0.05..3.0f64, theta in 0.0..6.28f64) {
        let rot = Complex64::from_polar(1.0, theta);
        let a = prox(&spec, z * rot, c);
        let b = prox(&spec, z, c) * rot;
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + z.norm()));
    }

    #[test]
    fn prox_never_expands(spec in spec_strategy(), z in z_strategy(), c in 0.05..3.0f64) {
        let m = prox(&spec, z, c).norm();
        let cap = spec.support.radius().unwrap_or(f64::INFINITY);
        prop_assert!(m <= z.norm().min(cap) + 1e-12);
    }

    #[test]
    fn prox_beats_every_candidate(spec in spec_strategy(), z in z_strategy(), c in 0.05..3.0f64) {
        let x = prox(&spec, z, c);
        let fx = spec.objective(x, z, c);
        for w in spec.candidates(z, c) {
            prop_assert!(fx <= spec.objective(w, z, c) + 1e-12);
        }
    }

    #[test]
    fn threshold_grows_with_weight_and_cost(l in 0.0..2.0f64, l0 in 0.0..2.0f64, c in 0.05..3.0f64, dl0 in 0.0..1.0f64, dc in 0.0..1.0f64) {
        let base = PenaltySpec::full_plane(l, l0).unwrap();
        let more = PenaltySpec::full_plane(l, l0 + dl0).unwrap();
        prop_assert!(base.thresholds(c).tau <= more.thresholds(c).tau);
        prop_assert!(base.thresholds(c).tau <= base.thresholds(c + dc).tau);
    }

    #[test]
    fn disk_prox_with_negative_weight_is_optimal(l in -3.0..0.0f64, l0 in 0.0..1.0f64, peak in 0.1..3.0f64, z in z_strategy(), c in 0.05..2.0f64) {
        let spec = PenaltySpec::new(l, l0, Support::disk(peak).unwrap()).unwrap();
        let x = prox(&spec, z, c);
        let o = prox_oracle(&spec, z, c, 201);
        prop_assert!(spec.objective(x, z, c) <= spec.objective(o, z, c) + 1e-12);
    }

    #[test]
    fn radial_indicator_is_exact(v in 0.05..5.0f64, fa in 0.0..1.0f64, fb in 0.0..1.0f64) {
        let top = 10.0 * v.sqrt();
        let (a, b) = if fa < fb { (fa * top, fb * top) } else { (fb * top, fa * top) };
        prop_assume!(b > a);
        let rule = QuadratureRule::default_panels();
        let got = radial_expectation(|r| if (a..b).contains(&r) { 1.0 } else { 0.0 }, v, &rule, &[a, b]).unwrap();
        let want = (-a * a / v).exp() - (-b * b / v).exp();
        prop_assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
    }

    #[test]
    fn root_satisfies_equation(root in -5.0..5.0f64, tol_exp in 4..12i32) {
        let tol = 10f64.powi(-tol_exp);
        let f = |x: f64| (x - root).tanh();
        let x = find_root_1d(f, -10.0, 10.0, tol).unwrap();
        prop_assert!(f(x).abs() <= 10.0 * tol);
    }
}

#[test]
fn q_function_decreases() {
    let mut prev = q_function(-7.5);
    for i in 1..=15_500 {
        let x = -7.5 + i as f64 * 1e-3;
        let q = q_function(x);
        assert!(q < prev, "q not decreasing at {x}");
        prev = q;
    }
}

#[test]
fn mp_reductions_on_grid() {
    for alpha in [0.3, 0.5, 1.0, 2.0] {
        let mp = MarcenkoPastur::new(alpha).unwrap();
        for i in 0..=500 {
            let chi = 50.0 * i as f64 / 500.0;
            for (p, ls) in [(0.5, 1.0), (2.0, 0.3)] {
                let lrs = lambda_rs(&mp, chi, p, ls).unwrap();
                let want = (ls + p) / alpha;
                assert!((lrs - want).abs() <= 1e-14 * want, "{alpha} {chi}: {}", (lrs - want).abs() / want);
                let d = asymptotic_distortion(&mp, chi, p, ls, alpha).unwrap();
                let want = (ls + p) / ((1.0 + chi) * (1.0 + chi));
                assert!((d - want).abs() <= 64.0 * f64::EPSILON * ls.max(p), "{alpha} {chi}: {d} vs {want}");
            }
        }
    }
}

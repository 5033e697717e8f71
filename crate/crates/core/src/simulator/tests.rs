use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::*;
use crate::replica::{random_tas_baseline, CalibrateOptions, SystemParams};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn scalar_problem(penalty: PenaltySpec) -> PrecodeProblem {
    PrecodeProblem::new(DMatrix::from_element(1, 1, c(1.0)), DVector::from_element(1, c(2.0)), penalty).unwrap()
}

fn random_problem(n: usize, k: usize, penalty: PenaltySpec, seed: u64) -> PrecodeProblem {
    generate_problem(n, k, 1.0, penalty, &mut RandomStream::new(seed, 0)).unwrap()
}

fn ccd(problem: &PrecodeProblem, opts: &CcdOptions) -> PrecodeResult {
    precode_ccd(problem, opts, &mut RandomStream::new(99, 0)).unwrap()
}

#[test]
fn scalar_ccd() {
    let p = scalar_problem(PenaltySpec::full_plane(1.0, 0.0).unwrap());
    let r = ccd(&p, &CcdOptions::default());
    assert!((r.x[0] - c(1.0)).norm() < 1e-14);
    assert!((r.objective - 2.0).abs() < 1e-14);
    assert!(r.converged);
    let r = ccd(&p, &CcdOptions { init: CcdInit::Zero, ..CcdOptions::default() });
    assert!((r.x[0] - c(1.0)).norm() < 1e-14);
}

#[test]
fn scalar_rzf() {
    let x = precode_rzf(&DMatrix::from_element(1, 1, c(1.0)), &DVector::from_element(1, c(2.0)), 1.0).unwrap();
    assert!((x[0] - c(1.0)).norm() < 1e-15);
}

#[test]
fn rzf_vanishes_for_large_lambda() {
    let p = random_problem(16, 8, PenaltySpec::full_plane(0.0, 0.0).unwrap(), 3);
    let big = 1e8;
    let x = precode_rzf(&p.h, &p.s, big).unwrap();
    let approx = p.h.adjoint() * &p.s / c(big);
    assert!(x.norm() < 1e-6 * p.s.norm());
    assert!((&x - &approx).norm() < 1e-6 * approx.norm());
}

#[test]
fn rzf_solves_normal_equations_both_shapes() {
    for (n, k) in [(30, 12), (12, 30)] {
        let p = random_problem(n, k, PenaltySpec::full_plane(0.0, 0.0).unwrap(), 5);
        let x = precode_rzf(&p.h, &p.s, 0.5).unwrap();
        // stationarity of ||Hx - s||^2 + 0.5 ||x||^2
        let grad = p.h.adjoint() * (&p.h * &x - &p.s) + &x * c(0.5);
        assert!(grad.norm() < 1e-10 * p.s.norm(), "{n}x{k}: {}", grad.norm());
    }
}

#[test]
fn rzf_rejects_singular_and_bad_lambda() {
    let s = DVector::from_vec(vec![c(1.0), c(0.0)]);
    let h2 = DMatrix::from_element(2, 2, c(1.0));
    assert!(matches!(precode_rzf(&h2, &s, 0.0), Err(Error::SingularSystem(_))));
    assert!(precode_rzf(&h2, &s, -1.0).is_err());
    assert!(precode_rzf(&h2, &s, f64::NAN).is_err());
}

#[test]
fn ccd_matches_rzf_in_convex_case() {
    let pen = PenaltySpec::full_plane(0.1, 0.0).unwrap();
    for seed in 0..5 {
        let p = random_problem(64, 32, pen, seed);
        let x_rzf = precode_rzf(&p.h, &p.s, 0.1).unwrap();
        let r = ccd(&p, &CcdOptions { tol: 0.0, max_sweeps: 2000, ..CcdOptions::default() });
        assert!((&r.x - &x_rzf).norm() / x_rzf.norm() <= 1e-8);
    }
}

#[test]
fn ccd_interpolates_underdetermined_least_squares() {
    let pen = PenaltySpec::full_plane(0.0, 0.0).unwrap();
    let p = random_problem(60, 20, pen, 11);
    let opts = CcdOptions { init: CcdInit::Zero, tol: 0.0, max_sweeps: 5000, ..CcdOptions::default() };
    let r = ccd(&p, &opts);
    let m = measure(&r.x, &p, ZERO_EPS);
    assert!(m.distortion <= 1e-12, "{}", m.distortion);
}

#[test]
fn ccd_objective_is_monotone_and_tracked() {
    let pen = PenaltySpec::disk(0.2, 0.1, 1.5).unwrap();
    let p = random_problem(80, 40, pen, 2);
    for init in [CcdInit::Zero, CcdInit::Rzf] {
        let r = ccd(&p, &CcdOptions { init, refresh_every: 1, ..CcdOptions::default() });
        assert!(r.max_step_increase <= 1e-12, "{}", r.max_step_increase);
        assert!(r.residual_drift <= 1e-8);
        assert!((r.objective - r.tracked_objective).abs() <= 1e-8 * r.objective);
    }
}

#[test]
fn ccd_respects_disk() {
    let peak = 0.8;
    let pen = PenaltySpec::disk(0.05, 0.02, peak).unwrap();
    let p = random_problem(100, 50, pen, 4);
    let r = ccd(&p, &CcdOptions::default());
    assert!(r.x.iter().all(|v| v.norm() <= peak.sqrt() + 1e-12));
    let m = measure(&r.x, &p, ZERO_EPS);
    assert!(m.papr <= peak / m.power + 1e-9);
}

#[test]
fn restarts_never_worsen_objective() {
    let pen = PenaltySpec::full_plane(0.15, 0.12).unwrap();
    let p = random_problem(80, 40, pen, 8);
    let one = ccd(&p, &CcdOptions::default());
    let four = ccd(&p, &CcdOptions { restarts: 4, ..CcdOptions::default() });
    assert!(four.objective <= one.objective);
    let bad = CcdOptions { restarts: 0, ..CcdOptions::default() };
    assert!(precode_ccd(&p, &bad, &mut RandomStream::new(1, 1)).is_err());
}

#[test]
fn degenerate_column_is_flagged() {
    let mut h = DMatrix::from_fn(3, 3, |i, j| c((i + 2 * j) as f64 + 1.0));
    h.set_column(1, &DVector::from_element(3, c(0.0)));
    let p = PrecodeProblem::new(h, DVector::from_element(3, c(1.0)), PenaltySpec::full_plane(0.5, 0.0).unwrap()).unwrap();
    let r = ccd(&p, &CcdOptions { init: CcdInit::Zero, ..CcdOptions::default() });
    assert_eq!(r.degenerate_columns, vec![1]);
    assert_eq!(r.x[1], c(0.0));
}

#[test]
fn random_tas_full_fraction_is_rzf() {
    let pen = PenaltySpec::full_plane(0.0, 0.0).unwrap();
    let p = random_problem(40, 20, pen, 6);
    let r = random_tas_rzf(&p, 1.0, 0.3, &mut RandomStream::new(1, 1)).unwrap();
    let x = precode_rzf(&p.h, &p.s, 0.3).unwrap();
    assert!((&r.x - &x).norm() <= 1e-12 * x.norm());
}

#[test]
fn random_tas_support_size() {
    let pen = PenaltySpec::full_plane(0.0, 0.0).unwrap();
    let p = random_problem(200, 60, pen, 6);
    let r = random_tas_rzf(&p, 0.5, 0.1, &mut RandomStream::new(1, 1)).unwrap();
    assert_eq!(r.x.iter().filter(|v| v.norm() > 0.0).count(), 100);
    assert!(random_tas_rzf(&p, 0.001, 0.1, &mut RandomStream::new(1, 1)).is_err());
}

#[test]
fn measure_zero_vector() {
    let p = random_problem(10, 5, PenaltySpec::full_plane(0.0, 0.0).unwrap(), 1);
    let m = measure(&DVector::from_element(10, c(0.0)), &p, ZERO_EPS);
    assert!((m.distortion - p.s.norm_squared() / 5.0).abs() < 1e-15);
    assert_eq!((m.power, m.eta, m.papr), (0.0, 0.0, 0.0));
}

#[test]
fn generated_moments() {
    let trials = 200;
    let (n, k) = (20, 30);
    let (mut s2, mut h2) = (0.0, 0.0);
    for t in 0..trials {
        let p = generate_problem(n, k, 2.0, PenaltySpec::full_plane(0.0, 0.0).unwrap(), &mut RandomStream::new(4, t)).unwrap();
        s2 += p.s.norm_squared() / k as f64;
        h2 += p.h.norm_squared();
    }
    let (s2, h2) = (s2 / trials as f64, h2 / trials as f64);
    assert!((s2 - 2.0).abs() <= 3.0 * 2.0 / ((k * trials as usize) as f64).sqrt());
    // Frobenius norm^2 is a sum of n k exponentials with mean 1/n
    assert!((h2 - k as f64).abs() <= 3.0 * (k as f64 / n as f64).sqrt() / (trials as f64).sqrt());
}

#[test]
fn generation_is_deterministic() {
    let pen = PenaltySpec::full_plane(0.0, 0.0).unwrap();
    let a = generate_problem(7, 5, 1.0, pen, &mut RandomStream::new(10, 3)).unwrap();
    let b = generate_problem(7, 5, 1.0, pen, &mut RandomStream::new(10, 3)).unwrap();
    let d = generate_problem(7, 5, 1.0, pen, &mut RandomStream::new(10, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.h, d.h);
    assert!(generate_problem(0, 5, 1.0, pen, &mut RandomStream::new(1, 1)).is_err());
    assert!(generate_problem(5, 5, 0.0, pen, &mut RandomStream::new(1, 1)).is_err());
}

fn small_config(penalty: PenaltySpec) -> MonteCarloConfig {
    MonteCarloConfig {
        n: 40,
        k: 20,
        lambda_s: 1.0,
        penalty,
        trials: 6,
        precoder: Precoder::Ccd(CcdOptions::default()),
        master_seed: 17,
        zero_eps: ZERO_EPS,
    }
}

#[test]
fn monte_carlo_independent_of_thread_count() {
    let cfg = small_config(PenaltySpec::disk(0.1, 0.08, 2.0).unwrap());
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| monte_carlo(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, monte_carlo(&cfg).unwrap());
}

#[test]
fn monte_carlo_report_shape() {
    let cfg = small_config(PenaltySpec::full_plane(0.1, 0.0).unwrap());
    let r = monte_carlo(&cfg).unwrap();
    assert_eq!(r.eta.mean, 1.0);
    assert_eq!(r.per_trial.len(), 6);
    assert_eq!(r.magnitudes.len(), 6 * 40);
    assert_eq!(r.half_magnitudes(false).len(), 6 * 20);
    for h in std::iter::once(&r.magnitude_histogram).chain(&r.half_histograms) {
        assert_eq!(h.masses.len(), HISTOGRAM_BINS);
        assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let d: Vec<f64> = r.per_trial.iter().map(|m| m.distortion).collect();
    let mean = d.iter().sum::<f64>() / 6.0;
    assert!((r.distortion.mean - mean).abs() < 1e-15);
    assert!(monte_carlo(&MonteCarloConfig { trials: 1, ..cfg.clone() }).is_err());
    assert!(monte_carlo(&MonteCarloConfig { n: 1, ..cfg }).is_err());
}

#[test]
fn least_squares_residual_fraction() {
    let cfg = MonteCarloConfig {
        n: 50,
        k: 100,
        trials: 40,
        precoder: Precoder::Ccd(CcdOptions { tol: 1e-13, max_sweeps: 3000, ..CcdOptions::default() }),
        ..small_config(PenaltySpec::full_plane(0.0, 0.0).unwrap())
    };
    let r = monte_carlo(&cfg).unwrap();
    // E ||P_perp s||^2 / k = (k - n) / k
    assert!((r.distortion.mean - 0.5).abs() < 3.0 * r.distortion.ci95 + 0.01, "{:?}", r.distortion);
}

#[test]
fn random_tas_distortion_tracks_replica() {
    let alpha = 0.5;
    let base = SystemParams::iid(alpha, 1.0, PenaltySpec::full_plane(0.0, 0.0).unwrap()).unwrap();
    let cal = random_tas_baseline(&base, 0.85, 0.5, None, &CalibrateOptions::default()).unwrap();
    let cfg = MonteCarloConfig {
        n: 200,
        k: 100,
        trials: 30,
        precoder: Precoder::RandomTasRzf { eta_r: 0.85, lambda: cal.lambda },
        ..small_config(PenaltySpec::full_plane(0.0, 0.0).unwrap())
    };
    let r = monte_carlo(&cfg).unwrap();
    let d = cal.solution.distortion;
    assert!((r.distortion.mean - d).abs() < 0.05 * d, "{} vs {d}", r.distortion.mean);
    assert!((r.power.mean - 0.5).abs() < 0.03, "{}", r.power.mean);
    assert!((r.eta.mean - 0.85).abs() < 1e-12);
}

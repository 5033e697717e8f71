use std::fs;
use std::path::Path;
use std::process::Command;

use lse_expcli::run::{compare, run};
use lse_expcli::table::{read_sweep, write_sweep, Status, SweepRow};
use lse_expcli::{ExperimentConfig, Mode};
use proptest::prelude::*;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::resolve(text, &[]).unwrap()
}

fn sweep(dir: &Path, text: &str) -> Vec<(String, Vec<SweepRow>)> {
    let out = run(Mode::Sweep, &config(text), dir).unwrap();
    out.files
        .iter()
        .filter(|f| f.extension().is_some_and(|e| e == "csv"))
        .map(|f| (f.file_stem().unwrap().to_string_lossy().into_owned(), read_sweep(f).unwrap()))
        .collect()
}

fn distortions(rows: &[SweepRow]) -> Vec<f64> {
    rows.iter().map(|r| r.distortion_db.expect("solved point")).collect()
}

fn close12(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-11 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweep_csv_round_trips(values in prop::collection::vec((1e-3f64..10.0, -1e3f64..1e3, 1e-15f64..1.0, 0usize..100_000), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<SweepRow> = values
            .iter()
            .map(|&(a, l, r, it)| SweepRow {
                alpha_inverse: a,
                lambda: Some(l),
                lambda0: if it % 3 == 0 { None } else { Some(l.abs()) },
                chi: Some(a * 0.5),
                p: Some(r),
                eta: Some(r.min(1.0)),
                papr_db: if it % 2 == 0 { Some(f64::INFINITY) } else { Some(3.0) },
                distortion_db: Some(-l / 7.0),
                residual: Some(r * 1e-9),
                iterations: Some(it),
                status: if it % 5 == 0 { Status::PowerCapped } else { Status::Ok },
            })
            .collect();
        let path = dir.path().join("s.csv");
        write_sweep(&path, &rows).unwrap();
        let back = read_sweep(&path).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            let pairs = [
                (Some(a.alpha_inverse), Some(b.alpha_inverse)),
                (a.lambda, b.lambda),
                (a.lambda0, b.lambda0),
                (a.chi, b.chi),
                (a.p, b.p),
                (a.eta, b.eta),
                (a.papr_db, b.papr_db),
                (a.distortion_db, b.distortion_db),
                (a.residual, b.residual),
            ];
            for (x, y) in pairs {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!(close12(x, y), "{} vs {}", x, y),
                    (None, None) => {}
                    other => prop_assert!(false, "{:?}", other),
                }
            }
            prop_assert_eq!(a.iterations, b.iterations);
            prop_assert_eq!(a.status, b.status);
        }
    }
}

#[test]
fn sparser_targets_distort_more() {
    let dir = tempfile::tempdir().unwrap();
    let files = sweep(dir.path(), "[system]\nalpha_inverse = \"1.0:0.3:2.8\"\n[targets]\np = 0.5\neta = [1.0, 0.5, 0.3]\n");
    let d = |label: &str| distortions(&files.iter().find(|(n, _)| n.contains(label)).unwrap().1);
    let (full, half, third) = (d("eta1_"), d("eta0.5_"), d("eta0.3_"));
    for i in 0..full.len() {
        assert!(full[i] <= half[i] + 1e-9 && half[i] <= third[i] + 1e-9, "{i}: {} {} {}", full[i], half[i], third[i]);
    }
}

#[test]
fn looser_peak_limit_never_hurts() {
    let dir = tempfile::tempdir().unwrap();
    let files = sweep(
        dir.path(),
        "[system]\nalpha_inverse = \"1.0:0.3:2.8\"\n[penalty]\nsupport = \"disk\"\n\
         [targets]\np = 0.5\neta = 0.5\npapr_db = [0.0, 3.0, 8.0]\n",
    );
    let d = |label: &str| distortions(&files.iter().find(|(n, _)| n.ends_with(label)).unwrap().1);
    let (tight, mid, loose) = (d("papr0db"), d("papr3db"), d("papr8db"));
    for i in 0..tight.len() {
        assert!(tight[i] >= mid[i] - 1e-9 && mid[i] >= loose[i] - 1e-9, "{i}: {} {} {}", tight[i], mid[i], loose[i]);
    }
}

#[test]
fn one_point_sweep_matches_replica_mode() {
    let text = "[system]\nalpha_inverse = 1.7\n[targets]\np = 0.5\neta = 0.5\n";
    let dir = tempfile::tempdir().unwrap();
    let from_sweep = sweep(&dir.path().join("s"), text).remove(0).1;
    let out = run(Mode::Replica, &config(text), &dir.path().join("r")).unwrap();
    let from_replica = read_sweep(&out.files[1]).unwrap();
    assert_eq!(from_sweep, from_replica);
    assert_eq!(from_sweep.len(), 1);
    assert_eq!(from_sweep[0].status, Status::Ok);
}

#[test]
fn dense_convex_case_matches_simulation() {
    let c = compare(&config(
        "[system]\nalpha_inverse = 2.0\n[targets]\np = 0.5\neta = 1.0\n\
         [simulation]\nn = 400\ntrials = 50\nseed = 9\nks_draws = 10000\n",
    ))
    .unwrap();
    let want = c.point.solution.distortion;
    let gap = (c.report.distortion.mean - want).abs() / want;
    assert!(gap <= 0.05, "replica {want}, simulated {}", c.report.distortion.mean);
}

#[test]
fn plot_draws_one_line_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let sweeps = dir.path().join("sweeps");
    run(
        Mode::Sweep,
        &config("[system]\nalpha_inverse = \"1.0:0.45:2.8\"\n[targets]\np = 0.5\neta = [1.0, 0.5, 0.3]\n"),
        &sweeps,
    )
    .unwrap();
    let mut inputs: Vec<String> = fs::read_dir(&sweeps)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| format!("{:?}", p.to_str().unwrap()))
        .collect();
    inputs.sort();
    let cfg = config(&format!("[plot]\ninputs = [{}]\ntitle = \"sparsity\"\n", inputs.join(", ")));
    let out = run(Mode::Plot, &cfg, &dir.path().join("plot")).unwrap();
    let svg = fs::read_to_string(&out.files[1]).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert!(svg.contains("eta0.3_unconstrained"));
}

#[test]
fn manifest_reproduces_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::resolve(
        "[system]\nalpha_inverse = \"1.2:0.4:2.8\"\n[penalty]\nsupport = \"disk\"\n[targets]\np = 0.5\neta = 0.5\npapr_db = 3.0\n",
        &["solver.damping=0.6".to_string()],
    )
    .unwrap();
    let first = run(Mode::Sweep, &cfg, &dir.path().join("a")).unwrap();
    let again = ExperimentConfig::load(&first.files[0], &[]).unwrap();
    let second = run(Mode::Sweep, &again, &dir.path().join("b")).unwrap();
    for (a, b) in first.files.iter().zip(&second.files) {
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn binary_reports_missing_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lse"))
        .args(["sweep", "--out", dir.path().to_str().unwrap(), "--set", "system.alpha_inverse=2.0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("targets"));
}

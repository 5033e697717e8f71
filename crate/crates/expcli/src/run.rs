//! Mode implementations. Every mode writes `manifest.toml` and its CSV or
//! SVG outputs into the output directory and returns a text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lse_core::numerics::{ks_distance, KsReference, RandomStream};
use lse_core::penalty::PenaltySpec;
use lse_core::replica::{
    calibrate, decoupled_sample, random_tas_baseline, random_tas_equivalent_fraction, solve_fixed_point,
    ReplicaSolution, Targets,
};
use lse_core::simulator::{monte_carlo, MonteCarloConfig, MonteCarloReport, Precoder};
use rayon::prelude::*;

use crate::config::{round12, to_db, Control, ExperimentConfig, Mode, PrecoderKind};
use crate::error::{Error, Result};
use crate::plot::{load_curves, render_svg};
use crate::table::{num, opt, write_csv, write_sweep, Status, SweepRow};

pub const MANIFEST: &str = "manifest.toml";

/// Stream index reserved for decoupled-law draws; trials use `0..trials`.
pub const DECOUPLED_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// A solved replica point with the factors that produced it.
#[derive(Debug, Clone)]
pub struct Point {
    pub alpha_inverse: f64,
    pub lambda: f64,
    pub lambda0: f64,
    pub penalty: PenaltySpec,
    pub solution: ReplicaSolution,
    pub status: Status,
}

impl Point {
    pub fn row(&self) -> SweepRow {
        let s = &self.solution;
        SweepRow {
            alpha_inverse: self.alpha_inverse,
            lambda: Some(self.lambda),
            lambda0: Some(self.lambda0),
            chi: Some(s.state.chi),
            p: Some(s.state.p),
            eta: Some(s.eta),
            papr_db: Some(to_db(s.papr)),
            distortion_db: Some(to_db(s.distortion)),
            residual: Some(s.residual),
            iterations: Some(s.iterations),
            status: self.status,
        }
    }
}

/// Solves one grid point; targets that exceed the peak are capped.
pub fn solve_point(cfg: &ExperimentConfig, alpha_inverse: f64, control: Control) -> Result<Point> {
    let base = cfg.base_system(alpha_inverse)?;
    match control {
        Control::Direct { lambda, lambda0 } => {
            let penalty = base.penalty.with_factors(lambda, lambda0)?;
            let solution = solve_fixed_point(&base.with_penalty(penalty), &cfg.solve_options())?;
            Ok(Point { alpha_inverse, lambda, lambda0, penalty, solution, status: Status::Ok })
        }
        Control::Targets(t) => {
            let (t2, status) = if t.feasible() { (t, Status::Ok) } else { (t.capped(), Status::PowerCapped) };
            let cal = calibrate(&base, &t2, &cfg.calibrate_options())?;
            let support = t2.support()?.unwrap_or(base.penalty.support);
            let penalty = PenaltySpec::new(cal.lambda, cal.lambda0, support)?;
            Ok(Point {
                alpha_inverse,
                lambda: cal.lambda,
                lambda0: cal.lambda0,
                penalty,
                solution: cal.solution,
                status,
            })
        }
    }
}

/// File-name label of a control point, e.g. `eta0.5_papr3db`.
pub fn control_label(control: &Control) -> String {
    match control {
        Control::Direct { .. } => "direct".into(),
        Control::Targets(t) => {
            let peak = match t.papr {
                Some(r) => format!("papr{}db", round12(to_db(r))),
                None => "unconstrained".into(),
            };
            format!("eta{}_{peak}", round12(t.eta))
        }
    }
}

fn solve_grid(cfg: &ExperimentConfig, control: Control, summary: &mut String) -> Result<Vec<SweepRow>> {
    let grid = cfg.alpha_inverse()?;
    let results: Vec<(f64, Result<Point>)> = grid.par_iter().map(|&a| (a, solve_point(cfg, a, control))).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (a, r) in results {
        match r {
            Ok(p) => rows.push(p.row()),
            Err(e) => {
                let _ = writeln!(summary, "{} alpha^-1 = {a}: {e}", control_label(&control));
                rows.push(SweepRow::failed(a));
            }
        }
    }
    Ok(rows)
}

pub fn write_manifest(cfg: &ExperimentConfig, mode: Mode, out: &Path) -> Result<PathBuf> {
    let mut m = cfg.clone();
    m.mode = Some(mode);
    m.version = Some(env!("CARGO_PKG_VERSION").to_string());
    let path = out.join(MANIFEST);
    fs::write(&path, m.to_manifest()?)?;
    Ok(path)
}

pub fn run(mode: Mode, cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    fs::create_dir_all(out)?;
    let manifest = write_manifest(cfg, mode, out)?;
    let mut output = match mode {
        Mode::Replica => run_replica(cfg, out),
        Mode::Sweep => run_sweep(cfg, out),
        Mode::Simulate => run_simulate(cfg, out),
        Mode::Compare => run_compare(cfg, out),
        Mode::Calibrate => run_calibrate(cfg, out),
        Mode::Saving => run_saving(cfg, out),
        Mode::Plot => run_plot(cfg, out),
    }?;
    output.files.insert(0, manifest);
    Ok(output)
}

fn run_replica(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let control = cfg.single_control()?;
    let mut summary = String::new();
    let rows = solve_grid(cfg, control, &mut summary)?;
    for r in &rows {
        let _ = writeln!(
            summary,
            "alpha^-1 = {}: D = {} dB, p = {}, eta = {}, chi = {}",
            num(r.alpha_inverse),
            opt(r.distortion_db),
            opt(r.p),
            opt(r.eta),
            opt(r.chi)
        );
    }
    let path = out.join("replica.csv");
    write_sweep(&path, &rows)?;
    Ok(RunOutput { files: vec![path], summary })
}

fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    if cfg.targets.is_none() {
        return Err(Error::Config("sweep needs a [targets] section".into()));
    }
    let mut summary = String::new();
    let mut files = Vec::new();
    for control in cfg.controls()? {
        let rows = solve_grid(cfg, control, &mut summary)?;
        let path = out.join(format!("sweep_{}.csv", control_label(&control)));
        let bad = rows.iter().filter(|r| r.status == Status::Error).count();
        let capped = rows.iter().filter(|r| r.status == Status::PowerCapped).count();
        let _ = writeln!(summary, "{}: {} points, {bad} failed, {capped} power capped", path.display(), rows.len());
        write_sweep(&path, &rows)?;
        files.push(path);
    }
    Ok(RunOutput { files, summary })
}

fn run_calibrate(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let grid = cfg.alpha_inverse()?;
    let controls = cfg.controls()?;
    let jobs: Vec<(f64, Control)> = controls.iter().flat_map(|c| grid.iter().map(move |a| (*a, *c))).collect();
    let results: Vec<Result<Point>> = jobs.par_iter().map(|(a, c)| solve_point(cfg, *a, *c)).collect();
    let mut rows = Vec::new();
    let mut summary = String::new();
    for ((a, c), r) in jobs.iter().zip(results) {
        let Control::Targets(t) = c else {
            return Err(Error::Config("calibrate needs a [targets] section".into()));
        };
        let papr_db = t.papr.map(|r| num(to_db(r))).unwrap_or_else(|| num(f64::INFINITY));
        let mut row = vec![num(*a), num(t.p), num(t.eta), papr_db];
        match r {
            Ok(p) => row.extend([num(p.lambda), num(p.lambda0), num(p.solution.residual), p.status.as_str().into()]),
            Err(e) => {
                let _ = writeln!(summary, "{} alpha^-1 = {a}: {e}", control_label(c));
                row.extend([String::new(), String::new(), String::new(), Status::Error.as_str().into()]);
            }
        }
        let _ = writeln!(summary, "{}", row.join(" "));
        rows.push(row);
    }
    let path = out.join("calibrate.csv");
    write_csv(
        &path,
        &["alpha_inverse", "p_target", "eta_target", "papr_db_target", "lambda", "lambda0", "residual", "status"],
        &rows,
    )?;
    Ok(RunOutput { files: vec![path], summary })
}

/// Simulation inputs resolved from the configuration at a single load.
pub fn monte_carlo_config(cfg: &ExperimentConfig, point: &Point) -> Result<MonteCarloConfig> {
    let s = &cfg.simulation;
    let k = (s.n as f64 / point.alpha_inverse).round() as usize;
    if k == 0 {
        return Err(Error::Config(format!("n = {} gives no users at alpha^-1 = {}", s.n, point.alpha_inverse)));
    }
    let precoder = match s.precoder {
        PrecoderKind::Ccd => Precoder::Ccd(cfg.ccd_options()),
        PrecoderKind::RandomTas => {
            let eta_r = s.eta_r.ok_or_else(|| Error::Config("random_tas needs simulation.eta_r".into()))?;
            let lambda = match cfg.single_control()? {
                Control::Direct { lambda, .. } => lambda,
                Control::Targets(t) => {
                    let base = cfg.base_system(point.alpha_inverse)?;
                    random_tas_baseline(&base, eta_r, t.p, t.papr, &cfg.calibrate_options())?.lambda
                }
            };
            Precoder::RandomTasRzf { eta_r, lambda }
        }
    };
    Ok(MonteCarloConfig {
        n: s.n,
        k,
        lambda_s: cfg.system.lambda_s,
        penalty: point.penalty,
        trials: s.trials,
        precoder,
        master_seed: s.seed,
        zero_eps: s.zero_eps,
    })
}

fn simulate_point(cfg: &ExperimentConfig) -> Result<(Point, MonteCarloReport)> {
    let point = solve_point(cfg, cfg.single_alpha_inverse()?, cfg.single_control()?)?;
    let report = monte_carlo(&monte_carlo_config(cfg, &point)?)?;
    Ok((point, report))
}

fn write_histograms(path: &Path, r: &MonteCarloReport) -> Result<()> {
    let h = &r.magnitude_histogram;
    let w = h.bin_width();
    let rows: Vec<Vec<String>> = (0..h.masses.len())
        .map(|i| {
            vec![
                num(h.lo + i as f64 * w),
                num(h.lo + (i + 1) as f64 * w),
                num(h.masses[i]),
                num(r.half_histograms[0].masses[i]),
                num(r.half_histograms[1].masses[i]),
            ]
        })
        .collect();
    write_csv(path, &["bin_lo", "bin_hi", "pooled", "first_half", "second_half"], &rows)
}

fn run_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let (point, r) = simulate_point(cfg)?;
    let mut rows: Vec<Vec<String>> = [
        ("distortion", r.distortion),
        ("power", r.power),
        ("eta", r.eta),
        ("papr", r.papr),
    ]
    .iter()
    .map(|(q, m)| vec![q.to_string(), num(m.mean), num(m.ci95)])
    .collect();
    rows.push(vec!["papr_max".into(), num(r.papr_max), String::new()]);
    rows.push(vec!["unconverged".into(), num(r.unconverged as f64), String::new()]);
    rows.push(vec!["lambda".into(), num(point.lambda), String::new()]);
    rows.push(vec!["lambda0".into(), num(point.lambda0), String::new()]);
    let path = out.join("simulate.csv");
    write_csv(&path, &["quantity", "mean", "ci95"], &rows)?;
    let hist = out.join("histogram.csv");
    write_histograms(&hist, &r)?;
    let summary = rows.iter().map(|r| r.join(" ")).collect::<Vec<_>>().join("\n") + "\n";
    Ok(RunOutput { files: vec![path, hist], summary })
}

/// Replica prediction next to the finite-size estimate at one point.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub point: Point,
    pub report: MonteCarloReport,
    /// KS distance between pooled `|x_j|` and the decoupled law.
    pub ks_decoupled: f64,
    /// KS distance between the two halves of the antenna indices.
    pub ks_halves: f64,
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let (point, report) = simulate_point(cfg)?;
    let mut stream = RandomStream::new(cfg.simulation.seed, DECOUPLED_STREAM);
    let law: Vec<f64> = decoupled_sample(&point.solution.state, &point.penalty, &mut stream, cfg.simulation.ks_draws)
        .iter()
        .map(|v| v.norm())
        .collect();
    let ks_decoupled = ks_distance(&report.magnitudes, KsReference::Sample(&law))?;
    let ks_halves = ks_distance(&report.half_magnitudes(false), KsReference::Sample(&report.half_magnitudes(true)))?;
    Ok(Comparison { point, report, ks_decoupled, ks_halves })
}

fn run_compare(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let c = compare(cfg)?;
    let s = &c.point.solution;
    let r = &c.report;
    let gap = |rep: f64, emp: f64| if rep.is_finite() && rep != 0.0 { num((emp - rep) / rep) } else { String::new() };
    let mut rows: Vec<Vec<String>> = [
        ("distortion", s.distortion, r.distortion),
        ("power", s.state.p, r.power),
        ("eta", s.eta, r.eta),
        ("papr", s.papr, r.papr),
    ]
    .iter()
    .map(|(q, rep, m)| vec![q.to_string(), num(*rep), num(m.mean), num(m.ci95), gap(*rep, m.mean)])
    .collect();
    rows.push(vec!["ks_decoupled".into(), String::new(), num(c.ks_decoupled), String::new(), String::new()]);
    rows.push(vec!["ks_halves".into(), String::new(), num(c.ks_halves), String::new(), String::new()]);
    let path = out.join("compare.csv");
    write_csv(&path, &["quantity", "replica", "empirical", "ci95", "rel_gap"], &rows)?;
    let hist = out.join("histogram.csv");
    write_histograms(&hist, r)?;
    let mut summary = format!(
        "alpha^-1 = {}, lambda = {}, lambda0 = {}, n = {}, trials = {}\n",
        num(c.point.alpha_inverse),
        num(c.point.lambda),
        num(c.point.lambda0),
        r.n,
        r.trials
    );
    for row in &rows {
        let _ = writeln!(summary, "{}", row.join(" "));
    }
    Ok(RunOutput { files: vec![path, hist], summary })
}

/// Antenna saving against random selection at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SavingRow {
    pub alpha_inverse: f64,
    pub targets: Targets,
    pub distortion: Option<f64>,
    pub eta_random: Option<f64>,
    pub status: Status,
}

impl SavingRow {
    pub fn saving(&self) -> Option<f64> {
        self.eta_random.map(|e| e - self.targets.eta)
    }
}

pub fn savings(cfg: &ExperimentConfig) -> Result<(Vec<SavingRow>, String)> {
    let grid = cfg.alpha_inverse()?;
    let mut jobs = Vec::new();
    for c in cfg.controls()? {
        let Control::Targets(t) = c else {
            return Err(Error::Config("saving needs a [targets] section".into()));
        };
        jobs.extend(grid.iter().map(|a| (*a, t)));
    }
    let results: Vec<Result<SavingRow>> = jobs
        .par_iter()
        .map(|&(a, t)| {
            let point = solve_point(cfg, a, Control::Targets(t))?;
            let base = cfg.base_system(a)?;
            let d = point.solution.distortion;
            let eta_random = random_tas_equivalent_fraction(&base, d, t.p, t.papr, &cfg.calibrate_options())?;
            Ok(SavingRow { alpha_inverse: a, targets: t, distortion: Some(d), eta_random: Some(eta_random), status: point.status })
        })
        .collect();
    let mut summary = String::new();
    let rows = jobs
        .iter()
        .zip(results)
        .map(|(&(a, t), r)| {
            r.unwrap_or_else(|e| {
                let _ = writeln!(summary, "{} alpha^-1 = {a}: {e}", control_label(&Control::Targets(t)));
                SavingRow { alpha_inverse: a, targets: t, distortion: None, eta_random: None, status: Status::Error }
            })
        })
        .collect();
    Ok((rows, summary))
}

fn run_saving(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let (rows, mut summary) = savings(cfg)?;
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.alpha_inverse),
                num(r.targets.eta),
                r.targets.papr.map(|x| num(to_db(x))).unwrap_or_else(|| num(f64::INFINITY)),
                opt(r.distortion.map(to_db)),
                opt(r.eta_random),
                opt(r.saving()),
                r.status.as_str().into(),
            ]
        })
        .collect();
    for r in &records {
        let _ = writeln!(summary, "{}", r.join(" "));
    }
    let path = out.join("saving.csv");
    write_csv(
        &path,
        &["alpha_inverse", "eta", "papr_db", "distortion_db", "eta_random", "saving", "status"],
        &records,
    )?;
    Ok(RunOutput { files: vec![path], summary })
}

fn run_plot(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let curves = load_curves(&cfg.plot.inputs)?;
    let svg = render_svg(&curves, cfg.plot.title.as_deref())?;
    let path = out.join("plot.svg");
    fs::write(&path, svg)?;
    Ok(RunOutput { summary: format!("{} curves\n", curves.len()), files: vec![path] })
}

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::numerics::find_root_1d;
use crate::penalty::{PenaltySpec, Support};

use super::{solve_fixed_point, ReplicaSolution, SolveOptions, SystemParams};

/// Operating point the control factors are tuned to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Targets {
    /// Average transmit power per antenna.
    pub p: f64,
    /// Fraction of active antennas, in `(0, 1]`.
    pub eta: f64,
    /// Linear peak-to-average power ratio `P / p`. When set, the support
    /// becomes a disk of peak power `papr * p`.
    pub papr: Option<f64>,
}

impl Targets {
    pub fn new(p: f64, eta: f64, papr: Option<f64>) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("target power {p}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidArgument(format!("target eta {eta}")));
        }
        if let Some(r) = papr {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("target papr {r}")));
            }
        }
        Ok(Self { p, eta, papr })
    }

    /// Support implied by the targets, `None` to keep the base support.
    pub fn support(&self) -> Result<Option<Support>> {
        self.papr.map(|r| Support::disk(r * self.p)).transpose()
    }

    /// With `eta` active antennas below a peak `P`, the power cannot exceed
    /// `eta P`, so `papr * eta >= 1` is required.
    pub fn feasible(&self) -> bool {
        self.papr.is_none_or(|r| r * self.eta >= 1.0 - PAPR_SLACK)
    }

    /// Keeps the peak power `P = papr * p` and, if `p` is out of reach,
    /// lowers it to the largest achievable `eta P` (every active antenna on
    /// the peak).
    pub fn capped(&self) -> Self {
        match self.papr {
            Some(r) if !self.feasible() => Self {
                p: r * self.eta * self.p,
                eta: self.eta,
                papr: Some(1.0 / self.eta),
            },
            _ => *self,
        }
    }

    /// Every active antenna transmits at the peak.
    fn on_peak(&self) -> bool {
        self.papr.is_some_and(|r| r * self.eta <= 1.0 + PAPR_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateOptions {
    /// Absolute tolerance on both `p - p*` and `eta - eta*`.
    pub tol: f64,
    pub max_newton: usize,
    /// Finite-difference step in the Newton coordinates.
    pub fd_step: f64,
    pub solve: SolveOptions,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_newton: 60,
            fd_step: 1e-4,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub lambda: f64,
    pub lambda0: f64,
    pub solution: ReplicaSolution,
}

const PAPR_SLACK: f64 = 1e-9;
const LOG_LAMBDA_RANGE: (f64, f64) = (-30.0, 12.0);
const LOG_LAMBDA0_RANGE: (f64, f64) = (-30.0, 12.0);

/// Evaluates fixed points for trial factors, warm-starting from the last
/// successful solve.
struct Evaluator<'a> {
    base: SystemParams,
    opts: &'a CalibrateOptions,
    warm: RefCell<Option<(f64, f64)>>,
    first_error: RefCell<Option<Error>>,
}

impl<'a> Evaluator<'a> {
    fn new(base: SystemParams, opts: &'a CalibrateOptions) -> Self {
        Self {
            base,
            opts,
            warm: RefCell::new(None),
            first_error: RefCell::new(None),
        }
    }

    fn solve(&self, lambda: f64, lambda0: f64) -> Result<ReplicaSolution> {
        let penalty = self.base.penalty.with_factors(lambda, lambda0)?;
        let params = self.base.with_penalty(penalty);
        let mut solve = self.opts.solve.clone();
        if let Some(init) = *self.warm.borrow() {
            solve.init = Some(init);
        }
        let out = solve_fixed_point(&params, &solve).or_else(|err| {
            if solve.init.is_some() && solve.init != self.opts.solve.init {
                solve.init = self.opts.solve.init;
                solve_fixed_point(&params, &solve)
            } else {
                Err(err)
            }
        });
        if let Ok(sol) = &out {
            *self.warm.borrow_mut() = Some((sol.state.chi, sol.state.p.max(1e-300)));
        }
        out
    }

    /// Scalar objective for the root finder: errors become NaN and are kept.
    fn scalar(&self, lambda: f64, lambda0: f64, pick: impl Fn(&ReplicaSolution) -> f64) -> f64 {
        match self.solve(lambda, lambda0) {
            Ok(sol) => pick(&sol),
            Err(err) => {
                self.first_error.borrow_mut().get_or_insert(err);
                f64::NAN
            }
        }
    }

    fn root_error(&self, err: Error, what: &str) -> Error {
        match err {
            Error::NoSignChange { .. } => Error::NotAchievable(format!("{what}: {err}")),
            Error::NonFinite(_) => self
                .first_error
                .borrow_mut()
                .take()
                .unwrap_or(err),
            other => other,
        }
    }
}

/// Lowest quadratic weight used on a disk: makes `1 + kappa lambda <= 0` for
/// every state, so each active antenna sits on the peak.
fn constant_envelope_lambda(base: &SystemParams) -> f64 {
    -2.0 * base.rtransform.evaluate(0.0)
}

/// Tunes `(lambda, lambda0)` so the fixed point meets `targets`.
///
/// `eta = 1` fixes `lambda0 = 0` and solves for `lambda` alone. When
/// `papr * eta = 1` every active antenna must sit on the peak: `lambda` is
/// fixed at a negative value that empties the shrinkage band and `lambda0`
/// alone sets the activity. Otherwise a
/// damped Newton iteration on `(log lambda, log lambda0)` (`lambda` itself
/// on a disk, where it may be negative) runs first, with nested bracketing
/// as fallback.
pub fn calibrate(
    base: &SystemParams,
    targets: &Targets,
    opts: &CalibrateOptions,
) -> Result<Calibration> {
    let targets = Targets::new(targets.p, targets.eta, targets.papr)?;
    if !targets.feasible() {
        return Err(Error::NotAchievable(format!(
            "power {} exceeds eta * P with eta = {} and PAPR {}",
            targets.p,
            targets.eta,
            targets.papr.unwrap_or(f64::INFINITY)
        )));
    }
    let mut base = base.clone();
    if let Some(support) = targets.support()? {
        base.penalty = PenaltySpec::new(0.0, 0.0, support)?;
    }
    let ev = Evaluator::new(base, opts);
    let (lambda, lambda0) = if targets.on_peak() {
        let lambda = constant_envelope_lambda(&ev.base);
        let lambda0 = if targets.eta >= 1.0 {
            0.0
        } else {
            solve_lambda0(&ev, lambda, &targets)?
        };
        (lambda, lambda0)
    } else if targets.eta >= 1.0 {
        (solve_lambda(&ev, 0.0, &targets)?, 0.0)
    } else {
        match newton(&ev, &targets) {
            Ok(pair) => pair,
            Err(_) => nested(&ev, &targets)?,
        }
    };
    let solution = ev.solve(lambda, lambda0)?;
    let dp = (solution.state.p - targets.p).abs();
    let de = (solution.eta - targets.eta).abs();
    if dp > opts.tol || de > opts.tol {
        return Err(Error::NotAchievable(format!(
            "calibration ended at lambda = {lambda}, lambda0 = {lambda0} with |dp| = {dp:e}, |deta| = {de:e}"
        )));
    }
    Ok(Calibration {
        lambda,
        lambda0,
        solution,
    })
}

fn is_disk(ev: &Evaluator) -> bool {
    matches!(ev.base.penalty.support, Support::Disk { .. })
}

/// `lambda` with `p(lambda, lambda0) = p*`; the power decreases in `lambda`.
fn solve_lambda(ev: &Evaluator, lambda0: f64, targets: &Targets) -> Result<f64> {
    let tol = 1e-3 * ev.opts.tol;
    if is_disk(ev) {
        let f = |l: f64| ev.scalar(l, lambda0, |s| s.state.p - targets.p);
        let mut hi = 1.0;
        let mut f_hi = f(hi);
        while f_hi > 0.0 {
            hi *= 4.0;
            if hi > LOG_LAMBDA_RANGE.1.exp() {
                return Err(Error::NotAchievable(format!(
                    "power {} unreachable by raising lambda",
                    targets.p
                )));
            }
            f_hi = f(hi);
        }
        if f_hi.is_nan() {
            return Err(ev.root_error(Error::NonFinite("power at lambda = 1".into()), "power calibration"));
        }
        // walk down; small lambda may leave no finite fixed point, so the
        // walk stops at the first failure
        let ce = constant_envelope_lambda(&ev.base);
        let downs = (1..=40)
            .map(|k| hi * 0.5f64.powi(k))
            .chain([0.0, 0.25 * ce, 0.5 * ce, ce]);
        let mut lo = None;
        let mut prev = hi;
        for l in downs {
            let v = f(l);
            if v.is_nan() {
                break;
            }
            if v >= 0.0 {
                lo = Some(l);
                break;
            }
            prev = l;
        }
        let Some(lo) = lo else {
            return Err(Error::NotAchievable(format!(
                "power {} unreachable by lowering lambda",
                targets.p
            )));
        };
        find_root_1d(f, lo, prev, tol).map_err(|e| ev.root_error(e, "power calibration"))
    } else {
        let f = |t: f64| ev.scalar(t.exp(), lambda0, |s| s.state.p - targets.p);
        let (lo, hi) = log_bracket(&f, LOG_LAMBDA_RANGE).ok_or_else(|| {
            Error::NotAchievable(format!("power {} out of reach on the full plane", targets.p))
        })?;
        find_root_1d(f, lo, hi, tol)
            .map(f64::exp)
            .map_err(|e| ev.root_error(e, "power calibration"))
    }
}

/// Walks outward from `t = 0` in unit steps of a decreasing function until
/// the sign flips. A failed evaluation (NaN) hands over to [`edge_bracket`].
fn log_bracket(f: &impl Fn(f64) -> f64, range: (f64, f64)) -> Option<(f64, f64)> {
    let f0 = f(0.0);
    if f0.is_nan() {
        return None;
    }
    if f0 == 0.0 {
        return Some((0.0, 0.0));
    }
    let dir = if f0 > 0.0 { 1.0 } else { -1.0 };
    let mut prev = 0.0;
    let mut t = dir;
    while t >= range.0 && t <= range.1 {
        let v = f(t);
        if v.is_nan() {
            return edge_bracket(f, prev, t, f0.signum());
        }
        if v.signum() != f0.signum() {
            return Some(if dir > 0.0 { (prev, t) } else { (t, prev) });
        }
        prev = t;
        t += dir;
    }
    None
}

/// Bisects towards the edge of the region where `f` evaluates, between a
/// good point `good` and a failing point `bad`, looking for a sign opposite
/// to `sign`.
fn edge_bracket(f: &impl Fn(f64) -> f64, good: f64, bad: f64, sign: f64) -> Option<(f64, f64)> {
    let (mut good, mut bad) = (good, bad);
    for _ in 0..60 {
        let mid = 0.5 * (good + bad);
        let v = f(mid);
        if v.is_nan() {
            bad = mid;
        } else if v.signum() != sign {
            return Some((good.min(mid), good.max(mid)));
        } else {
            good = mid;
        }
        if (good - bad).abs() < 1e-12 {
            break;
        }
    }
    None
}

/// `lambda0` with `eta(lambda, lambda0) = eta*`; the active fraction
/// decreases in `lambda0`.
fn solve_lambda0(ev: &Evaluator, lambda: f64, targets: &Targets) -> Result<f64> {
    let f = |t: f64| ev.scalar(lambda, t.exp(), |s| s.eta - targets.eta);
    let (lo, hi) = log_bracket(&f, LOG_LAMBDA0_RANGE).ok_or_else(|| {
        Error::NotAchievable(format!("activity {} out of reach", targets.eta))
    })?;
    find_root_1d(f, lo, hi, 1e-3 * ev.opts.tol)
        .map(f64::exp)
        .map_err(|e| ev.root_error(e, "activity calibration"))
}

/// Newton coordinates: `log lambda0` and either `log lambda` (full plane) or
/// `lambda` (disk).
fn to_factors(disk: bool, x: [f64; 2]) -> (f64, f64) {
    let lambda = if disk { x[0] } else { x[0].exp() };
    (lambda, x[1].exp())
}

fn newton(ev: &Evaluator, targets: &Targets) -> Result<(f64, f64)> {
    let disk = is_disk(ev);
    let residual = |x: [f64; 2]| -> Result<[f64; 2]> {
        let (l, l0) = to_factors(disk, x);
        let s = ev.solve(l, l0)?;
        Ok([s.state.p - targets.p, s.eta - targets.eta])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());

    // start: the unit-activity factor, then a hard threshold that would
    // leave eta* active if the state stayed put
    let lambda_start = solve_lambda(ev, 0.0, &Targets { eta: 1.0, ..*targets })?;
    let sol = ev.solve(lambda_start, 0.0)?;
    let (kappa, v) = (sol.state.kappa, sol.state.lambda_rs);
    let a = 1.0 + kappa * lambda_start;
    let lambda0_start = (v * (1.0 / targets.eta).ln() / (kappa * a.max(1e-3))).max(1e-12);
    let mut x = [
        if disk { lambda_start } else { lambda_start.max(1e-12).ln() },
        lambda0_start.ln(),
    ];
    let mut r = residual(x)?;
    for _ in 0..ev.opts.max_newton {
        if norm(r) <= ev.opts.tol {
            return Ok(to_factors(disk, x));
        }
        let h = ev.opts.fd_step;
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let step = if disk && k == 0 { h * x[0].abs().max(1.0) } else { h };
            let mut xp = x;
            xp[k] += step;
            let rp = residual(xp)?;
            for i in 0..2 {
                jac[i][k] = (rp[i] - r[i]) / step;
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 1e-300) || !det.is_finite() {
            return Err(Error::SingularSystem("calibration Jacobian".into()));
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = [x[0] + t * dx[0], x[1] + t * dx[1]];
            if let Ok(rt) = residual(trial) {
                if norm(rt) < norm(r) {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, rn)) = accepted else {
            return Err(Error::NotAchievable("Newton line search stalled".into()));
        };
        x = xn;
        r = rn;
    }
    if norm(r) <= ev.opts.tol {
        Ok(to_factors(disk, x))
    } else {
        Err(Error::NotAchievable(format!(
            "Newton calibration left residual {:e}",
            norm(r)
        )))
    }
}

/// Outer bracketing on `log lambda0` with the power matched exactly inside.
fn nested(ev: &Evaluator, targets: &Targets) -> Result<(f64, f64)> {
    let inner = |t: f64| -> Result<(f64, f64)> {
        let lambda0 = t.exp();
        let lambda = solve_lambda(ev, lambda0, targets)?;
        let s = ev.solve(lambda, lambda0)?;
        Ok((lambda, s.eta - targets.eta))
    };
    // scan for a sign change of the activity error along log lambda0
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    let steps = 84;
    for i in 0..=steps {
        let t = LOG_LAMBDA0_RANGE.0
            + (LOG_LAMBDA0_RANGE.1 - LOG_LAMBDA0_RANGE.0) * i as f64 / steps as f64;
        let Ok((_, g)) = inner(t) else { continue };
        if let Some((tp, gp)) = prev {
            if gp.signum() != g.signum() {
                bracket = Some((tp, t));
                break;
            }
        }
        prev = Some((t, g));
    }
    let Some((lo, hi)) = bracket else {
        return Err(Error::NotAchievable(format!(
            "no factors reach p = {}, eta = {}",
            targets.p, targets.eta
        )));
    };
    let f = |t: f64| match inner(t) {
        Ok((_, g)) => g,
        Err(err) => {
            ev.first_error.borrow_mut().get_or_insert(err);
            f64::NAN
        }
    };
    let t = find_root_1d(f, lo, hi, 1e-3 * ev.opts.tol)
        .map_err(|e| ev.root_error(e, "nested calibration"))?;
    let (lambda, _) = inner(t)?;
    Ok((lambda, t.exp()))
}

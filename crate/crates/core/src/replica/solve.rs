use crate::error::{Error, Result};
use crate::numerics::QuadratureRule;
use crate::penalty::{ScalarPenalty, Support};
use crate::spectral::{self, RTransform};

use super::{
    closed_form_moments, fixed_point_update, fixed_point_update_quadrature, generic_update,
    quadrature_moments, ReplicaSolution, ReplicaState, SystemParams,
};

/// Which evaluation of the decoupled moments drives the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMethod {
    #[default]
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Initial damping `theta` in `(0, 1]`; halved on detected oscillation.
    pub damping: f64,
    /// Convergence threshold on `max(|p_new - p|, |chi_new - chi|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial `(chi, p)`; `None` means `(1, lambda_s)`.
    pub init: Option<(f64, f64)>,
    pub method: UpdateMethod,
    /// Retry from a grid of starting points when the first run fails.
    pub multistart: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-12,
            max_iter: 100_000,
            init: None,
            method: UpdateMethod::ClosedForm,
            multistart: true,
        }
    }
}

/// A fixed point reported without penalty-specific thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointSummary {
    pub chi: f64,
    pub p: f64,
    pub lambda_rs: f64,
    pub kappa: f64,
    pub distortion: f64,
    pub eta: f64,
    pub residual: f64,
    pub iterations: usize,
}

const OSCILLATION_RUN: usize = 5;
const MIN_DAMPING: f64 = 1.0 / 1024.0;
const DISTINCT: f64 = 1e-6;

struct Converged {
    chi: f64,
    p: f64,
    residual: f64,
    iterations: usize,
}

/// Damped Picard iteration `state <- (1 - theta) state + theta update(state)`.
fn iterate<F>(mut update: F, init: (f64, f64), opts: &SolveOptions) -> Result<Converged>
where
    F: FnMut(f64, f64) -> Result<(f64, f64)>,
{
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping {}", opts.damping)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol {}", opts.tol)));
    }
    let (mut chi, mut p) = init;
    let mut theta = opts.damping;
    let mut last_sign = 0.0f64;
    let mut alternations = 0usize;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (p_new, chi_new) = update(chi, p)?;
        if !(p_new.is_finite() && chi_new.is_finite()) {
            return Err(Error::NonFinite(format!(
                "update from chi = {chi}, p = {p} gave ({p_new}, {chi_new})"
            )));
        }
        let (dp, dchi) = (p_new - p, chi_new - chi);
        residual = dp.abs().max(dchi.abs());
        if residual <= opts.tol {
            return Ok(Converged {
                chi: chi_new,
                p: p_new,
                residual,
                iterations: it,
            });
        }
        let sign = if dp.abs() >= dchi.abs() { dp.signum() } else { dchi.signum() };
        if sign == -last_sign {
            alternations += 1;
            if alternations >= OSCILLATION_RUN && theta > MIN_DAMPING {
                theta *= 0.5;
                alternations = 0;
            }
        } else {
            alternations = 0;
        }
        last_sign = sign;
        chi += theta * dchi;
        p += theta * dp;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
        chi,
        p,
    })
}

fn start_grid(lambda_s: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(8);
    for chi in [0.1, 1.0, 10.0, 100.0] {
        for p in [0.1 * lambda_s, 10.0 * lambda_s] {
            out.push((chi, p));
        }
    }
    out
}

fn finish(params: &SystemParams, c: Converged, method: UpdateMethod) -> Result<ReplicaSolution> {
    let state = ReplicaState::new(params, c.chi, c.p)?;
    let moments = match method {
        UpdateMethod::ClosedForm => closed_form_moments(&params.penalty, state.lambda_rs, state.kappa),
        UpdateMethod::Quadrature => quadrature_moments(
            &params.penalty,
            state.lambda_rs,
            state.kappa,
            &QuadratureRule::default_panels(),
        )?,
    };
    let distortion = spectral::asymptotic_distortion(
        params.rtransform.as_ref(),
        state.chi,
        state.p,
        params.lambda_s,
        params.alpha,
    )?;
    let eta = moments.active.clamp(0.0, 1.0);
    let papr = match params.penalty.support {
        Support::Disk { peak_power } if state.p > 0.0 => peak_power / state.p,
        _ => f64::INFINITY,
    };
    Ok(ReplicaSolution {
        state,
        distortion,
        eta,
        papr,
        residual: c.residual,
        iterations: c.iterations,
        alternatives: Vec::new(),
    })
}

fn run_from(params: &SystemParams, init: (f64, f64), opts: &SolveOptions) -> Result<ReplicaSolution> {
    let converged = iterate(
        |chi, p| {
            let state = ReplicaState::new(params, chi, p)?;
            match opts.method {
                UpdateMethod::ClosedForm => fixed_point_update(params, &state),
                UpdateMethod::Quadrature => fixed_point_update_quadrature(params, &state),
            }
        },
        init,
        opts,
    )?;
    finish(params, converged, opts.method)
}

fn summary(s: &ReplicaSolution) -> FixedPointSummary {
    FixedPointSummary {
        chi: s.state.chi,
        p: s.state.p,
        lambda_rs: s.state.lambda_rs,
        kappa: s.state.kappa,
        distortion: s.distortion,
        eta: s.eta,
        residual: s.residual,
        iterations: s.iterations,
    }
}

fn distinct(a: &ReplicaSolution, b: &ReplicaSolution) -> bool {
    (a.state.chi - b.state.chi).abs().max((a.state.p - b.state.p).abs()) > DISTINCT
}

/// Solves the fixed point by damped iteration from `opts.init`.
///
/// When that run fails and `opts.multistart` is set, eight deterministic
/// starts on a `(chi, p)` log-grid are tried; among the distinct fixed points
/// found, the one with the smallest distortion is returned and the others are
/// attached as `alternatives`.
pub fn solve_fixed_point(params: &SystemParams, opts: &SolveOptions) -> Result<ReplicaSolution> {
    let init = opts.init.unwrap_or((1.0, params.lambda_s));
    let first = run_from(params, init, opts);
    match first {
        Ok(sol) => Ok(sol),
        Err(err @ (Error::NoConvergence { .. } | Error::InvalidState(_) | Error::NonFinite(_)))
            if opts.multistart =>
        {
            let found = collect_distinct(
                start_grid(params.lambda_s)
                    .into_iter()
                    .filter_map(|start| run_from(params, start, opts).ok()),
            );
            pick_best(found).ok_or(err)
        }
        Err(err) => Err(err),
    }
}

fn collect_distinct(solutions: impl Iterator<Item = ReplicaSolution>) -> Vec<ReplicaSolution> {
    let mut found: Vec<ReplicaSolution> = Vec::new();
    for sol in solutions {
        if found.iter().all(|f| distinct(f, &sol)) {
            found.push(sol);
        }
    }
    found
}

fn pick_best(mut found: Vec<ReplicaSolution>) -> Option<ReplicaSolution> {
    if found.is_empty() {
        return None;
    }
    found.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
    let mut best = found.remove(0);
    best.alternatives = found.iter().map(summary).collect();
    Some(best)
}

/// Runs the iteration from the default start and every grid start, returning
/// each distinct fixed point reached (sorted by distortion).
pub fn explore_fixed_points(
    params: &SystemParams,
    opts: &SolveOptions,
) -> Vec<FixedPointSummary> {
    let init = opts.init.unwrap_or((1.0, params.lambda_s));
    let starts = std::iter::once(init).chain(start_grid(params.lambda_s));
    let mut found = collect_distinct(starts.filter_map(|s| run_from(params, s, opts).ok()));
    found.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
    found.iter().map(summary).collect()
}

/// Fixed point for an arbitrary isotropic penalty, moments by quadrature.
pub fn solve_generic(
    rtransform: &dyn RTransform,
    lambda_s: f64,
    penalty: &dyn ScalarPenalty,
    opts: &SolveOptions,
) -> Result<FixedPointSummary> {
    let rule = QuadratureRule::default_panels();
    let init = opts.init.unwrap_or((1.0, lambda_s));
    let c = iterate(
        |chi, p| generic_update(rtransform, lambda_s, penalty, chi, p, &rule),
        init,
        opts,
    )?;
    let lambda_rs = spectral::lambda_rs(rtransform, c.chi, c.p, lambda_s)?;
    let kappa = spectral::kappa(rtransform, c.chi)?;
    let m = quadrature_moments(penalty, lambda_rs, kappa, &rule)?;
    let alpha = rtransform.load();
    Ok(FixedPointSummary {
        chi: c.chi,
        p: c.p,
        lambda_rs,
        kappa,
        distortion: spectral::asymptotic_distortion(rtransform, c.chi, c.p, lambda_s, alpha)?,
        eta: m.active.clamp(0.0, 1.0),
        residual: c.residual,
        iterations: c.iterations,
    })
}

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::RandomStream;
use crate::penalty::{penalty_value, prox, PenaltySpec, Support};

use super::{precode_rzf, PrecodeProblem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Starting point of coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CcdInit {
    Zero,
    /// RZF with `max(lambda, 1e-6)`, clipped to the support.
    #[default]
    Rzf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcdOptions {
    pub init: CcdInit,
    pub max_sweeps: usize,
    /// Stop once a sweep lowers the objective by less than this fraction.
    pub tol: f64,
    /// Number of starting points tried; the best objective wins. Beyond the
    /// configured init come the other init and random supports.
    pub restarts: usize,
    /// Sweeps between recomputations of the residual from scratch.
    pub refresh_every: usize,
}

impl Default for CcdOptions {
    fn default() -> Self {
        Self {
            init: CcdInit::Rzf,
            max_sweeps: 500,
            tol: 1e-10,
            restarts: 1,
            refresh_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeResult {
    pub x: DVector<Complex64>,
    /// `||H x - s||^2 + sum_j u(x_j)` recomputed from scratch.
    pub objective: f64,
    /// The incrementally tracked objective at exit.
    pub tracked_objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Columns with zero norm, left at zero.
    pub degenerate_columns: Vec<usize>,
    /// Largest objective increase over any single coordinate step.
    pub max_step_increase: f64,
    /// Largest `||r - (s - H x)|| / ||s||` seen at a refresh.
    pub residual_drift: f64,
}

const RZF_FLOOR: f64 = 1e-6;

fn clip(spec: &PenaltySpec, v: Complex64) -> Complex64 {
    match spec.support {
        Support::Disk { peak_power } if v.norm_sqr() > peak_power => v * (peak_power.sqrt() / v.norm()),
        _ => v,
    }
}

fn total_penalty(spec: &PenaltySpec, x: &DVector<Complex64>) -> Result<f64> {
    x.iter().map(|v| penalty_value(spec, *v)).sum()
}

fn initial_point(
    problem: &PrecodeProblem,
    init: CcdInit,
    rzf: &mut Option<DVector<Complex64>>,
) -> Result<DVector<Complex64>> {
    match init {
        CcdInit::Zero => Ok(DVector::from_element(problem.n(), ZERO)),
        CcdInit::Rzf => {
            if rzf.is_none() {
                let lambda = problem.penalty.lambda.max(RZF_FLOOR);
                *rzf = Some(precode_rzf(&problem.h, &problem.s, lambda)?);
            }
            let x = rzf.as_ref().expect("set above");
            Ok(x.map(|v| clip(&problem.penalty, v)))
        }
    }
}

/// Cyclic coordinate descent with exact prox steps.
///
/// Keeps `r = s - H x`. Coordinate `j` moves to
/// `prox(x_j + h_j^H r / ||h_j||^2, 1 / ||h_j||^2)`, the exact minimizer of
/// the objective along that coordinate, so the objective never increases.
/// `stream` seeds the random-support restarts only.
pub fn precode_ccd(
    problem: &PrecodeProblem,
    opts: &CcdOptions,
    stream: &mut RandomStream,
) -> Result<PrecodeResult> {
    if opts.restarts == 0 || opts.refresh_every == 0 || !(opts.tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("{opts:?}")));
    }
    let mut rzf = None;
    let other = match opts.init {
        CcdInit::Zero => CcdInit::Rzf,
        CcdInit::Rzf => CcdInit::Zero,
    };
    let mut best: Option<PrecodeResult> = None;
    for attempt in 0..opts.restarts {
        let x0 = match attempt {
            0 => initial_point(problem, opts.init, &mut rzf)?,
            1 => initial_point(problem, other, &mut rzf)?,
            _ => {
                let mut x = initial_point(problem, CcdInit::Rzf, &mut rzf)?;
                for v in x.iter_mut() {
                    if stream.uniform() < 0.5 {
                        *v = ZERO;
                    }
                }
                x
            }
        };
        let run = descend(problem, opts, x0)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn descend(problem: &PrecodeProblem, opts: &CcdOptions, mut x: DVector<Complex64>) -> Result<PrecodeResult> {
    let (k, n) = (problem.k(), problem.n());
    let spec = &problem.penalty;
    let h = problem.h.as_slice();
    let col = |j: usize| &h[j * k..(j + 1) * k];
    let norms: Vec<f64> = (0..n).map(|j| col(j).iter().map(|v| v.norm_sqr()).sum()).collect();
    let degenerate: Vec<usize> = (0..n).filter(|&j| norms[j] == 0.0).collect();
    for &j in &degenerate {
        x[j] = ZERO;
    }
    let s_norm = problem.s.norm().max(f64::MIN_POSITIVE);
    let fresh_residual = |x: &DVector<Complex64>| -> Vec<Complex64> {
        (&problem.s - &problem.h * x).iter().copied().collect()
    };
    let mut r = fresh_residual(&x);
    let mut objective = r.iter().map(|v| v.norm_sqr()).sum::<f64>() + total_penalty(spec, &x)?;
    let mut max_step_increase = 0.0f64;
    let mut drift = 0.0f64;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = objective;
        for j in 0..n {
            let nrm = norms[j];
            if nrm == 0.0 {
                continue;
            }
            let hj = col(j);
            let corr: Complex64 = hj.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
            let c = 1.0 / nrm;
            let old = x[j];
            let z = old + corr * c;
            let new = prox(spec, z, c);
            if new == old {
                continue;
            }
            let delta = new - old;
            for (ri, hi) in r.iter_mut().zip(hj) {
                *ri -= hi * delta;
            }
            let change = nrm * ((new - z).norm_sqr() - (old - z).norm_sqr())
                + penalty_value(spec, new)?
                - penalty_value(spec, old)?;
            max_step_increase = max_step_increase.max(change);
            objective += change;
            x[j] = new;
        }
        if sweeps % opts.refresh_every == 0 {
            let exact = fresh_residual(&x);
            let gap = exact
                .iter()
                .zip(&r)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            drift = drift.max(gap / s_norm);
            r = exact;
            objective = r.iter().map(|v| v.norm_sqr()).sum::<f64>() + total_penalty(spec, &x)?;
        }
        if before - objective <= opts.tol * before.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let exact = problem.residual_energy(&x) + total_penalty(spec, &x)?;
    Ok(PrecodeResult {
        x,
        objective: exact,
        tracked_objective: objective,
        sweeps,
        converged,
        degenerate_columns: degenerate,
        max_step_increase,
        residual_drift: drift,
    })
}

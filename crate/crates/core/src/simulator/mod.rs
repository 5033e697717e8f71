//! Finite-size Monte Carlo over i.i.d. Gaussian channels.
//!
//! A [`PrecodeProblem`] draws `H` with `CN(0, 1/n)` entries and
//! `s ~ CN(0, lambda_s I_k)`. [`precode_ccd`] minimizes
//! `||H x - s||^2 + sum_j u(x_j)` by cyclic coordinate descent with exact
//! scalar prox steps; [`precode_rzf`] and [`random_tas_rzf`] give the linear
//! baselines. [`monte_carlo`] runs independent trials in parallel, each on
//! its own random substream, and reduces them in trial order.

mod ccd;
mod montecarlo;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::RandomStream;
use crate::penalty::PenaltySpec;

pub use ccd::{precode_ccd, CcdInit, CcdOptions, PrecodeResult};
pub use montecarlo::{monte_carlo, MonteCarloConfig, MonteCarloReport, Precoder, HISTOGRAM_BINS};

/// Default magnitude below which an entry counts as inactive.
pub const ZERO_EPS: f64 = 1e-9;

/// One finite-size instance: `k x n` channel, `k` data symbols, penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeProblem {
    pub h: DMatrix<Complex64>,
    pub s: DVector<Complex64>,
    pub penalty: PenaltySpec,
}

impl PrecodeProblem {
    pub fn new(h: DMatrix<Complex64>, s: DVector<Complex64>, penalty: PenaltySpec) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::InvalidArgument("empty channel matrix".into()));
        }
        if h.nrows() != s.len() {
            return Err(Error::InvalidArgument(format!(
                "channel has {} rows but data has {} entries",
                h.nrows(),
                s.len()
            )));
        }
        Ok(Self { h, s, penalty })
    }

    /// Transmit antennas.
    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    /// Users.
    pub fn k(&self) -> usize {
        self.h.nrows()
    }

    /// `||H x - s||^2`.
    pub fn residual_energy(&self, x: &DVector<Complex64>) -> f64 {
        (&self.h * x - &self.s).norm_squared()
    }
}

/// Draws `H` column by column, then `s`, from `stream`.
pub fn generate_problem(
    n: usize,
    k: usize,
    lambda_s: f64,
    penalty: PenaltySpec,
    stream: &mut RandomStream,
) -> Result<PrecodeProblem> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!("n = {n}, k = {k}")));
    }
    if !(lambda_s > 0.0 && lambda_s.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda_s = {lambda_s}")));
    }
    let var = 1.0 / n as f64;
    let h = DMatrix::from_fn(k, n, |_, _| Complex64::new(0.0, 0.0));
    let mut h = h;
    for v in h.iter_mut() {
        *v = stream.complex_gaussian(var);
    }
    let s = DVector::from_fn(k, |_, _| stream.complex_gaussian(lambda_s));
    PrecodeProblem::new(h, s, penalty)
}

/// RZF precoder `H^H (H H^H + lambda I)^-1 s`.
///
/// The smaller Gram matrix is factored: for `n < k` the equivalent
/// `(H^H H + lambda I)^-1 H^H s` is used. The solve is checked by its
/// normal-equation residual.
pub fn precode_rzf(
    h: &DMatrix<Complex64>,
    s: &DVector<Complex64>,
    lambda: f64,
) -> Result<DVector<Complex64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
    }
    let (k, n) = h.shape();
    let hh = h.adjoint();
    let shift = Complex64::new(lambda, 0.0);
    let singular = || Error::SingularSystem(format!("{k} x {n} channel with lambda = {lambda}"));
    if n < k {
        let mut gram = &hh * h;
        for i in 0..n {
            gram[(i, i)] += shift;
        }
        let rhs = &hh * s;
        let chol = gram.clone().cholesky().ok_or_else(singular)?;
        let x = chol.solve(&rhs);
        check_residual(&gram, &x, &rhs).then_some(x).ok_or_else(singular)
    } else {
        let mut gram = h * &hh;
        for i in 0..k {
            gram[(i, i)] += shift;
        }
        let chol = gram.clone().cholesky().ok_or_else(singular)?;
        let y = chol.solve(s);
        if check_residual(&gram, &y, s) {
            Ok(hh * y)
        } else {
            Err(singular())
        }
    }
}

fn check_residual(a: &DMatrix<Complex64>, x: &DVector<Complex64>, b: &DVector<Complex64>) -> bool {
    let r = (a * x - b).norm();
    r.is_finite() && r <= 1e-10 * b.norm().max(f64::MIN_POSITIVE)
}

/// RZF on `round(eta_r n)` columns drawn uniformly from `stream`, embedded
/// with exact zeros on the unused antennas.
pub fn random_tas_rzf(
    problem: &PrecodeProblem,
    eta_r: f64,
    lambda: f64,
    stream: &mut RandomStream,
) -> Result<PrecodeResult> {
    let n = problem.n();
    let m = (eta_r * n as f64).round() as usize;
    if !(1..=n).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "eta_r = {eta_r} selects {m} of {n} antennas"
        )));
    }
    // partial Fisher-Yates
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + stream.below(n - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..m].to_vec();
    chosen.sort_unstable();
    let sub = problem.h.select_columns(chosen.iter());
    let xs = precode_rzf(&sub, &problem.s, lambda)?;
    let mut x = DVector::from_element(n, Complex64::new(0.0, 0.0));
    for (v, &j) in xs.iter().zip(&chosen) {
        x[j] = *v;
    }
    let objective = problem.residual_energy(&x) + lambda * x.norm_squared();
    Ok(PrecodeResult {
        tracked_objective: objective,
        objective,
        x,
        sweeps: 0,
        converged: true,
        degenerate_columns: Vec::new(),
        max_step_increase: 0.0,
        residual_drift: 0.0,
    })
}

/// Per-trial figures of merit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    /// `||H x - s||^2 / k`.
    pub distortion: f64,
    /// `||x||^2 / n`.
    pub power: f64,
    /// Fraction of entries with `|x_j| > zero_eps`.
    pub eta: f64,
    /// `max_j |x_j|^2 / power`, zero for `x = 0`.
    pub papr: f64,
}

pub fn measure(x: &DVector<Complex64>, problem: &PrecodeProblem, zero_eps: f64) -> TrialMetrics {
    let n = problem.n() as f64;
    let power = x.norm_squared() / n;
    let active = x.iter().filter(|v| v.norm() > zero_eps).count();
    let peak = x.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    TrialMetrics {
        distortion: problem.residual_energy(x) / problem.k() as f64,
        power,
        eta: active as f64 / n,
        papr: if power > 0.0 { peak / power } else { 0.0 },
    }
}

#[cfg(test)]
mod tests;

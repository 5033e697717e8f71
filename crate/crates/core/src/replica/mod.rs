//! Replica-symmetric fixed point of the LSE precoder.
//!
//! For a channel ensemble with R-transform `R` and load `alpha`, the state
//! `(chi, p)` determines the decoupled input variance `lambda_rs`, the prox
//! weight `kappa = 1 / R(-chi)` and the decoupled symbol
//! `x = prox(s, kappa)`, `s ~ CN(0, lambda_rs)`. A fixed point satisfies
//!
//! ```text
//! p   = E|x|^2
//! chi = kappa E Re{x* s} / lambda_rs
//! ```
//!
//! and yields the distortion, the active-antenna fraction `P(x != 0)` and,
//! on a disk support of peak power `P`, the PAPR `P / p`.

mod calibrate;
mod moments;
mod solve;
mod tas;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{QuadratureRule, RandomStream};
use crate::penalty::{prox, PenaltySpec, ScalarPenalty, ThresholdSet};
use crate::spectral::{self, MarcenkoPastur, RTransform};

pub use calibrate::{calibrate, CalibrateOptions, Calibration, Targets};
pub use moments::{closed_form_moments, quadrature_moments, DecoupledMoments};
pub use solve::{
    explore_fixed_points, solve_fixed_point, solve_generic, FixedPointSummary, SolveOptions,
    UpdateMethod,
};
pub use tas::{random_tas_baseline, random_tas_equivalent_fraction};

/// System-level inputs of the fixed point.
#[derive(Debug, Clone)]
pub struct SystemParams {
    pub alpha: f64,
    pub lambda_s: f64,
    pub penalty: PenaltySpec,
    pub rtransform: Arc<dyn RTransform>,
}

impl SystemParams {
    pub fn new(
        alpha: f64,
        lambda_s: f64,
        penalty: PenaltySpec,
        rtransform: Arc<dyn RTransform>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::NonPositiveAlpha(alpha));
        }
        if !(lambda_s > 0.0 && lambda_s.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda_s = {lambda_s}")));
        }
        let load = rtransform.load();
        if (load - alpha).abs() > 1e-12 * alpha {
            return Err(Error::InvalidArgument(format!(
                "R-transform load {load} differs from alpha {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            lambda_s,
            penalty,
            rtransform,
        })
    }

    /// I.i.d. Gaussian channel (Marcenko–Pastur Gramian).
    pub fn iid(alpha: f64, lambda_s: f64, penalty: PenaltySpec) -> Result<Self> {
        let r = MarcenkoPastur::new(alpha)?;
        Self::new(alpha, lambda_s, penalty, Arc::new(r))
    }

    pub fn with_penalty(&self, penalty: PenaltySpec) -> Self {
        Self {
            penalty,
            ..self.clone()
        }
    }
}

/// Derived quantities at a point `(chi, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaState {
    pub chi: f64,
    pub p: f64,
    pub lambda_rs: f64,
    pub kappa: f64,
    pub thresholds: ThresholdSet,
}

impl ReplicaState {
    pub fn new(params: &SystemParams, chi: f64, p: f64) -> Result<Self> {
        if !(chi >= 0.0 && p >= 0.0 && chi.is_finite() && p.is_finite()) {
            return Err(Error::InvalidState(format!("chi = {chi}, p = {p}")));
        }
        let r = params.rtransform.as_ref();
        let lambda_rs = spectral::lambda_rs(r, chi, p, params.lambda_s)?;
        let kappa = spectral::kappa(r, chi)?;
        Ok(Self {
            chi,
            p,
            lambda_rs,
            kappa,
            thresholds: params.penalty.thresholds(kappa),
        })
    }
}

/// Converged fixed point with its derived figures of merit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSolution {
    pub state: ReplicaState,
    pub distortion: f64,
    pub eta: f64,
    /// `P / p` on a disk, infinite on the full plane.
    pub papr: f64,
    /// `max(|p_new - p|, |chi_new - chi|)` of the last undamped update.
    pub residual: f64,
    pub iterations: usize,
    /// Other distinct fixed points found by the multi-start fallback.
    pub alternatives: Vec<FixedPointSummary>,
}

impl ReplicaSolution {
    pub fn distortion_db(&self) -> f64 {
        10.0 * self.distortion.log10()
    }

    pub fn papr_db(&self) -> f64 {
        10.0 * self.papr.log10()
    }
}

/// `(p, chi)` map shared by both update paths: `p_new = E|x|^2` and
/// `chi_new = E Re{x* s} / (lambda_rs R(-chi))`.
fn next_point(state: &ReplicaState, m: &DecoupledMoments) -> (f64, f64) {
    (m.power, state.kappa * m.cross / state.lambda_rs)
}

/// One undamped update using the closed-form moments of the
/// quadratic-plus-zero-norm family. Returns `(p_new, chi_new)`.
pub fn fixed_point_update(params: &SystemParams, state: &ReplicaState) -> Result<(f64, f64)> {
    let m = closed_form_moments(&params.penalty, state.lambda_rs, state.kappa);
    Ok(next_point(state, &m))
}

/// The same update evaluated by radial quadrature of the prox, as for a
/// generic penalty.
pub fn fixed_point_update_quadrature(
    params: &SystemParams,
    state: &ReplicaState,
) -> Result<(f64, f64)> {
    let rule = QuadratureRule::default_panels();
    let m = quadrature_moments(&params.penalty, state.lambda_rs, state.kappa, &rule)?;
    Ok(next_point(state, &m))
}

/// Update for an arbitrary isotropic penalty, by quadrature.
pub fn generic_update(
    rtransform: &dyn RTransform,
    lambda_s: f64,
    penalty: &dyn ScalarPenalty,
    chi: f64,
    p: f64,
    rule: &QuadratureRule,
) -> Result<(f64, f64)> {
    let lambda_rs = spectral::lambda_rs(rtransform, chi, p, lambda_s)?;
    let kappa = spectral::kappa(rtransform, chi)?;
    let m = quadrature_moments(penalty, lambda_rs, kappa, rule)?;
    Ok((m.power, kappa * m.cross / lambda_rs))
}

/// Draws from the decoupled law `prox(s, kappa)`, `s ~ CN(0, lambda_rs)`.
pub fn decoupled_sample(
    state: &ReplicaState,
    penalty: &PenaltySpec,
    stream: &mut RandomStream,
    count: usize,
) -> Vec<Complex64> {
    (0..count)
        .map(|_| prox(penalty, stream.complex_gaussian(state.lambda_rs), state.kappa))
        .collect()
}

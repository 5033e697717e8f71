//! R-transforms of the Gramian `H^H H` spectrum and the derivative
//! combinations the replica-symmetric fixed point is built from.
//!
//! Only closed forms are shipped. Each ensemble supplies `R(-chi)` and its
//! `chi`-derivative analytically; finite differences are used as a test
//! oracle only.

use std::fmt;

use crate::error::{Error, Result};

/// R-transform of an asymptotic Gramian eigenvalue law, evaluated on the
/// negative real axis.
pub trait RTransform: fmt::Debug + Send + Sync {
    /// `R_D(-chi)` for `chi >= 0`.
    fn evaluate(&self, chi: f64) -> f64;
    /// `d/dchi [R_D(-chi)]`.
    fn derivative(&self, chi: f64) -> f64;
    /// Load factor `alpha = k / n` of the ensemble.
    fn load(&self) -> f64;
    fn label(&self) -> &str;
}

/// I.i.d. channel with entries of variance `1/n`: the Gramian follows the
/// Marcenko–Pastur law and `R_D(w) = alpha / (1 - w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcenkoPastur {
    alpha: f64,
}

impl MarcenkoPastur {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self { alpha })
        } else {
            Err(Error::NonPositiveAlpha(alpha))
        }
    }
}

/// Shorthand for [`MarcenkoPastur::new`].
pub fn marcenko_pastur(alpha: f64) -> Result<MarcenkoPastur> {
    MarcenkoPastur::new(alpha)
}

impl RTransform for MarcenkoPastur {
    fn evaluate(&self, chi: f64) -> f64 {
        self.alpha / (1.0 + chi)
    }

    fn derivative(&self, chi: f64) -> f64 {
        -self.alpha / ((1.0 + chi) * (1.0 + chi))
    }

    fn load(&self) -> f64 {
        self.alpha
    }

    fn label(&self) -> &str {
        "marcenko-pastur"
    }
}

/// Prox weight `kappa = 1 / R_D(-chi)` of the decoupled scalar problem.
pub fn kappa(r: &dyn RTransform, chi: f64) -> Result<f64> {
    let value = r.evaluate(chi);
    if value > 0.0 && value.is_finite() {
        Ok(1.0 / value)
    } else {
        Err(Error::InvalidState(format!("R(-chi) = {value} at chi = {chi}")))
    }
}

/// Variance of the decoupled Gaussian input,
/// `R^-2 * d/dchi[(lambda_s chi - p) R(-chi)]`, expanded by the product rule.
pub fn lambda_rs(r: &dyn RTransform, chi: f64, p: f64, lambda_s: f64) -> Result<f64> {
    let value = r.evaluate(chi);
    if !(value > 0.0) {
        return Err(Error::InvalidState(format!("R(-chi) = {value} at chi = {chi}")));
    }
    let slope = lambda_s * value + (lambda_s * chi - p) * r.derivative(chi);
    let out = slope / (value * value);
    if out > 0.0 && out.is_finite() {
        Ok(out)
    } else {
        Err(Error::InvalidState(format!(
            "lambda_rs = {out} at chi = {chi}, p = {p}"
        )))
    }
}

/// Asymptotic per-user distortion
/// `lambda_s + alpha^-1 d/dchi[(p - lambda_s chi) chi R(-chi)]`.
///
/// Negative values down to `-1e-9` are rounding and clamp to zero.
pub fn asymptotic_distortion(
    r: &dyn RTransform,
    chi: f64,
    p: f64,
    lambda_s: f64,
    alpha: f64,
) -> Result<f64> {
    let value = r.evaluate(chi);
    let slope = r.derivative(chi);
    // d/dchi [(p chi - lambda_s chi^2) R] = (p - 2 lambda_s chi) R + (p chi - lambda_s chi^2) R'
    let d = (p - 2.0 * lambda_s * chi) * value + (p * chi - lambda_s * chi * chi) * slope;
    let out = lambda_s + d / alpha;
    if !out.is_finite() || out < -1e-9 {
        return Err(Error::InvalidState(format!(
            "distortion = {out} at chi = {chi}, p = {p}"
        )));
    }
    Ok(out.max(0.0))
}

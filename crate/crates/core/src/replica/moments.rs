//! Expectations of the decoupled precoded symbol `x = prox(s, kappa)` with
//! `s ~ CN(0, lambda_rs)`.

use num_complex::Complex64;

use crate::error::Result;
use crate::numerics::{q_function, radial_expectation, QuadratureRule};
use crate::penalty::{PenaltySpec, ScalarPenalty, Support};

/// `E|x|^2`, `E Re{x* s}` and `P(x != 0)` of the decoupled symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupledMoments {
    pub power: f64,
    pub cross: f64,
    pub active: f64,
}

/// `int_t^inf r^2 dP(r) = (v + t^2) e^{-t^2/v}` for the radial law of CN(0, v).
fn second_moment_tail(v: f64, t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        (v + t * t) * (-t * t / v).exp()
    }
}

fn survival(v: f64, t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        (-t * t / v).exp()
    }
}

/// Closed forms for the quadratic-plus-zero-norm family.
///
/// Full plane: hard thresholding at `tau` followed by shrinkage. Disk: the
/// shrinkage band `[tau, max(tau, tau_tilde)]` contributes `Xi / a` and
/// `Xi / a^2`, the peak band `[tau_hat, inf)` contributes through the
/// Gaussian first absolute moment tail.
pub fn closed_form_moments(spec: &PenaltySpec, lambda_rs: f64, kappa: f64) -> DecoupledMoments {
    let v = lambda_rs;
    let th = spec.thresholds(kappa);
    let a = spec.shrink(kappa);
    match spec.support {
        Support::FullPlane => {
            let band = second_moment_tail(v, th.tau);
            DecoupledMoments {
                power: band / (a * a),
                cross: band / a,
                active: survival(v, th.tau),
            }
        }
        Support::Disk { peak_power } => {
            let end = th.interior_end();
            let xi = second_moment_tail(v, th.tau) - second_moment_tail(v, end);
            let (band_power, band_cross) = if xi > 0.0 { (xi / (a * a), xi / a) } else { (0.0, 0.0) };
            let tail = survival(v, th.tau_hat);
            let root_p = peak_power.sqrt();
            // int_t^inf r dP(r) = t e^{-t^2/v} + sqrt(pi v) Q(sqrt(2/v) t)
            let first_abs = th.tau_hat * tail
                + (std::f64::consts::PI * v).sqrt() * q_function((2.0 / v).sqrt() * th.tau_hat);
            DecoupledMoments {
                power: band_power + peak_power * tail,
                cross: band_cross + root_p * first_abs,
                active: survival(v, th.tau) - survival(v, end) + tail,
            }
        }
    }
}

/// The same expectations for any isotropic penalty, by threshold-aligned
/// radial quadrature. Phase equivariance makes all three integrands radial.
pub fn quadrature_moments(
    penalty: &dyn ScalarPenalty,
    lambda_rs: f64,
    kappa: f64,
    rule: &QuadratureRule,
) -> Result<DecoupledMoments> {
    let breaks = penalty.breakpoints(kappa);
    let x = |r: f64| penalty.prox(Complex64::new(r, 0.0), kappa);
    let power = radial_expectation(|r| x(r).norm_sqr(), lambda_rs, rule, &breaks)?;
    let cross = radial_expectation(|r| x(r).re * r, lambda_rs, rule, &breaks)?;
    let active = radial_expectation(
        |r| if x(r) == Complex64::new(0.0, 0.0) { 0.0 } else { 1.0 },
        lambda_rs,
        rule,
        &breaks,
    )?;
    Ok(DecoupledMoments {
        power,
        cross,
        active,
    })
}

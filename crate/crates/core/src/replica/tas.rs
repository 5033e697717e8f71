use crate::error::{Error, Result};
use crate::numerics::find_root_1d;
use crate::penalty::PenaltySpec;

use super::{calibrate, CalibrateOptions, Calibration, SystemParams, Targets};

/// RZF (optionally peak limited) on a uniformly random fraction `eta_r` of
/// the antennas.
///
/// The `k x (eta_r n)` sub-channel, rescaled to unit-variance columns, is an
/// i.i.d. channel at load `alpha / eta_r`. In those coordinates the total
/// power per antenna of the full array equals the sub-array's normalized
/// power, so the sub-problem is calibrated to `p*` with `lambda0 = 0`. A
/// peak `P = papr p*` on the physical amplitudes becomes `eta_r P` after
/// rescaling; when that is below `p*` the power is capped at the peak. The
/// returned solution reports `eta = eta_r` and the distortion, which the
/// rescaling leaves unchanged; `lambda` is the quadratic weight of the
/// unscaled sub-problem.
pub fn random_tas_baseline(
    base: &SystemParams,
    eta_r: f64,
    p_star: f64,
    papr: Option<f64>,
    opts: &CalibrateOptions,
) -> Result<Calibration> {
    if !(eta_r > 0.0 && eta_r <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta_r = {eta_r}")));
    }
    let sub = SystemParams::iid(base.alpha / eta_r, base.lambda_s, PenaltySpec::full_plane(0.0, 0.0)?)?;
    let targets = Targets::new(p_star, 1.0, papr.map(|r| r * eta_r))?.capped();
    let mut cal = calibrate(&sub, &targets, opts)?;
    cal.solution.eta *= eta_r;
    cal.solution.papr /= eta_r;
    cal.lambda *= eta_r;
    Ok(cal)
}

/// Fraction `eta_r` at which the random-selection baseline reaches
/// `distortion`.
pub fn random_tas_equivalent_fraction(
    base: &SystemParams,
    distortion: f64,
    p_star: f64,
    papr: Option<f64>,
    opts: &CalibrateOptions,
) -> Result<f64> {
    let gap = |eta_r: f64| -> Result<f64> {
        Ok(random_tas_baseline(base, eta_r, p_star, papr, opts)?.solution.distortion - distortion)
    };
    let at_full = gap(1.0)?;
    if at_full > 0.0 {
        return Err(Error::NotAchievable(format!(
            "random selection with all antennas active gives distortion above {distortion}"
        )));
    }
    // walk down until the baseline is worse than the target
    let mut hi = 1.0;
    let mut lo = None;
    for i in 1..20 {
        let eta = 1.0 - 0.05 * i as f64;
        match gap(eta) {
            Ok(g) if g >= 0.0 => {
                lo = Some(eta);
                break;
            }
            Ok(_) => hi = eta,
            Err(_) => break,
        }
    }
    let Some(lo) = lo else {
        return Err(Error::NotAchievable(format!(
            "no random-selection fraction reaches distortion {distortion}"
        )));
    };
    let mut first_error = None;
    let root = find_root_1d(
        |eta| match gap(eta) {
            Ok(g) => g,
            Err(err) => {
                first_error.get_or_insert(err);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-10,
    );
    match (root, first_error) {
        (Ok(eta), _) => Ok(eta),
        (Err(_), Some(err)) => Err(err),
        (Err(err), None) => Err(err),
    }
}

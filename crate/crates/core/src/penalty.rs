//! Separable penalties, per-antenna transmit supports and their exact scalar
//! proximal maps.
//!
//! The prox of a penalty `u` with weight `c` over a support `X` is
//!
//! ```text
//! prox(z, c) = argmin_{v in X} |v - z|^2 + c u(v)
//! ```
//!
//! It is the decoupled single-antenna precoder of the replica analysis and
//! the exact coordinate step of the finite-size solver. [`PenaltySpec`] is
//! the quadratic-plus-zero-norm family `u(v) = lambda |v|^2 + lambda0 1{v != 0}`
//! over the full plane or a peak-power disk, with closed-form thresholds.
//! Other isotropic penalties plug in through [`ScalarPenalty`].

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Slack on the disk radius when checking support membership.
pub const SUPPORT_SLACK: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// An isotropic scalar penalty with an exact proximal map.
///
/// Implementations must be phase equivariant,
/// `prox(e^{i theta} z, c) = e^{i theta} prox(z, c)`, so that expectations
/// over a circular Gaussian input reduce to radial integrals.
pub trait ScalarPenalty: fmt::Debug + Send + Sync {
    /// `u(v)`; errors when `v` lies outside the support.
    fn value(&self, v: Complex64) -> Result<f64>;
    /// Global minimizer of `|v - z|^2 + c u(v)` over the support.
    fn prox(&self, z: Complex64, c: f64) -> Complex64;
    /// Input magnitudes at which `prox(., c)` may jump or kink.
    fn breakpoints(&self, _c: f64) -> Vec<f64> {
        Vec::new()
    }
    /// Radius of the support, `None` for the full plane.
    fn peak_radius(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    FullPlane,
    /// `{ v : |v|^2 <= peak_power }`.
    Disk { peak_power: f64 },
}

impl Support {
    pub fn disk(peak_power: f64) -> Result<Self> {
        if peak_power > 0.0 && peak_power.is_finite() {
            Ok(Support::Disk { peak_power })
        } else {
            Err(Error::InvalidArgument(format!(
                "disk peak power must be positive, got {peak_power}"
            )))
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match *self {
            Support::FullPlane => None,
            Support::Disk { peak_power } => Some(peak_power.sqrt()),
        }
    }

    pub fn peak_power(&self) -> Option<f64> {
        match *self {
            Support::FullPlane => None,
            Support::Disk { peak_power } => Some(peak_power),
        }
    }
}

/// `u(v) = lambda |v|^2 + lambda0 1{v != 0}` over a [`Support`].
///
/// `lambda0 >= 0` always. On the full plane `lambda >= 0`; on a disk any
/// finite `lambda` is admissible since the support is bounded, and
/// sufficiently negative values drive every active antenna to the peak
/// (constant-envelope limit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub lambda: f64,
    pub lambda0: f64,
    pub support: Support,
}

/// Thresholds on `|z|` of the closed-form prox.
///
/// `tau` separates zero from the shrinkage branch `z / (1 + c lambda)`,
/// `tau_tilde` is where shrinkage reaches the disk edge and `tau_hat` where
/// the peak-amplitude branch `sqrt(P) z / |z|` takes over. Both are infinite
/// on the full plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSet {
    pub tau: f64,
    pub tau_tilde: f64,
    pub tau_hat: f64,
}

impl ThresholdSet {
    /// Upper end of the shrinkage band `[tau, max(tau, tau_tilde)]`; the band
    /// is empty when `tau >= tau_tilde`.
    pub fn interior_end(&self) -> f64 {
        self.tau.max(self.tau_tilde)
    }

    pub fn finite(&self) -> Vec<f64> {
        [self.tau, self.tau_tilde, self.tau_hat]
            .into_iter()
            .filter(|t| t.is_finite())
            .collect()
    }
}

impl PenaltySpec {
    pub fn new(lambda: f64, lambda0: f64, support: Support) -> Result<Self> {
        if !(lambda0 >= 0.0 && lambda0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda0 must be non-negative, got {lambda0}"
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
        }
        if let Support::Disk { peak_power } = support {
            Support::disk(peak_power)?;
        } else if lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "negative lambda {lambda} is unbounded on the full plane"
            )));
        }
        Ok(Self {
            lambda,
            lambda0,
            support,
        })
    }

    pub fn full_plane(lambda: f64, lambda0: f64) -> Result<Self> {
        Self::new(lambda, lambda0, Support::FullPlane)
    }

    pub fn disk(lambda: f64, lambda0: f64, peak_power: f64) -> Result<Self> {
        Self::new(lambda, lambda0, Support::Disk { peak_power })
    }

    pub fn with_factors(&self, lambda: f64, lambda0: f64) -> Result<Self> {
        Self::new(lambda, lambda0, self.support)
    }

    /// Shrinkage divisor `1 + c lambda`.
    pub fn shrink(&self, c: f64) -> f64 {
        1.0 + c * self.lambda
    }

    /// Closed-form thresholds for prox weight `c`.
    pub fn thresholds(&self, c: f64) -> ThresholdSet {
        let a = self.shrink(c);
        let cl0 = c * self.lambda0;
        match self.support {
            Support::FullPlane => ThresholdSet {
                tau: (cl0 * a).sqrt(),
                tau_tilde: f64::INFINITY,
                tau_hat: f64::INFINITY,
            },
            Support::Disk { peak_power } => {
                let root_p = peak_power.sqrt();
                let peak_switch = 0.5 * a * root_p + cl0 / (2.0 * root_p);
                if a > 0.0 {
                    let tau_tilde = a * root_p;
                    ThresholdSet {
                        tau: (cl0 * a).sqrt(),
                        tau_tilde,
                        tau_hat: tau_tilde.max(peak_switch),
                    }
                } else {
                    // concave radial cost: only zero or the peak survive
                    ThresholdSet {
                        tau: 0.0,
                        tau_tilde: 0.0,
                        tau_hat: peak_switch.max(0.0),
                    }
                }
            }
        }
    }

    /// `|v - z|^2 + c u(v)`, without the support check.
    pub fn objective(&self, v: Complex64, z: Complex64, c: f64) -> f64 {
        let active = if v == ZERO { 0.0 } else { self.lambda0 };
        (v - z).norm_sqr() + c * (self.lambda * v.norm_sqr() + active)
    }

    /// The three points any global minimizer is drawn from.
    pub fn candidates(&self, z: Complex64, c: f64) -> Vec<Complex64> {
        let mut out = vec![ZERO];
        let a = self.shrink(c);
        let radius = self.support.radius();
        if a > 0.0 {
            let shrunk = z / a;
            if radius.is_none_or(|r| shrunk.norm() <= r + SUPPORT_SLACK) {
                out.push(shrunk);
            }
        }
        if let Some(r) = radius {
            let m = z.norm();
            if m > 0.0 {
                out.push(z * (r / m));
            }
        }
        out
    }
}

/// Closed-form global minimizer of `|v - z|^2 + c u(v)` over the support.
///
/// Ties at `|z| = tau` go to the shrinkage branch, at `|z| = tau_tilde` to the
/// shrinkage branch and at `|z| = tau_hat` to the peak branch; the competing
/// outputs are cost-equal there. The zero branch returns an exact zero.
pub fn prox(spec: &PenaltySpec, z: Complex64, c: f64) -> Complex64 {
    let m = z.norm();
    if m == 0.0 {
        // the phase is free; a concave radial cost can still favor the peak
        return match spec.support {
            Support::Disk { peak_power } if peak_power * spec.shrink(c) + c * spec.lambda0 < 0.0 => {
                Complex64::new(peak_power.sqrt(), 0.0)
            }
            _ => ZERO,
        };
    }
    let th = spec.thresholds(c);
    match spec.support {
        Support::FullPlane => {
            if m >= th.tau {
                z / spec.shrink(c)
            } else {
                ZERO
            }
        }
        Support::Disk { peak_power } => {
            if m >= th.tau_hat {
                z * (peak_power.sqrt() / m)
            } else if m > th.tau_tilde {
                ZERO
            } else if m >= th.tau {
                z / spec.shrink(c)
            } else {
                ZERO
            }
        }
    }
}

/// Brute-force minimizer over a polar grid of the support plus the exact
/// candidates `{0, z/(1 + c lambda), sqrt(P) z/|z|}`. Test oracle for [`prox`].
pub fn prox_oracle(spec: &PenaltySpec, z: Complex64, c: f64, grid_n: usize) -> Complex64 {
    let grid_n = grid_n.max(101);
    let th = spec.thresholds(c);
    let span = th.finite().into_iter().fold(0.0, f64::max);
    let outer = match spec.support.radius() {
        Some(r) => r,
        None => z.norm().max(span) + 3.0 * span + 1.0,
    };
    let mut best = ZERO;
    let mut best_cost = spec.objective(ZERO, z, c);
    let mut consider = |v: Complex64| {
        let cost = spec.objective(v, z, c);
        if cost < best_cost {
            best_cost = cost;
            best = v;
        }
    };
    for v in spec.candidates(z, c) {
        consider(v);
    }
    for i in 1..=grid_n {
        let radius = outer * i as f64 / grid_n as f64;
        for j in 0..grid_n {
            let phase = std::f64::consts::TAU * j as f64 / grid_n as f64;
            consider(Complex64::from_polar(radius, phase));
        }
    }
    best
}

/// `u(v)`, rejecting points outside the support.
pub fn penalty_value(spec: &PenaltySpec, v: Complex64) -> Result<f64> {
    if let Some(r) = spec.support.radius() {
        let m = v.norm();
        if m > r + SUPPORT_SLACK {
            return Err(Error::OutOfSupport {
                magnitude: m,
                radius: r,
            });
        }
    }
    let active = if v == ZERO { 0.0 } else { spec.lambda0 };
    Ok(spec.lambda * v.norm_sqr() + active)
}

/// Free-function form of [`PenaltySpec::thresholds`].
pub fn thresholds(spec: &PenaltySpec, c: f64) -> ThresholdSet {
    spec.thresholds(c)
}

impl ScalarPenalty for PenaltySpec {
    fn value(&self, v: Complex64) -> Result<f64> {
        penalty_value(self, v)
    }

    fn prox(&self, z: Complex64, c: f64) -> Complex64 {
        prox(self, z, c)
    }

    fn breakpoints(&self, c: f64) -> Vec<f64> {
        self.thresholds(c).finite()
    }

    fn peak_radius(&self) -> Option<f64> {
        self.support.radius()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn full_plane_hard_threshold() {
        let spec = PenaltySpec::full_plane(0.0, 1.0).unwrap();
        assert_eq!(spec.thresholds(1.0).tau, 1.0);
        assert_eq!(prox(&spec, c(2.0), 1.0), c(2.0));
        assert_eq!(prox(&spec, c(0.99), 1.0), ZERO);
        // tie goes to the nonzero branch
        assert_eq!(prox(&spec, c(1.0), 1.0), c(1.0));
    }

    #[test]
    fn full_plane_pure_shrinkage() {
        for (lambda, cc) in [(0.3, 2.0), (5.0, 0.1), (0.0, 7.0)] {
            let spec = PenaltySpec::full_plane(lambda, 0.0).unwrap();
            let z = Complex64::new(0.4, -1.3);
            let got = prox(&spec, z, cc);
            assert!((got - z / (1.0 + cc * lambda)).norm() < 1e-15);
        }
    }

    #[test]
    fn disk_projection_and_zeroing() {
        let spec = PenaltySpec::disk(0.0, 0.0, 1.0).unwrap();
        assert_eq!(prox(&spec, c(3.0), 1.0), c(1.0));
        let spec = PenaltySpec::disk(0.0, 0.5, 1.0).unwrap();
        assert_eq!(prox(&spec, c(0.6), 1.0), ZERO);
        assert_eq!(prox_oracle(&spec, c(0.6), 1.0, 2001), ZERO);
    }

    #[test]
    fn threshold_examples() {
        let t = PenaltySpec::full_plane(0.7, 0.0).unwrap().thresholds(2.0);
        assert_eq!(t.tau, 0.0);
        assert!(t.tau_tilde.is_infinite() && t.tau_hat.is_infinite());
        let t = PenaltySpec::disk(0.0, 0.0, 1.0).unwrap().thresholds(1.0);
        assert_eq!((t.tau, t.tau_tilde, t.tau_hat), (0.0, 1.0, 1.0));
        let t = PenaltySpec::disk(0.0, 1.0, 1.0).unwrap().thresholds(1.0);
        assert_eq!((t.tau, t.tau_tilde, t.tau_hat), (1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_input_gives_exact_zero() {
        for spec in [
            PenaltySpec::full_plane(0.0, 0.0).unwrap(),
            PenaltySpec::disk(-0.5, 0.0, 1.0).unwrap(),
            PenaltySpec::disk(1.0, 2.0, 0.2).unwrap(),
        ] {
            assert_eq!(prox(&spec, ZERO, 1.0), ZERO);
            assert_eq!(prox_oracle(&spec, ZERO, 1.0, 101), ZERO);
        }
        // concave cost: the whole circle beats zero
        let spec = PenaltySpec::disk(-3.0, 0.0, 1.0).unwrap();
        let x = prox(&spec, ZERO, 1.0);
        assert_eq!(x, c(1.0));
        let o = prox_oracle(&spec, ZERO, 1.0, 101);
        assert!((spec.objective(x, ZERO, 1.0) - spec.objective(o, ZERO, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_envelope_limit() {
        // 1 + c lambda <= 0: every nonzero input goes to the circle
        let spec = PenaltySpec::disk(-2.0, 0.0, 0.5).unwrap();
        for z in [c(1e-6), Complex64::new(-0.2, 0.9), c(40.0)] {
            let x = prox(&spec, z, 1.0);
            assert!((x.norm() - 0.5f64.sqrt()).abs() < 1e-15);
            assert!((x.arg() - z.arg()).abs() < 1e-15);
        }
    }

    #[test]
    fn penalty_values() {
        let spec = PenaltySpec::full_plane(2.0, 3.0).unwrap();
        assert_eq!(penalty_value(&spec, ZERO).unwrap(), 0.0);
        assert_eq!(penalty_value(&spec, c(1.0)).unwrap(), 5.0);
        let spec = PenaltySpec::full_plane(0.0, 1.0).unwrap();
        assert_eq!(penalty_value(&spec, c(1e-30)).unwrap(), 1.0);
        let spec = PenaltySpec::disk(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            penalty_value(&spec, c(1.01)),
            Err(Error::OutOfSupport { .. })
        ));
        assert!(penalty_value(&spec, c(1.0 + 1e-13)).is_ok());
    }

    #[test]
    fn constructor_validation() {
        assert!(PenaltySpec::full_plane(-0.1, 0.0).is_err());
        assert!(PenaltySpec::full_plane(0.1, -1.0).is_err());
        assert!(PenaltySpec::disk(0.1, 0.0, 0.0).is_err());
        assert!(PenaltySpec::disk(-5.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn empty_shrinkage_band_when_tau_exceeds_tau_tilde() {
        // c lambda0 = 4 > (1 + c lambda) P = 1: band [tau, tau_tilde] is empty
        let spec = PenaltySpec::disk(0.0, 4.0, 1.0).unwrap();
        let t = spec.thresholds(1.0);
        assert!(t.tau > t.tau_tilde);
        assert_eq!(t.interior_end(), t.tau);
        assert_eq!(t.tau_hat, 2.5);
        for m in [0.5, 1.5, 2.2, 2.6, 4.0] {
            let z = c(m);
            assert_eq!(prox(&spec, z, 1.0), prox_oracle(&spec, z, 1.0, 301));
        }
    }
}

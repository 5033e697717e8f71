//! Large-system analysis and finite-size validation of nonlinear
//! least-square-error (LSE) precoders for massive MIMO downlinks.
//!
//! The precoder maps a data vector `s` to the transmit vector
//!
//! ```text
//! x(s, H) = argmin_{v in X^n} ||H v - s||^2 + sum_j u(v_j)
//! ```
//!
//! for a separable penalty `u` and a per-antenna support `X`. Two halves live
//! here:
//!
//! * [`replica`] evaluates the replica-symmetric fixed point that predicts the
//!   distortion, transmit power, fraction of active antennas, PAPR and the
//!   decoupled per-antenna law as `n -> infinity`.
//! * [`simulator`] solves the finite-dimensional problem by cyclic coordinate
//!   descent over random Gaussian channels and measures the same quantities.
//!
//! [`penalty`] holds the exact scalar proximal maps shared by both halves,
//! [`spectral`] the channel R-transforms and [`numerics`] the shared numerical
//! primitives.

pub mod error;
pub mod numerics;
pub mod penalty;
pub mod replica;
pub mod simulator;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Shared numerical primitives: special functions, quadrature, bracketed
//! root finding, deterministic random streams and distribution distances.
//!
//! Every function here is pure and reentrant. A [`RandomStream`] is owned by a
//! single unit of work and never shared between threads.

mod quadrature;
mod rng;
mod roots;
mod special;
mod stats;

pub use quadrature::{radial_expectation, QuadratureKind, QuadratureRule, RADIAL_CUTOFF_SIGMAS};
pub use rng::{mix64, RandomStream};
pub use roots::find_root_1d;
pub use special::{erfc, q_function};
pub use stats::{ks_distance, Histogram, KsReference, MeanCi};

use std::f64::consts::SQRT_2;

/// Complementary error function.
///
/// Backed by `libm`, a port of the fdlibm rational approximations, which keeps
/// the relative error below one ulp over the whole real line.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal upper-tail probability `Q(x) = P(N(0,1) > x)`.
#[inline]
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

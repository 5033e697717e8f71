use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 400;

fn checked(f: &mut impl FnMut(f64) -> f64, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite(format!("f({x}) = {y}")))
    }
}

/// Bracketed scalar root finder: secant steps inside the bracket, with a
/// forced bisection whenever two consecutive steps fail to halve it.
///
/// Returns `x` with `|f(x)| <= tol` or a final bracket no wider than `tol`
/// (in which case the endpoint with the smaller `|f|` is returned).
pub fn find_root_1d<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bracket [{lo}, {hi}] with tol {tol}"
        )));
    }
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = checked(&mut f, a)?;
    let mut fb = checked(&mut f, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut widths = [b - a; 2];
    for _ in 0..MAX_ITERATIONS {
        let width = b - a;
        if width <= tol {
            break;
        }
        let stalled = width > 0.5 * widths[0];
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if stalled || !(secant > a && secant < b) {
            0.5 * (a + b)
        } else {
            secant
        };
        let fx = checked(&mut f, x)?;
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        widths = [widths[1], b - a];
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

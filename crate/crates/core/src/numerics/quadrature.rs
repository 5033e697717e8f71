use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Radius, in units of the standard deviation `sqrt(variance)`, beyond which
/// the radial density `(2r/v) exp(-r^2/v)` is handled as an analytic tail.
/// The neglected mass there is `exp(-100)`.
pub const RADIAL_CUTOFF_SIGMAS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Gauss–Laguerre in `t = r^2 / variance`: exact for `g` polynomial in
    /// `r^2` up to degree `2N - 1` against the complex Gaussian radial law.
    RadialGaussian,
    /// Gauss–Legendre on the reference interval `[-1, 1]`, applied panel by
    /// panel between breakpoints.
    SegmentLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: QuadratureKind,
}

impl QuadratureRule {
    /// `n`-point Gauss–Legendre rule on `[-1, 1]`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("rule needs at least one node".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self {
            nodes,
            weights,
            kind: QuadratureKind::SegmentLegendre,
        })
    }

    /// `n`-point Gauss–Laguerre rule for `int_0^inf f(t) e^{-t} dt`, used as
    /// a radial rule for the complex Gaussian law via `r = sqrt(variance t)`.
    pub fn radial_gaussian(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("rule needs at least one node".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
                }
            };
            let mut derivative = 1.0;
            let mut previous = 0.0;
            for _ in 0..200 {
                let (p, p_prev) = laguerre_pair(n, z);
                derivative = (nf * p - nf * p_prev) / z;
                previous = p_prev;
                let dz = p / derivative;
                z -= dz;
                if dz.abs() <= 1e-15 * z.max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = -1.0 / (derivative * nf * previous);
        }
        Ok(Self {
            nodes,
            weights,
            kind: QuadratureKind::RadialGaussian,
        })
    }

    /// 64-node Gauss–Legendre panels, the default for piecewise integrands.
    pub fn default_panels() -> Self {
        Self::gauss_legendre(64).expect("64 > 0")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Returns `(L_n(z), L_{n-1}(z))`.
fn laguerre_pair(n: usize, z: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (1.0, 0.0);
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
    }
    (p1, p2)
}

fn finite(value: f64, r: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("integrand at r={r} is {value}")))
    }
}

/// `E[g(|s|)]` for `s` zero-mean circularly-symmetric complex Gaussian with
/// total variance `variance`, i.e. `int_0^inf g(r) (2r/v) exp(-r^2/v) dr`.
///
/// With a [`QuadratureKind::SegmentLegendre`] rule the radial axis is split
/// at every breakpoint inside `(0, 10 sqrt(v))` and each panel is integrated
/// with the rule, so jumps of `g` at the breakpoints cost no accuracy. The
/// tail beyond the cutoff is added analytically with `g` frozen at the
/// cutoff. Breakpoints are ignored by the smooth [`QuadratureKind::RadialGaussian`]
/// rule.
pub fn radial_expectation<G>(
    g: G,
    variance: f64,
    rule: &QuadratureRule,
    breakpoints: &[f64],
) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("variance {variance}")));
    }
    match rule.kind {
        QuadratureKind::RadialGaussian => {
            let mut acc = 0.0;
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let r = (variance * t).sqrt();
                acc += w * finite(g(r), r)?;
            }
            Ok(acc)
        }
        QuadratureKind::SegmentLegendre => {
            let r_max = RADIAL_CUTOFF_SIGMAS * variance.sqrt();
            let mut edges: Vec<f64> = breakpoints
                .iter()
                .copied()
                .filter(|b| *b > 0.0 && *b < r_max)
                .collect();
            edges.push(0.0);
            edges.push(r_max);
            edges.sort_by(f64::total_cmp);
            edges.dedup();

            let mut acc = 0.0;
            for panel in edges.windows(2) {
                let (a, b) = (panel[0], panel[1]);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let mut part = 0.0;
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let r = mid + half * x;
                    let density = 2.0 * r / variance * (-r * r / variance).exp();
                    part += w * finite(g(r), r)? * density;
                }
                acc += half * part;
            }
            let tail = finite(g(r_max), r_max)? * (-r_max * r_max / variance).exp();
            Ok(acc + tail)
        }
    }
}

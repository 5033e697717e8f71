use crate::error::{Error, Result};

/// Reference distribution for a Kolmogorov–Smirnov comparison.
pub enum KsReference<'a> {
    /// Second empirical sample.
    Sample(&'a [f64]),
    /// Continuous reference CDF.
    Cdf(&'a dyn Fn(f64) -> f64),
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(bad) = sample.iter().find(|v| v.is_nan()) {
        return Err(Error::NonFinite(format!("sample value {bad}")));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Kolmogorov–Smirnov sup-distance between the empirical CDF of `sample`
/// and `reference`.
pub fn ks_distance(sample: &[f64], reference: KsReference<'_>) -> Result<f64> {
    let a = sorted(sample)?;
    let n = a.len() as f64;
    match reference {
        KsReference::Cdf(cdf) => Ok(a
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                ((i + 1) as f64 / n - f).max(f - i as f64 / n)
            })
            .fold(0.0, f64::max)),
        KsReference::Sample(other) => {
            let b = sorted(other)?;
            let m = b.len() as f64;
            let (mut i, mut j) = (0usize, 0usize);
            let mut sup = 0.0f64;
            while i < a.len() && j < b.len() {
                let x = a[i].min(b[j]);
                while i < a.len() && a[i] <= x {
                    i += 1;
                }
                while j < b.len() && b[j] <= x {
                    j += 1;
                }
                sup = sup.max((i as f64 / n - j as f64 / m).abs());
            }
            Ok(sup)
        }
    }
}

/// Sample mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub std_dev: f64,
    pub ci95: f64,
}

impl MeanCi {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_dev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std_dev,
            ci95: 1.96 * std_dev / n.sqrt(),
        })
    }
}

/// Fixed-width histogram over `[lo, hi]` normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub masses: Vec<f64>,
}

impl Histogram {
    /// Values outside `[lo, hi]` are clamped into the edge bins.
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if bins == 0 || !(hi >= lo) {
            return Err(Error::InvalidArgument(format!(
                "histogram with {bins} bins over [{lo}, {hi}]"
            )));
        }
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for &v in values {
            let idx = ((v - lo) / width).floor();
            let idx = if idx.is_nan() || idx < 0.0 {
                0
            } else {
                (idx as usize).min(bins - 1)
            };
            counts[idx] += 1;
        }
        let total = values.len() as f64;
        Ok(Self {
            lo,
            hi,
            masses: counts.into_iter().map(|c| c as f64 / total).collect(),
        })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.masses.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_distance() {
        let a = [0.3, -1.0, 2.5, 0.3, 7.0];
        assert_eq!(ks_distance(&a, KsReference::Sample(&a)).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_support_against_point_mass() {
        let cdf = |x: f64| if x >= 1.0 { 1.0 } else { 0.0 };
        let d = ks_distance(&[0.0, 0.0, 0.0], KsReference::Cdf(&cdf)).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn evenly_spaced_against_uniform() {
        // step-function sup by enumeration: max_i i/9 - i/10 = 0.1 at i = 9
        let a: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        let d = ks_distance(&a, KsReference::Cdf(&cdf)).unwrap();
        assert!((d - 0.1).abs() < 1e-12, "{d}");
    }

    #[test]
    fn two_sample_shifted() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [3.5, 4.5, 5.5, 6.5];
        let d = ks_distance(&a, KsReference::Sample(&b)).unwrap();
        assert!((d - 0.75).abs() < 1e-15);
        let d2 = ks_distance(&b, KsReference::Sample(&a)).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(
            ks_distance(&[], KsReference::Sample(&[1.0])),
            Err(Error::EmptySample)
        );
        assert_eq!(
            ks_distance(&[1.0], KsReference::Sample(&[])),
            Err(Error::EmptySample)
        );
    }

    #[test]
    fn mean_ci() {
        let m = MeanCi::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((m.std_dev - sd).abs() < 1e-15);
        assert!((m.ci95 - 1.96 * sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let h = Histogram::new(&v, 128, 0.0, 1.0).unwrap();
        assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let degenerate = Histogram::new(&[0.0, 0.0], 8, 0.0, 0.0).unwrap();
        assert_eq!(degenerate.masses[0], 1.0);
    }
}

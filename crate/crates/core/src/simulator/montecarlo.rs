use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{Histogram, MeanCi, RandomStream};
use crate::penalty::PenaltySpec;

use super::{generate_problem, measure, precode_ccd, random_tas_rzf, CcdOptions, TrialMetrics};

pub const HISTOGRAM_BINS: usize = 128;

/// Finite-size solver used in every trial.
#[derive(Debug, Clone, PartialEq)]
pub enum Precoder {
    Ccd(CcdOptions),
    /// RZF with weight `lambda` on a random fraction `eta_r` of the antennas.
    RandomTasRzf { eta_r: f64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub k: usize,
    pub lambda_s: f64,
    pub penalty: PenaltySpec,
    pub trials: usize,
    pub precoder: Precoder,
    pub master_seed: u64,
    pub zero_eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub trials: usize,
    pub distortion: MeanCi,
    pub power: MeanCi,
    pub eta: MeanCi,
    /// Empirical `max_j |x_j|^2 / (||x||^2 / n)`, averaged over trials.
    pub papr: MeanCi,
    /// Largest per-trial PAPR.
    pub papr_max: f64,
    /// `|x_j|` pooled over all trials and antennas.
    pub magnitude_histogram: Histogram,
    /// `|x_j|` for antennas `[0, n/2)` and `[n/2, n)`, same bins as the pooled
    /// histogram.
    pub half_histograms: [Histogram; 2],
    /// `|x_j|` in trial order, `n` per trial.
    pub magnitudes: Vec<f64>,
    pub per_trial: Vec<TrialMetrics>,
    /// Trials in which coordinate descent hit `max_sweeps`.
    pub unconverged: usize,
    pub n: usize,
}

impl MonteCarloReport {
    /// `|x_j|` for one half of the antenna indices, pooled over trials.
    pub fn half_magnitudes(&self, second: bool) -> Vec<f64> {
        let half = self.n / 2;
        self.magnitudes
            .chunks(self.n)
            .flat_map(|t| if second { &t[half..] } else { &t[..half] })
            .copied()
            .collect()
    }
}

struct TrialOutcome {
    metrics: TrialMetrics,
    magnitudes: Vec<f64>,
    converged: bool,
}

fn run_trial(cfg: &MonteCarloConfig, t: usize) -> Result<TrialOutcome> {
    let mut stream = RandomStream::new(cfg.master_seed, t as u64);
    let problem = generate_problem(cfg.n, cfg.k, cfg.lambda_s, cfg.penalty, &mut stream)?;
    let result = match &cfg.precoder {
        Precoder::Ccd(opts) => precode_ccd(&problem, opts, &mut stream)?,
        Precoder::RandomTasRzf { eta_r, lambda } => random_tas_rzf(&problem, *eta_r, *lambda, &mut stream)?,
    };
    Ok(TrialOutcome {
        metrics: measure(&result.x, &problem, cfg.zero_eps),
        magnitudes: result.x.iter().map(|v| v.norm()).collect(),
        converged: result.converged,
    })
}

/// Runs `trials` independent trials; trial `t` draws everything from
/// `RandomStream::new(master_seed, t)`. Trials run on the current rayon pool
/// and are reduced in index order, so the report does not depend on the
/// number of threads.
pub fn monte_carlo(cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    if cfg.trials < 2 {
        return Err(Error::InvalidArgument(format!("trials = {} (need 2)", cfg.trials)));
    }
    if cfg.n < 2 {
        return Err(Error::InvalidArgument(format!("n = {} (need 2 for the index halves)", cfg.n)));
    }
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(cfg, t).map_err(|e| Error::InvalidState(format!("trial {t}: {e}")))
        })
        .collect::<Result<_>>()?;

    let pick = |f: fn(&TrialMetrics) -> f64| -> Vec<f64> { outcomes.iter().map(|o| f(&o.metrics)).collect() };
    let papr = pick(|m| m.papr);
    let magnitudes: Vec<f64> = outcomes.iter().flat_map(|o| o.magnitudes.iter().copied()).collect();
    let top = magnitudes.iter().copied().fold(0.0, f64::max);
    let hi = if top > 0.0 { top } else { 1.0 };
    let half = cfg.n / 2;
    let split = |second: bool| -> Vec<f64> {
        magnitudes
            .chunks(cfg.n)
            .flat_map(|t| if second { &t[half..] } else { &t[..half] })
            .copied()
            .collect()
    };
    Ok(MonteCarloReport {
        trials: cfg.trials,
        distortion: MeanCi::from_values(&pick(|m| m.distortion))?,
        power: MeanCi::from_values(&pick(|m| m.power))?,
        eta: MeanCi::from_values(&pick(|m| m.eta))?,
        papr_max: papr.iter().copied().fold(0.0, f64::max),
        papr: MeanCi::from_values(&papr)?,
        magnitude_histogram: Histogram::new(&magnitudes, HISTOGRAM_BINS, 0.0, hi)?,
        half_histograms: [
            Histogram::new(&split(false), HISTOGRAM_BINS, 0.0, hi)?,
            Histogram::new(&split(true), HISTOGRAM_BINS, 0.0, hi)?,
        ],
        per_trial: outcomes.iter().map(|o| o.metrics).collect(),
        unconverged: outcomes.iter().filter(|o| !o.converged).count(),
        magnitudes,
        n: cfg.n,
    })
}

//! Experiment configuration: a TOML document with one table per section.
//!
//! ```toml
//! mode = "sweep"
//!
//! [system]
//! alpha_inverse = "1.0:0.1:2.8"   # number, list, or start:step:stop
//! lambda_s = 1.0
//!
//! [penalty]
//! support = "disk"                 # or "full_plane"
//!
//! [targets]
//! p = 0.5
//! eta = [1.0, 0.5]
//! papr_db = [0.0, 3.0, 8.0]
//! ```
//!
//! Keys are addressed as `section.key` by `--set` overrides. The resolved
//! configuration is written back verbatim as the run manifest.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use lse_core::penalty::{PenaltySpec, Support};
use lse_core::replica::{CalibrateOptions, SolveOptions, SystemParams, Targets, UpdateMethod};
use lse_core::simulator::{CcdInit, CcdOptions};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Replica,
    Sweep,
    Simulate,
    Compare,
    Calibrate,
    Saving,
    Plot,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Replica => "replica",
            Mode::Sweep => "sweep",
            Mode::Simulate => "simulate",
            Mode::Compare => "compare",
            Mode::Calibrate => "calibrate",
            Mode::Saving => "saving",
            Mode::Plot => "plot",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar, an explicit list, or an inclusive `"start:step:stop"` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    List(Vec<f64>),
    Range(String),
}

impl Default for Grid {
    fn default() -> Self {
        Grid::One(2.0)
    }
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::One(x) => vec![*x],
            Grid::List(v) => v.clone(),
            Grid::Range(s) => parse_range(s)?,
        };
        if v.is_empty() {
            return Err(Error::Config("empty grid".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("non-finite grid value in {v:?}")));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("grid {v:?} is not strictly increasing")));
        }
        Ok(v)
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let bad = || Error::Config(format!("range {s:?} is not start:step:stop"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| f64::from_str(p).map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    // integer multiples keep 1.0:0.1:2.8 free of accumulated drift
    Ok((0..=count).map(|i| round12(start + i as f64 * step)).collect())
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// One value or several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default)]
    pub alpha_inverse: Grid,
    #[serde(default = "one")]
    pub lambda_s: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            alpha_inverse: Grid::default(),
            lambda_s: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    #[default]
    FullPlane,
    Disk,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    #[serde(default)]
    pub support: SupportKind,
    /// Peak power `P` for a disk with direct factors.
    pub peak_power: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsSection {
    pub p: f64,
    pub eta: OneOrMany,
    /// Required for a disk support; `P = papr p`.
    pub papr_db: Option<OneOrMany>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[default]
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub method: MethodKind,
    pub multistart: bool,
    pub calibrate_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolveOptions::default();
        Self {
            damping: s.damping,
            tol: s.tol,
            max_iter: s.max_iter,
            method: MethodKind::ClosedForm,
            multistart: s.multistart,
            calibrate_tol: CalibrateOptions::default().tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderKind {
    #[default]
    Ccd,
    /// RZF on a random `eta_r` fraction with the replica-calibrated weight.
    RandomTas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zero,
    #[default]
    Rzf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub precoder: PrecoderKind,
    pub eta_r: Option<f64>,
    pub init: InitKind,
    pub max_sweeps: usize,
    pub tol: f64,
    pub restarts: usize,
    pub zero_eps: f64,
    /// Draws from the decoupled law for the KS comparison.
    pub ks_draws: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let c = CcdOptions::default();
        Self {
            n: 400,
            trials: 200,
            seed: 1,
            precoder: PrecoderKind::Ccd,
            eta_r: None,
            init: InitKind::Rzf,
            max_sweeps: c.max_sweeps,
            tol: c.tol,
            restarts: c.restarts,
            zero_eps: lse_core::simulator::ZERO_EPS,
            ks_draws: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSection {
    /// CSV files, relative to the working directory.
    #[serde(default)]
    pub inputs: Vec<String>,
    pub title: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    /// Written into manifests; ignored on input.
    pub version: Option<String>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub penalty: PenaltySection,
    pub targets: Option<TargetsSection>,
    #[serde(default, with = "defaulted_solver")]
    pub solver: SolverSection,
    #[serde(default, with = "defaulted_simulation")]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub plot: PlotSection,
}

// Sections with many defaulted keys are merged over their defaults so a
// config may name any subset of them.
macro_rules! defaulted {
    ($m:ident, $t:ty) => {
        mod $m {
            use super::*;

            pub fn serialize<S: serde::Serializer>(v: &$t, s: S) -> std::result::Result<S::Ok, S::Error> {
                v.serialize(s)
            }

            pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<$t, D::Error> {
                let given = toml::Table::deserialize(d)?;
                let mut base = toml::Table::try_from(<$t>::default()).map_err(serde::de::Error::custom)?;
                for (k, v) in given {
                    if !base.contains_key(&k) && !OPTIONAL_KEYS.contains(&k.as_str()) {
                        return Err(serde::de::Error::custom(format!("unknown key `{k}`")));
                    }
                    base.insert(k, v);
                }
                <$t>::deserialize(toml::Value::Table(base)).map_err(serde::de::Error::custom)
            }
        }
    };
}

/// Optional keys absent from serialized defaults.
const OPTIONAL_KEYS: &[&str] = &["eta_r"];

defaulted!(defaulted_solver, SolverSection);
defaulted!(defaulted_simulation, SimulationSection);

/// The factors of one replica evaluation: given directly or through targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    Direct { lambda: f64, lambda0: f64 },
    Targets(Targets),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::resolve(&text, overrides)
    }

    /// Parses `text` and applies `section.key=value` overrides in order.
    pub fn resolve(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Canonical TOML text of the resolved configuration.
    pub fn to_manifest(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn alpha_inverse(&self) -> Result<Vec<f64>> {
        let v = self.system.alpha_inverse.values()?;
        if v.iter().any(|x| *x <= 0.0) {
            return Err(Error::Config(format!("alpha_inverse must be positive: {v:?}")));
        }
        Ok(v)
    }

    pub fn single_alpha_inverse(&self) -> Result<f64> {
        match self.alpha_inverse()?.as_slice() {
            [x] => Ok(*x),
            v => Err(Error::Config(format!("this mode needs a single alpha_inverse, got {v:?}"))),
        }
    }

    /// System with zero factors on the configured support; the peak of a
    /// target-driven disk is set during calibration.
    pub fn base_system(&self, alpha_inverse: f64) -> Result<SystemParams> {
        let support = match (self.penalty.support, self.penalty.peak_power) {
            (SupportKind::FullPlane, None) => Support::FullPlane,
            (SupportKind::FullPlane, Some(_)) => {
                return Err(Error::Config("peak_power given for a full_plane support".into()))
            }
            (SupportKind::Disk, Some(p)) => Support::disk(p)?,
            // placeholder radius, replaced by the target peak
            (SupportKind::Disk, None) => Support::disk(1.0)?,
        };
        let pen = PenaltySpec::new(0.0, 0.0, support)?;
        Ok(SystemParams::iid(1.0 / alpha_inverse, self.system.lambda_s, pen)?)
    }

    /// Every requested control point, validating the direct/targets choice.
    pub fn controls(&self) -> Result<Vec<Control>> {
        let direct = (self.penalty.lambda, self.penalty.lambda0);
        match (&self.targets, direct) {
            (Some(_), (Some(_), _) | (_, Some(_))) => Err(Error::Config(
                "give either penalty.lambda/lambda0 or a [targets] section, not both".into(),
            )),
            (None, (Some(lambda), Some(lambda0))) => {
                if self.penalty.support == SupportKind::Disk && self.penalty.peak_power.is_none() {
                    return Err(Error::Config("disk support with direct factors needs penalty.peak_power".into()));
                }
                Ok(vec![Control::Direct { lambda, lambda0 }])
            }
            (None, _) => Err(Error::Config(
                "need penalty.lambda and penalty.lambda0, or a [targets] section".into(),
            )),
            (Some(t), _) => {
                if self.penalty.peak_power.is_some() {
                    return Err(Error::Config("with targets the peak comes from targets.papr_db".into()));
                }
                let paprs: Vec<Option<f64>> = match (self.penalty.support, &t.papr_db) {
                    (SupportKind::FullPlane, None) => vec![None],
                    (SupportKind::FullPlane, Some(_)) => {
                        return Err(Error::Config("targets.papr_db needs penalty.support = \"disk\"".into()))
                    }
                    (SupportKind::Disk, None) => {
                        return Err(Error::Config("disk support needs targets.papr_db".into()))
                    }
                    (SupportKind::Disk, Some(v)) => v.values().into_iter().map(|db| Some(from_db(db))).collect(),
                };
                let mut out = Vec::new();
                for eta in t.eta.values() {
                    for papr in &paprs {
                        out.push(Control::Targets(Targets::new(t.p, eta, *papr)?));
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn single_control(&self) -> Result<Control> {
        let c = self.controls()?;
        match c.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::Config(format!("this mode needs one target point, got {}", c.len()))),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            damping: self.solver.damping,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            init: None,
            method: match self.solver.method {
                MethodKind::ClosedForm => UpdateMethod::ClosedForm,
                MethodKind::Quadrature => UpdateMethod::Quadrature,
            },
            multistart: self.solver.multistart,
        }
    }

    pub fn calibrate_options(&self) -> CalibrateOptions {
        CalibrateOptions {
            tol: self.solver.calibrate_tol,
            solve: self.solve_options(),
            ..CalibrateOptions::default()
        }
    }

    pub fn ccd_options(&self) -> CcdOptions {
        let s = &self.simulation;
        CcdOptions {
            init: match s.init {
                InitKind::Zero => CcdInit::Zero,
                InitKind::Rzf => CcdInit::Rzf,
            },
            max_sweeps: s.max_sweeps,
            tol: s.tol,
            restarts: s.restarts,
            ..CcdOptions::default()
        }
    }
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Applies `section.key=value`; the value is read as a TOML value and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut path: Vec<&str> = key.split('.').collect();
    let last = path.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("empty key in {assignment:?}")))?;
    let mut node = table;
    for part in path {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{part} in {key} is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

//! CSV output. Numbers are written at 12 significant digits in their
//! shortest form; missing values are empty fields.

use std::path::Path;

use crate::config::round12;
use crate::error::{Error, Result};

/// Formats `x` at 12 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        // Debug gives the shortest representation that parses back exactly
        format!("{:?}", round12(x))
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn parse_num(field: &str) -> Result<Option<f64>> {
    let f = field.trim();
    if f.is_empty() {
        return Ok(None);
    }
    f.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Schema(format!("not a number: {f:?}")))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Schema(format!("row has {} fields, header {}", r.len(), header.len())));
        }
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Target power unreachable under the peak; calibrated to `eta P`.
    PowerCapped,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::PowerCapped => "power_capped",
            Status::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Status::Ok),
            "power_capped" => Ok(Status::PowerCapped),
            "error" => Ok(Status::Error),
            other => Err(Error::Schema(format!("unknown status {other:?}"))),
        }
    }
}

/// One replica solution on the `alpha^-1` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha_inverse: f64,
    pub lambda: Option<f64>,
    pub lambda0: Option<f64>,
    pub chi: Option<f64>,
    pub p: Option<f64>,
    pub eta: Option<f64>,
    pub papr_db: Option<f64>,
    pub distortion_db: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub status: Status,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "alpha_inverse",
    "lambda",
    "lambda0",
    "chi",
    "p",
    "eta",
    "papr_db",
    "distortion_db",
    "residual",
    "iterations",
    "status",
];

impl SweepRow {
    pub fn failed(alpha_inverse: f64) -> Self {
        Self {
            alpha_inverse,
            lambda: None,
            lambda0: None,
            chi: None,
            p: None,
            eta: None,
            papr_db: None,
            distortion_db: None,
            residual: None,
            iterations: None,
            status: Status::Error,
        }
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            num(self.alpha_inverse),
            opt(self.lambda),
            opt(self.lambda0),
            opt(self.chi),
            opt(self.p),
            opt(self.eta),
            opt(self.papr_db),
            opt(self.distortion_db),
            opt(self.residual),
            self.iterations.map(|i| i.to_string()).unwrap_or_default(),
            self.status.as_str().to_string(),
        ]
    }

    pub fn from_record(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != SWEEP_HEADER.len() {
            return Err(Error::Schema(format!("sweep row with {} fields", r.len())));
        }
        let f = |i: usize| parse_num(&r[i]);
        Ok(Self {
            alpha_inverse: f(0)?.ok_or_else(|| Error::Schema("missing alpha_inverse".into()))?,
            lambda: f(1)?,
            lambda0: f(2)?,
            chi: f(3)?,
            p: f(4)?,
            eta: f(5)?,
            papr_db: f(6)?,
            distortion_db: f(7)?,
            residual: f(8)?,
            iterations: match r[9].trim() {
                "" => None,
                s => Some(s.parse().map_err(|_| Error::Schema(format!("iterations {s:?}")))?),
            },
            status: Status::parse(r[10].trim())?,
        })
    }
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let records: Vec<Vec<String>> = rows.iter().map(SweepRow::record).collect();
    write_csv(path, &SWEEP_HEADER, &records)
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::Schema(format!("{}: unexpected header {:?}", path.display(), header)));
    }
    r.records().map(|rec| SweepRow::from_record(&rec?)).collect()
}

/// `(x, y)` pairs of two named columns; rows with an empty field are skipped.
pub fn read_columns(path: &Path, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("{}: no column {name:?}", path.display())))
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).ok_or_else(|| Error::Schema(format!("{}: short row", path.display())));
        if let (Some(a), Some(b)) = (parse_num(get(ix)?)?, parse_num(get(iy)?)?) {
            out.push((a, b));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_use_twelve_digits() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(1e-12), "1e-12");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), "");
        assert_eq!(parse_num("inf").unwrap(), Some(f64::INFINITY));
        assert_eq!(parse_num("").unwrap(), None);
        assert!(parse_num("x").is_err());
    }
}

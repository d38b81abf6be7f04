//! Phase CSV and instance JSON formats.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fmt17;
use super::phase::PhaseCell;
use crate::error::{Error, Result};
use crate::operators::{GeneratorKind, GeneratorVector, IndexSet, StructuredOperator};

/// Header of the phase CSV. The first nine columns are the fixed schema;
/// the remaining ones carry per-cell diagnostics.
pub const PHASE_HEADER: [&str; 14] = [
    "kind",
    "preset",
    "N",
    "n",
    "s",
    "trial_count",
    "successes",
    "rate",
    "seed",
    "nonconverged",
    "mean_iterations",
    "mean_certificate_margin",
    "certified",
    "certified_failures",
];

fn phase_record(c: &PhaseCell) -> [String; 14] {
    [
        c.kind.as_str().to_string(),
        c.preset.as_str().to_string(),
        c.big_n.to_string(),
        c.n.to_string(),
        c.s.to_string(),
        c.trials.to_string(),
        c.successes.to_string(),
        fmt17(c.success_rate),
        c.seed.to_string(),
        c.nonconverged.to_string(),
        fmt17(c.mean_solve_iterations),
        fmt17(c.mean_certificate_margin),
        c.certified.to_string(),
        c.certified_failures.to_string(),
    ]
}

/// Incremental writer: the header goes out on creation, one row per cell after.
pub struct PhaseCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> PhaseCsvWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(PHASE_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, cell: &PhaseCell) -> Result<()> {
        self.inner.write_record(phase_record(cell))?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_phase_csv<W: Write>(w: W, cells: &[PhaseCell]) -> Result<()> {
    let mut out = PhaseCsvWriter::new(w)?;
    for c in cells {
        out.write(c)?;
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    rec.get(idx)
        .ok_or_else(|| Error::Format(format!("missing column {name}")))?
        .parse()
        .map_err(|_| Error::Format(format!("bad value in column {name}: {:?}", rec.get(idx))))
}

/// Reads a phase CSV. Only the nine fixed columns are required; absent
/// diagnostic columns read as zero (NaN for the mean margin).
pub fn read_phase_csv<R: Read>(r: R) -> Result<Vec<PhaseCell>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let mut idx = [0usize; 9];
    for (k, name) in PHASE_HEADER[..9].iter().enumerate() {
        idx[k] = col(name).ok_or_else(|| Error::Format(format!("phase CSV lacks column {name}")))?;
    }
    let opt = |rec: &csv::StringRecord, name: &str| -> Result<Option<String>> {
        Ok(col(name).and_then(|i| rec.get(i)).map(str::to_string))
    };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let kind: GeneratorKind = field(&rec, idx[0], "kind")?;
        let preset = field(&rec, idx[1], "preset")?;
        let parse_usize = |v: Option<String>, name: &str| -> Result<usize> {
            v.map_or(Ok(0), |s| s.parse().map_err(|_| Error::Format(format!("bad {name}: {s}"))))
        };
        let parse_f64 = |v: Option<String>, name: &str, dflt: f64| -> Result<f64> {
            v.map_or(Ok(dflt), |s| s.parse().map_err(|_| Error::Format(format!("bad {name}: {s}"))))
        };
        let cell = PhaseCell {
            kind,
            preset,
            big_n: field(&rec, idx[2], "N")?,
            n: field(&rec, idx[3], "n")?,
            s: field(&rec, idx[4], "s")?,
            trials: field(&rec, idx[5], "trial_count")?,
            successes: field(&rec, idx[6], "successes")?,
            success_rate: field(&rec, idx[7], "rate")?,
            seed: field(&rec, idx[8], "seed")?,
            nonconverged: parse_usize(opt(&rec, "nonconverged")?, "nonconverged")?,
            mean_solve_iterations: parse_f64(opt(&rec, "mean_iterations")?, "mean_iterations", 0.0)?,
            mean_certificate_margin: parse_f64(
                opt(&rec, "mean_certificate_margin")?,
                "mean_certificate_margin",
                f64::NAN,
            )?,
            certified: parse_usize(opt(&rec, "certified")?, "certified")?,
            certified_failures: parse_usize(opt(&rec, "certified_failures")?, "certified_failures")?,
        };
        if cell.successes > cell.trials {
            return Err(Error::Format(format!(
                "successes {} exceed trials {}",
                cell.successes, cell.trials
            )));
        }
        out.push(cell);
    }
    Ok(out)
}

pub fn read_phase_csv_path(path: &Path) -> Result<Vec<PhaseCell>> {
    read_phase_csv(std::fs::File::open(path)?)
}

fn default_true() -> bool {
    true
}

/// A measurement instance: the operator and data, optionally with the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub kind: GeneratorKind,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub omega: Vec<usize>,
    pub generator: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default = "default_true")]
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

impl Instance {
    pub fn from_operator(op: &StructuredOperator, y: Vec<f64>, x: Option<Vec<f64>>) -> Self {
        Self {
            kind: op.kind(),
            big_n: op.cols(),
            omega: op.omega().as_slice().to_vec(),
            generator: op.generator().values().to_vec(),
            y,
            normalized: op.is_normalized(),
            x,
        }
    }

    pub fn to_operator(&self) -> Result<StructuredOperator> {
        let g = GeneratorVector::new(self.kind, self.big_n, self.generator.clone())?;
        let omega = IndexSet::new(self.omega.clone(), self.big_n)?;
        let op = StructuredOperator::new(g, omega, self.normalized)?;
        if self.y.len() != op.rows() {
            return Err(Error::DimensionMismatch {
                what: "y",
                expected: op.rows(),
                got: self.y.len(),
            });
        }
        if let Some(x) = &self.x {
            if x.len() != self.big_n {
                return Err(Error::DimensionMismatch {
                    what: "x",
                    expected: self.big_n,
                    got: x.len(),
                });
            }
        }
        Ok(op)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

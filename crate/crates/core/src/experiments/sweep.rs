//! Concentration of `δ(Λ) = ‖A_Λ*A_Λ − I‖` as the number of rows grows.

use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fmt17, phase::omega_seed, quantile_sorted};
use crate::analysis::submatrix_extremes;
use crate::error::{Error, Result};
use crate::operators::{GeneratorKind, IndexSet, StructuredOperator};
use crate::signals::{omega_preset, rademacher_generator, OmegaPreset, SeedSpec};

const FIXED_SUPPORT_STREAM: u64 = (1 << 63) | (1 << 62);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SupportMode {
    /// One support drawn from the seed and held for every trial and `n`.
    Fixed,
    /// A fresh support each trial (shared across `n`).
    #[default]
    PerTrial,
}

impl SupportMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SupportMode::Fixed => "fixed",
            SupportMode::PerTrial => "per_trial",
        }
    }
}

impl std::str::FromStr for SupportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(SupportMode::Fixed),
            "per_trial" | "per-trial" => Ok(SupportMode::PerTrial),
            other => Err(Error::InvalidArgument(format!("unknown support mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub big_n: usize,
    pub s: usize,
    pub n: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub kind: GeneratorKind,
    pub preset: OmegaPreset,
    pub support: SupportMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub trials: usize,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
    /// Per-trial `δ`, in trial order.
    pub deltas: Vec<f64>,
}

fn draw_support(rng: &mut impl rand::Rng, big_n: usize, s: usize) -> Result<IndexSet> {
    let mut v = index::sample(rng, big_n, s).into_vec();
    v.sort_unstable();
    IndexSet::new(v, big_n)
}

/// Trial `t` uses stream `t` for the generator (then the support in
/// `PerTrial` mode) at every `n`, so rows differ only through `Ω`.
pub fn eigen_concentration_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.trials == 0 || cfg.s == 0 || cfg.s > cfg.big_n {
        return Err(Error::InvalidArgument(format!(
            "need trials ≥ 1 and 1 ≤ s ≤ N, got trials = {}, s = {}",
            cfg.trials, cfg.s
        )));
    }
    let fixed = match cfg.support {
        SupportMode::Fixed => Some(draw_support(
            &mut SeedSpec::new(cfg.seed, FIXED_SUPPORT_STREAM).rng(),
            cfg.big_n,
            cfg.s,
        )?),
        SupportMode::PerTrial => None,
    };
    let mut rows = Vec::with_capacity(cfg.n.len());
    for &n in &cfg.n {
        let omega = omega_preset(cfg.preset, cfg.big_n, n, omega_seed(cfg.seed, cfg.big_n))?;
        let deltas = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = SeedSpec::new(cfg.seed, t as u64).rng();
                let g = rademacher_generator(&mut rng, cfg.kind, cfg.big_n)?;
                let support = match &fixed {
                    Some(f) => f.clone(),
                    None => draw_support(&mut rng, cfg.big_n, cfg.s)?,
                };
                let op = StructuredOperator::new(g, omega.clone(), true)?;
                Ok(submatrix_extremes(&op, &support)?.delta)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut sorted = deltas.clone();
        sorted.sort_by(f64::total_cmp);
        rows.push(SweepRow {
            n,
            trials: cfg.trials,
            median: quantile_sorted(&sorted, 0.5),
            q90: quantile_sorted(&sorted, 0.9),
            q99: quantile_sorted(&sorted, 0.99),
            max: sorted[sorted.len() - 1],
            deltas,
        });
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 12] = [
    "kind", "preset", "support", "N", "n", "s", "trial_count", "seed", "median", "q90", "q99", "max",
];

pub fn write_sweep_csv<W: Write>(w: W, cfg: &SweepConfig, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in rows {
        out.write_record([
            cfg.kind.as_str().to_string(),
            cfg.preset.as_str().to_string(),
            cfg.support.as_str().to_string(),
            cfg.big_n.to_string(),
            r.n.to_string(),
            cfg.s.to_string(),
            r.trials.to_string(),
            cfg.seed.to_string(),
            fmt17(r.median),
            fmt17(r.q90),
            fmt17(r.q99),
            fmt17(r.max),
        ])?;
    }
    out.flush()?;
    Ok(())
}

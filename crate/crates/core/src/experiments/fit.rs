//! Scaling-law fit `n*(s) = a'·s^q` of the 50% recovery boundary.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::phase::PhaseCell;
use super::quantile_sorted;
use crate::error::{Error, Result};
use crate::signals::SeedSpec;

/// Minimum number of bracketed sparsity levels for a fit.
pub const MIN_FIT_LEVELS: usize = 4;

const BOOTSTRAP_STREAM: u64 = 0xF17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Success level defining the boundary.
    pub level: f64,
    pub bootstrap_reps: usize,
    pub bootstrap_seed: u64,
    /// Two-sided confidence level of the percentile interval.
    pub confidence: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            level: 0.5,
            bootstrap_reps: 2000,
            bootstrap_seed: 0,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub s: usize,
    pub n_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    #[serde(rename = "N")]
    pub big_n: usize,
    /// Fitted sparsity exponent.
    pub q: f64,
    pub q_ci_low: f64,
    pub q_ci_high: f64,
    /// Prefactor `a' = a·log^r(N)` at this fixed `N`.
    pub prefactor: f64,
    pub r_squared: f64,
    pub level: f64,
    pub confidence: f64,
    pub boundaries: Vec<Boundary>,
    /// Sparsity levels whose rates never cross the level.
    pub unbracketed: Vec<usize>,
    pub bootstrap_reps: usize,
    /// Resamples in which every fitted level stayed bracketed.
    pub bootstrap_used: usize,
}

impl ScalingFit {
    pub fn ci_contains(&self, q: f64) -> bool {
        self.q_ci_low <= q && q <= self.q_ci_high
    }
}

/// Pool-adjacent-violators: nondecreasing weighted least-squares fit.
pub fn isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (v2, w2, c2) = blocks.pop().expect("len > 1");
            let (v1, w1, c1) = blocks.pop().expect("len > 1");
            let w = w1 + w2;
            let v = if w > 0.0 { (v1 * w1 + v2 * w2) / w } else { 0.5 * (v1 + v2) };
            blocks.push((v, w, c1 + c2));
        }
    }
    blocks.iter().flat_map(|&(v, _, c)| std::iter::repeat_n(v, c)).collect()
}

/// First crossing of `level` by the isotonic rate curve, linearly interpolated in `n`.
/// `None` when the curve starts at or above the level or never reaches it.
pub fn boundary_crossing(ns: &[f64], rates: &[f64], weights: &[f64], level: f64) -> Option<f64> {
    let iso = isotonic(rates, weights);
    let k = iso.iter().position(|&r| r >= level)?;
    if k == 0 {
        return None;
    }
    let (r0, r1) = (iso[k - 1], iso[k]);
    Some(ns[k - 1] + (level - r0) / (r1 - r0) * (ns[k] - ns[k - 1]))
}

/// Ordinary least squares `y = a + q·x`; returns `(a, q, R²)`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let q = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (my - q * mx, q, r2)
}

/// Per-s curves: ascending `n`, pooled successes and trials.
type Curve = (Vec<f64>, Vec<f64>, Vec<f64>);

fn curves(cells: &[PhaseCell], big_n: usize) -> BTreeMap<usize, Vec<(usize, usize, usize)>> {
    let mut pooled: BTreeMap<usize, BTreeMap<usize, (usize, usize)>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.big_n == big_n) {
        let e = pooled.entry(c.s).or_default().entry(c.n).or_default();
        e.0 += c.successes;
        e.1 += c.trials;
    }
    pooled
        .into_iter()
        .map(|(s, m)| (s, m.into_iter().map(|(n, (k, t))| (n, k, t)).collect()))
        .collect()
}

fn curve_from_counts(pts: &[(usize, usize, usize)], successes: &[usize]) -> Curve {
    let ns = pts.iter().map(|p| p.0 as f64).collect();
    let rates = pts.iter().zip(successes).map(|(p, &k)| k as f64 / p.2 as f64).collect();
    let w = pts.iter().map(|p| p.2 as f64).collect();
    (ns, rates, w)
}

/// Fits the boundary exponent for the cells of dimension `big_n` with default options.
pub fn fit_scaling(cells: &[PhaseCell], big_n: usize) -> Result<ScalingFit> {
    fit_scaling_with(cells, big_n, &FitOptions::default())
}

pub fn fit_scaling_with(cells: &[PhaseCell], big_n: usize, opts: &FitOptions) -> Result<ScalingFit> {
    if !(opts.level > 0.0 && opts.level < 1.0) || !(opts.confidence > 0.0 && opts.confidence < 1.0) {
        return Err(Error::InvalidArgument("level and confidence must lie in (0, 1)".into()));
    }
    let data = curves(cells, big_n);
    let mut boundaries = Vec::new();
    let mut unbracketed = Vec::new();
    for (&s, pts) in &data {
        let k: Vec<usize> = pts.iter().map(|p| p.1).collect();
        let (ns, rates, w) = curve_from_counts(pts, &k);
        match boundary_crossing(&ns, &rates, &w, opts.level) {
            Some(n_star) => boundaries.push(Boundary { s, n_star }),
            None => unbracketed.push(s),
        }
    }
    if boundaries.len() < MIN_FIT_LEVELS {
        return Err(Error::NotBracketed {
            bracketed: boundaries.len(),
            required: MIN_FIT_LEVELS,
            unbracketed,
        });
    }
    let lx: Vec<f64> = boundaries.iter().map(|b| (b.s as f64).ln()).collect();
    let ly: Vec<f64> = boundaries.iter().map(|b| b.n_star.ln()).collect();
    let (a, q, r_squared) = ols(&lx, &ly);

    // parametric bootstrap: resample every cell's successes as Binomial(trials, rate)
    let mut rng = SeedSpec::new(opts.bootstrap_seed, BOOTSTRAP_STREAM).rng();
    let mut qs = Vec::with_capacity(opts.bootstrap_reps);
    for _ in 0..opts.bootstrap_reps {
        let mut ly_b = Vec::with_capacity(boundaries.len());
        for b in &boundaries {
            let pts = &data[&b.s];
            let k: Vec<usize> = pts
                .iter()
                .map(|&(_, k, t)| {
                    let p = k as f64 / t as f64;
                    (0..t).filter(|_| rng.random_bool(p)).count()
                })
                .collect();
            let (ns, rates, w) = curve_from_counts(pts, &k);
            match boundary_crossing(&ns, &rates, &w, opts.level) {
                Some(n_star) => ly_b.push(n_star.ln()),
                None => break,
            }
        }
        if ly_b.len() == boundaries.len() {
            qs.push(ols(&lx, &ly_b).1);
        }
    }
    qs.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - opts.confidence);
    let (q_ci_low, q_ci_high) = if qs.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (quantile_sorted(&qs, tail), quantile_sorted(&qs, 1.0 - tail))
    };
    Ok(ScalingFit {
        big_n,
        q,
        q_ci_low,
        q_ci_high,
        prefactor: a.exp(),
        r_squared,
        level: opts.level,
        confidence: opts.confidence,
        boundaries,
        unbracketed,
        bootstrap_reps: opts.bootstrap_reps,
        bootstrap_used: qs.len(),
    })
}

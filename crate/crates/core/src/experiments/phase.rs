//! Empirical phase transition of basis pursuit over `(N, n, s)` cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::fuchs_tropp_certificate;
use crate::error::{Error, Result};
use crate::operators::{GeneratorKind, StructuredOperator};
use crate::signals::{omega_preset, rademacher_generator, random_sparse_with, MagnitudeLaw, OmegaPreset, SeedSpec, SparseSignal};
use crate::solver::{basis_pursuit, exact_recovery, SolverConfig, SolverStatus, DEFAULT_RECOVERY_TOL};

/// Certificates at least this far below 1 count as certified.
pub const CERTIFICATE_MARGIN: f64 = 1e-3;

/// Multiples of `s` used when no explicit `n` list is given.
pub const AUTO_GRID_FACTORS: [f64; 12] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0];

const OMEGA_STREAM_TAG: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// Independent fair signs per trial.
    #[default]
    Random,
    /// All signs `+1`: a fixed, non-random sign pattern.
    AllPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub big_n: Vec<usize>,
    pub s: Vec<usize>,
    /// Explicit measurement counts; empty selects [`AUTO_GRID_FACTORS`] per `s`.
    pub n: Vec<usize>,
    pub kind: GeneratorKind,
    pub preset: OmegaPreset,
    pub trials: usize,
    pub master_seed: u64,
    pub solver: SolverConfig,
    pub recovery_tol: f64,
    pub magnitudes: MagnitudeLaw,
    pub signs: SignMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            big_n: vec![256],
            s: vec![4, 8, 16],
            n: Vec::new(),
            kind: GeneratorKind::Circulant,
            preset: OmegaPreset::UniformRandom,
            trials: 50,
            master_seed: 0,
            solver: SolverConfig::default(),
            recovery_tol: DEFAULT_RECOVERY_TOL,
            magnitudes: MagnitudeLaw::Unit,
            signs: SignMode::Random,
        }
    }
}

/// One `(N, n, s)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSpec {
    pub big_n: usize,
    pub n: usize,
    pub s: usize,
}

impl ExperimentConfig {
    /// Cells in output order: by `N`, then `s`, then ascending `n`.
    pub fn cells(&self) -> Result<Vec<CellSpec>> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
        }
        if self.big_n.is_empty() || self.s.is_empty() {
            return Err(Error::InvalidArgument("N and s lists must be nonempty".into()));
        }
        self.solver.validate()?;
        let mut out = Vec::new();
        for &big_n in &self.big_n {
            for &s in &self.s {
                if s == 0 || s > big_n {
                    return Err(Error::InvalidArgument(format!("s = {s} must lie in [1, N = {big_n}]")));
                }
                let mut ns: Vec<usize> = if self.n.is_empty() {
                    AUTO_GRID_FACTORS
                        .iter()
                        .map(|f| (f * s as f64).ceil() as usize)
                        .filter(|&n| n <= big_n)
                        .collect()
                } else {
                    self.n.clone()
                };
                ns.sort_unstable();
                ns.dedup();
                for n in ns {
                    if n == 0 || n > big_n {
                        return Err(Error::InvalidArgument(format!("n = {n} must lie in [1, N = {big_n}]")));
                    }
                    if self.preset == OmegaPreset::Downsample && big_n % n != 0 {
                        return Err(Error::InvalidArgument(format!(
                            "downsample preset needs n | N, got n = {n}, N = {big_n}"
                        )));
                    }
                    out.push(CellSpec { big_n, n, s });
                }
            }
        }
        Ok(out)
    }
}

/// ChaCha stream of trial `trial` for sparsity `s` in dimension `N`:
/// `N << 40 | s << 20 | trial`. It does not depend on `n`, so cells that
/// differ only in `n` see the same generator and signal (common random numbers).
pub fn trial_stream(big_n: usize, s: usize, trial: usize) -> u64 {
    ((big_n as u64) << 40) | ((s as u64) << 20) | trial as u64
}

/// Seed for the row set of dimension `N`; shared by all `n` and `s`.
pub fn omega_seed(master_seed: u64, big_n: usize) -> SeedSpec {
    SeedSpec::new(master_seed, OMEGA_STREAM_TAG | big_n as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub kind: GeneratorKind,
    pub preset: OmegaPreset,
    pub big_n: usize,
    pub n: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub seed: u64,
    /// Solves that stopped without converging (counted as failures).
    pub nonconverged: usize,
    pub mean_solve_iterations: f64,
    /// Mean of `1 − max|⟨A_Λ^† a_ρ, sgn⟩|` over trials with invertible `A_Λ*A_Λ`.
    pub mean_certificate_margin: f64,
    /// Trials with certificate margin `≥ CERTIFICATE_MARGIN`.
    pub certified: usize,
    /// Certified trials the solver nevertheless failed on.
    pub certified_failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub converged: bool,
    pub iterations: usize,
    pub margin: Option<f64>,
}

/// Draws `(b or c, x)` for one trial.
pub fn draw_trial(
    kind: GeneratorKind,
    big_n: usize,
    s: usize,
    seed: SeedSpec,
    law: MagnitudeLaw,
    signs: SignMode,
) -> Result<(crate::operators::GeneratorVector, SparseSignal)> {
    let mut rng = seed.rng();
    let g = rademacher_generator(&mut rng, kind, big_n)?;
    let mut x = random_sparse_with(&mut rng, big_n, s, law)?;
    if signs == SignMode::AllPositive {
        x = SparseSignal::new(big_n, x.support(), vec![1.0; s], x.magnitudes().to_vec())?;
    }
    Ok((g, x))
}

fn run_trial(cfg: &ExperimentConfig, cell: CellSpec, omega: &crate::operators::IndexSet, trial: usize) -> Result<TrialOutcome> {
    let seed = SeedSpec::new(cfg.master_seed, trial_stream(cell.big_n, cell.s, trial));
    let (g, x) = draw_trial(cfg.kind, cell.big_n, cell.s, seed, cfg.magnitudes, cfg.signs)?;
    let op = StructuredOperator::new(g, omega.clone(), true)?;
    let y = op.apply(&x.to_dense())?;
    let res = basis_pursuit(&op, &y, &cfg.solver)?;
    let converged = res.status == SolverStatus::Converged;
    let success = converged && exact_recovery(&res.x_hat, &x, cfg.recovery_tol)?;
    let margin = if cell.s <= cell.n {
        fuchs_tropp_certificate(&op, &x.support(), x.signs(), false)
            .ok()
            .map(|r| r.margin())
    } else {
        None
    };
    Ok(TrialOutcome {
        success,
        converged,
        iterations: res.iterations,
        margin,
    })
}

/// Runs every trial of one cell; trials in parallel, outcomes in trial order.
pub fn run_cell(cfg: &ExperimentConfig, cell: CellSpec) -> Result<(PhaseCell, Vec<TrialOutcome>)> {
    let omega = omega_preset(cfg.preset, cell.big_n, cell.n, omega_seed(cfg.master_seed, cell.big_n))?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, cell, &omega, t))
        .collect::<Result<Vec<_>>>()?;
    let successes = outcomes.iter().filter(|o| o.success).count();
    let margins: Vec<f64> = outcomes.iter().filter_map(|o| o.margin).collect();
    let certified: Vec<&TrialOutcome> = outcomes
        .iter()
        .filter(|o| o.margin.is_some_and(|m| m >= CERTIFICATE_MARGIN))
        .collect();
    let cellrow = PhaseCell {
        kind: cfg.kind,
        preset: cfg.preset,
        big_n: cell.big_n,
        n: cell.n,
        s: cell.s,
        trials: cfg.trials,
        successes,
        success_rate: successes as f64 / cfg.trials as f64,
        seed: cfg.master_seed,
        nonconverged: outcomes.iter().filter(|o| !o.converged).count(),
        mean_solve_iterations: outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / cfg.trials as f64,
        mean_certificate_margin: if margins.is_empty() {
            f64::NAN
        } else {
            margins.iter().sum::<f64>() / margins.len() as f64
        },
        certified: certified.len(),
        certified_failures: certified.iter().filter(|o| !o.success).count(),
    };
    Ok((cellrow, outcomes))
}

/// Runs the whole grid, handing each finished cell to `on_cell` in order.
pub fn run_phase_transition_with(
    cfg: &ExperimentConfig,
    mut on_cell: impl FnMut(&PhaseCell) -> Result<()>,
) -> Result<Vec<PhaseCell>> {
    let mut out = Vec::new();
    for cell in cfg.cells()? {
        let (row, _) = run_cell(cfg, cell)?;
        on_cell(&row)?;
        out.push(row);
    }
    Ok(out)
}

pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<Vec<PhaseCell>> {
    run_phase_transition_with(cfg, |_| Ok(()))
}

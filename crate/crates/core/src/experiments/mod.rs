//! Phase-transition harness, scaling fits, spectral sweeps and file formats.
//!
//! Randomness in every experiment is a pure function of the master seed and
//! the trial coordinates (see [`phase::trial_stream`]); trials are evaluated
//! on the rayon pool and merged in `(cell, trial)` order by a single writer,
//! so outputs are byte-identical for any worker count. The worker count can
//! be pinned with the `CIRCSENSE_THREADS` environment variable.

pub mod fit;
pub mod io;
pub mod phase;
pub mod plot;
pub mod sweep;

pub use fit::{fit_scaling, ScalingFit};
pub use io::{read_phase_csv, write_phase_csv, Instance};
pub use phase::{run_phase_transition, ExperimentConfig, PhaseCell, SignMode};
pub use sweep::{eigen_concentration_sweep, SupportMode, SweepConfig, SweepRow};

/// Environment variable read by [`thread_pool_from_env`].
pub const THREADS_ENV: &str = "CIRCSENSE_THREADS";

/// A rayon pool sized by `CIRCSENSE_THREADS`, or `None` to use the global pool.
pub fn thread_pool_from_env() -> Option<rayon::ThreadPool> {
    let n: usize = std::env::var(THREADS_ENV).ok()?.parse().ok()?;
    rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok()
}

/// Decimal with 17 significant digits, the fixed float format of all CSV output.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Linear-interpolation quantile of sorted data, `q ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

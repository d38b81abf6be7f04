//! Compressed sensing with partial random circulant and Toeplitz matrices.
//!
//! The crate is organised bottom-up:
//!
//! - [`operators`]: partial circulant / Toeplitz measurement maps with FFT
//!   apply and adjoint, dense materialization and elementary shifts.
//! - [`signals`]: seeded Rademacher generators, sparse signals, row-set presets.
//! - [`solver`]: matrix-free basis pursuit (`min ‖x‖₁ s.t. Ax = y`).
//! - [`analysis`]: coherence, Gershgorin and exhaustive restricted isometry
//!   constants, submatrix spectra, the Fuchs/Tropp dual certificate and the
//!   sample-complexity budget.
//! - [`khintchine`]: Khintchine-type constants and exhaustive / Monte-Carlo
//!   checks of the scalar and matrix chaos moment inequalities.
//! - [`experiments`]: phase-transition harness, scaling fits, spectral sweeps
//!   and the file formats used by the command line tool.
//!
//! All indices are 0-based. A circulant generator `b` has length `N` and
//! defines `S[i][j] = b[(j - i) mod N]`; a Toeplitz generator `c` has length
//! `2N - 1`, stored so that `c[k + N - 1]` holds the coefficient of diagonal
//! `k ∈ (-N, N)`, and defines `T[i][j] = c_{j - i}`.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod khintchine;
pub mod linalg;
pub mod operators;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};
pub use operators::{GeneratorKind, GeneratorVector, IndexSet, ShiftOperator, StructuredOperator};
pub use signals::{SeedSpec, SparseSignal};
pub use solver::{RecoveryResult, SolverConfig, SolverStatus};

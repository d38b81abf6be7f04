//! Partial circulant and Toeplitz measurement operators.
//!
//! A [`StructuredOperator`] is the row restriction `R_Ω M` of a full
//! `N × N` circulant or Toeplitz matrix `M`, optionally scaled by `1/√n`.
//! Both kinds are applied through one code path: the generator is embedded
//! into a circulant of length `L` (`L = N` for circulant, the smallest power
//! of two `≥ 2N - 1` for Toeplitz) whose spectrum is computed once.
//!
//! ```text
//! apply:    y = R_Ω · IFFT( conj(ĝ) ⊙ FFT(pad(x)) )      (cross-correlation)
//! adjoint:  x = trunc_N · IFFT( ĝ ⊙ FFT(R_Ω* y) )         (convolution)
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ambient dimension [`StructuredOperator::to_dense`] will materialize.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Circulant,
    Toeplitz,
}

impl GeneratorKind {
    /// Generator length required for ambient dimension `n`.
    pub fn generator_len(self, n: usize) -> usize {
        match self {
            GeneratorKind::Circulant => n,
            GeneratorKind::Toeplitz => 2 * n - 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::Circulant => "circulant",
            GeneratorKind::Toeplitz => "toeplitz",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "circulant" => Ok(GeneratorKind::Circulant),
            "toeplitz" => Ok(GeneratorKind::Toeplitz),
            other => Err(Error::InvalidArgument(format!("unknown operator kind '{other}'"))),
        }
    }
}

/// Values generating a circulant (`b_0..b_{N-1}`) or Toeplitz
/// (`c_{-N+1}..c_{N-1}`) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorVector {
    kind: GeneratorKind,
    ambient_dim: usize,
    values: Vec<f64>,
}

impl GeneratorVector {
    pub fn new(kind: GeneratorKind, ambient_dim: usize, values: Vec<f64>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidArgument("ambient dimension must be positive".into()));
        }
        let expected = kind.generator_len(ambient_dim);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "generator length",
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("generator"));
        }
        Ok(Self {
            kind,
            ambient_dim,
            values,
        })
    }

    pub fn circulant(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(GeneratorKind::Circulant, n, values)
    }

    /// `values[k]` is `c_{k - (N - 1)}`.
    pub fn toeplitz(ambient_dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(GeneratorKind::Toeplitz, ambient_dim, values)
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coefficient on diagonal `offset = j - i`: `b_{offset mod N}` or `c_offset`.
    pub fn coefficient(&self, offset: isize) -> f64 {
        let n = self.ambient_dim as isize;
        match self.kind {
            GeneratorKind::Circulant => self.values[offset.rem_euclid(n) as usize],
            GeneratorKind::Toeplitz => {
                if offset <= -n || offset >= n {
                    0.0
                } else {
                    self.values[(offset + n - 1) as usize]
                }
            }
        }
    }

    pub fn is_rademacher(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }
}

/// Strictly increasing, nonempty list of indices below `universe`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    universe: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, universe: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidIndexSet("index set is empty".into()));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet(format!(
                "indices not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let last = *indices.last().unwrap();
        if last >= universe {
            return Err(Error::InvalidIndexSet(format!(
                "index {last} out of range for dimension {universe}"
            )));
        }
        Ok(Self { indices, universe })
    }

    /// Sorts first; duplicates are still rejected.
    pub fn from_unsorted(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, universe)
    }

    pub fn full(universe: usize) -> Result<Self> {
        Self::new((0..universe).collect(), universe)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Indices of `[0, universe)` not in the set, ascending. May be empty.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.universe - self.indices.len());
        let mut it = self.indices.iter().peekable();
        for i in 0..self.universe {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        out
    }
}

/// `A = scale · R_Ω · M` where `M` is the full circulant or Toeplitz matrix.
#[derive(Clone)]
pub struct StructuredOperator {
    generator: GeneratorVector,
    omega: IndexSet,
    normalized: bool,
    scale: f64,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for StructuredOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructuredOperator")
            .field("kind", &self.generator.kind)
            .field("ambient_dim", &self.generator.ambient_dim)
            .field("rows", &self.omega.len())
            .field("normalized", &self.normalized)
            .field("fft_len", &self.spectrum.len())
            .finish()
    }
}

impl StructuredOperator {
    pub fn new(generator: GeneratorVector, omega: IndexSet, normalized: bool) -> Result<Self> {
        let n = generator.ambient_dim();
        if omega.universe() != n {
            return Err(Error::DimensionMismatch {
                what: "row set universe",
                expected: n,
                got: omega.universe(),
            });
        }
        let fft_len = match generator.kind() {
            GeneratorKind::Circulant => n,
            GeneratorKind::Toeplitz => (2 * n - 1).next_power_of_two(),
        };
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        let mut spectrum = vec![Complex64::new(0.0, 0.0); fft_len];
        match generator.kind() {
            GeneratorKind::Circulant => {
                for (dst, &v) in spectrum.iter_mut().zip(generator.values()) {
                    dst.re = v;
                }
            }
            GeneratorKind::Toeplitz => {
                // diagonal k ≥ 0 at position k, k < 0 wraps to fft_len + k
                for k in -(n as isize - 1)..(n as isize) {
                    let pos = k.rem_euclid(fft_len as isize) as usize;
                    spectrum[pos].re = generator.coefficient(k);
                }
            }
        }
        forward.process(&mut spectrum);

        let scale = if normalized {
            1.0 / (omega.len() as f64).sqrt()
        } else {
            1.0
        };
        Ok(Self {
            generator,
            omega,
            normalized,
            scale,
            spectrum,
            forward,
            inverse,
        })
    }

    pub fn generator(&self) -> &GeneratorVector {
        &self.generator
    }

    pub fn kind(&self) -> GeneratorKind {
        self.generator.kind()
    }

    pub fn omega(&self) -> &IndexSet {
        &self.omega
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Ambient dimension `N` (number of columns).
    pub fn cols(&self) -> usize {
        self.generator.ambient_dim()
    }

    /// Number of measurements `n = |Ω|`.
    pub fn rows(&self) -> usize {
        self.omega.len()
    }

    /// Single entry `A[row_pos][col]` where `row_pos` indexes into Ω.
    pub fn entry(&self, row_pos: usize, col: usize) -> f64 {
        let i = self.omega.as_slice()[row_pos] as isize;
        self.scale * self.generator.coefficient(col as isize - i)
    }

    /// Column `col` of `A` straight from the definition, length `n`.
    pub fn column(&self, col: usize) -> Vec<f64> {
        let j = col as isize;
        self.omega
            .iter()
            .map(|i| self.scale * self.generator.coefficient(j - i as isize))
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.cols();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                what: "apply input",
                expected: n,
                got: x.len(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spectrum.len()];
        for (dst, &v) in buf.iter_mut().zip(x) {
            dst.re = v;
        }
        self.forward.process(&mut buf);
        for (b, g) in buf.iter_mut().zip(&self.spectrum) {
            *b *= g.conj();
        }
        self.inverse.process(&mut buf);
        let norm = self.scale / self.spectrum.len() as f64;
        Ok(self.omega.iter().map(|i| buf[i].re * norm).collect())
    }

    pub fn adjoint_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                what: "adjoint input",
                expected: self.rows(),
                got: y.len(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spectrum.len()];
        for (i, &v) in self.omega.iter().zip(y) {
            buf[i].re = v;
        }
        self.forward.process(&mut buf);
        for (b, g) in buf.iter_mut().zip(&self.spectrum) {
            *b *= g;
        }
        self.inverse.process(&mut buf);
        let norm = self.scale / self.spectrum.len() as f64;
        Ok(buf[..self.cols()].iter().map(|c| c.re * norm).collect())
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        self.to_dense_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_with_cap(&self, cap: usize) -> Result<DMatrix<f64>> {
        if self.cols() > cap {
            return Err(Error::CapExceeded {
                requested: self.cols(),
                cap,
            });
        }
        Ok(DMatrix::from_fn(self.rows(), self.cols(), |r, c| self.entry(r, c)))
    }
}

/// Elementary shift `S_j` (circulant, `j ∈ [0, N)`) or `T_j` (Toeplitz,
/// `j ∈ (-N, N)`) on `R^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftOperator {
    kind: GeneratorKind,
    index: isize,
    dim: usize,
}

impl ShiftOperator {
    pub fn new(kind: GeneratorKind, index: isize, dim: usize) -> Result<Self> {
        let n = dim as isize;
        let ok = match kind {
            GeneratorKind::Circulant => (0..n).contains(&index),
            GeneratorKind::Toeplitz => index > -n && index < n,
        };
        if dim == 0 || !ok {
            return Err(Error::InvalidArgument(format!(
                "shift index {index} out of range for {kind} shifts on R^{dim}"
            )));
        }
        Ok(Self { kind, index, dim })
    }

    /// All shifts of the given kind, in ascending index order.
    pub fn all(kind: GeneratorKind, dim: usize) -> Vec<ShiftOperator> {
        let n = dim as isize;
        let range = match kind {
            GeneratorKind::Circulant => 0..n,
            GeneratorKind::Toeplitz => (1 - n)..n,
        };
        range
            .map(|index| ShiftOperator { kind, index, dim })
            .collect()
    }

    pub fn index(&self) -> isize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row that basis vector `e_col` is moved to, or `None` if it falls off.
    pub fn image_of(&self, col: usize) -> Option<usize> {
        let n = self.dim as isize;
        let r = col as isize + self.index;
        match self.kind {
            GeneratorKind::Circulant => Some(r.rem_euclid(n) as usize),
            GeneratorKind::Toeplitz => (0..n).contains(&r).then_some(r as usize),
        }
    }

    /// Preimage under the shift: the column mapped onto `row`, if any.
    pub fn preimage_of(&self, row: usize) -> Option<usize> {
        let n = self.dim as isize;
        let c = row as isize - self.index;
        match self.kind {
            GeneratorKind::Circulant => Some(c.rem_euclid(n) as usize),
            GeneratorKind::Toeplitz => (0..n).contains(&c).then_some(c as usize),
        }
    }

    /// `(D_j x)_ℓ = x_{ℓ - j}` (cyclic, or zero outside `[0, N)`).
    pub fn apply<T: Copy + Default>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "shift input",
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((0..self.dim)
            .map(|l| self.preimage_of(l).map_or_else(T::default, |c| x[c]))
            .collect())
    }

    /// `D_j* x`; for these 0/1 matrices the adjoint is the transpose.
    pub fn adjoint_apply<T: Copy + Default>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "shift input",
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((0..self.dim)
            .map(|c| self.image_of(c).map_or_else(T::default, |r| x[r]))
            .collect())
    }
}

/// Convenience wrapper matching [`ShiftOperator::apply`].
pub fn shift_apply(shift: &ShiftOperator, x: &[f64]) -> Result<Vec<f64>> {
    shift.apply(x)
}

/// Max absolute deviation of `Σ_j D_j* P_Ω D_j` from `n·I_N`.
///
/// The sum is accumulated as a dense integer matrix, column by column, by
/// pushing each basis vector through `D_j`, `P_Ω` and `D_j*`.
pub fn verify_shift_identity(omega: &IndexSet, kind: GeneratorKind) -> Result<i64> {
    let n = omega.universe();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            requested: n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let shifts = ShiftOperator::all(kind, n);
    let mut acc = vec![0i64; n * n];
    let mut in_omega = vec![false; n];
    for i in omega.iter() {
        in_omega[i] = true;
    }
    for col in 0..n {
        for shift in &shifts {
            let Some(r) = shift.image_of(col) else { continue };
            if !in_omega[r] {
                continue;
            }
            if let Some(back) = shift.preimage_of(r) {
                acc[back * n + col] += 1;
            }
        }
    }
    let target = omega.len() as i64;
    let mut worst = 0i64;
    for r in 0..n {
        for c in 0..n {
            let want = if r == c { target } else { 0 };
            worst = worst.max((acc[r * n + c] - want).abs());
        }
    }
    Ok(worst)
}

//! Khintchine-type constants and moment-inequality checks for Rademacher
//! sums and second-order Rademacher chaos.
//!
//! Exhaustive evaluation averages over every sign pattern and is exact up to
//! floating point; Monte Carlo is the fallback for larger families and
//! reports a standard error. Pattern `k` assigns `ε_i = +1` when bit `i` of
//! `k` is set and `−1` otherwise. Per-pattern values are collected in pattern
//! order before summation, so parallel evaluation is bit-stable.

use std::f64::consts::{E, PI};
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::signals::{rademacher_vec, SeedSpec};

/// Largest `m` for which the factorial ratio is computed exactly.
pub const MAX_CONSTANT_ORDER: u32 = 20;
/// Exhaustive chaos moments enumerate `2^M` patterns.
pub const MAX_EXHAUSTIVE_SIZE: usize = 12;
/// Exhaustive decoupling enumerates `2^{2M}` pattern pairs.
pub const MAX_EXHAUSTIVE_DECOUPLED_BITS: usize = 24;

/// `(2m)! / (2^m m!) = (2m − 1)!!`, exact for `m ≤ 20`.
pub fn odd_double_factorial(m: u32) -> Result<u128> {
    if m == 0 || m > MAX_CONSTANT_ORDER {
        return Err(Error::InvalidArgument(format!(
            "order m = {m} must lie in [1, {MAX_CONSTANT_ORDER}]"
        )));
    }
    Ok((1..=m as u128).map(|k| 2 * k - 1).product())
}

/// Gaussian Khintchine constant `B_m = ((2m)!/(2^m m!))^{1/2m}`.
pub fn gaussian_constant(m: u32) -> Result<f64> {
    Ok((odd_double_factorial(m)? as f64).powf(1.0 / (2.0 * m as f64)))
}

/// Rademacher constant `C_m = √(π/2) B_m`.
pub fn rademacher_constant(m: u32) -> Result<f64> {
    Ok((PI / 2.0).sqrt() * gaussian_constant(m)?)
}

/// Chaos constant `D_m = 2^{1/2m} · 2π · C_m²`.
pub fn chaos_constant(m: u32) -> Result<f64> {
    let c = rademacher_constant(m)?;
    Ok(2f64.powf(1.0 / (2.0 * m as f64)) * 2.0 * PI * c * c)
}

/// Scalar chaos constant `d_p = 4^{1/p} (4/e) p`.
pub fn scalar_chaos_constant(p: f64) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("moment order p = {p} must be ≥ 2")));
    }
    Ok(4f64.powf(1.0 / p) * (4.0 / E) * p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhintchineConstants {
    pub m: u32,
    pub p: f64,
    pub b_m: f64,
    pub c_m: f64,
    pub d_m: f64,
    pub d_p: f64,
}

pub fn khintchine_constants(m: u32, p: f64) -> Result<KhintchineConstants> {
    Ok(KhintchineConstants {
        m,
        p,
        b_m: gaussian_constant(m)?,
        c_m: rademacher_constant(m)?,
        d_m: chaos_constant(m)?,
        d_p: scalar_chaos_constant(p)?,
    })
}

/// Squared singular values of `a` from the smaller Gram. Eigenvalues within
/// rounding of zero (`≤ dim·ε·λ_max`) are set to zero so that `σ = √λ`
/// does not amplify them.
fn squared_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let g = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let ev = symmetric_eigenvalues(&g);
    let cut = ev.last().map_or(0.0, |&m| m.max(0.0)) * g.nrows() as f64 * f64::EPSILON;
    ev.into_iter().map(|v| if v <= cut { 0.0 } else { v }).collect()
}

/// `‖σ‖_p` for a vector of squared singular values; `p = ∞` gives the maximum.
fn lp_of_sqrt(sq: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return sq.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt();
    }
    sq.iter().map(|&v| v.powf(p / 2.0)).sum::<f64>().powf(1.0 / p)
}

/// Schatten norm `‖A‖_{S_p} = ‖σ(A)‖_p`; pass `f64::INFINITY` for the operator norm.
pub fn schatten_norm(a: &DMatrix<f64>, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("Schatten index p = {p} must be ≥ 1")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    Ok(lp_of_sqrt(&squared_singular_values(a), p))
}

/// `‖A‖_{S_p}^p`, the quantity averaged in moment computations.
fn schatten_power(a: &DMatrix<f64>, p: f64) -> f64 {
    squared_singular_values(a).iter().map(|&v| v.powf(p / 2.0)).sum()
}

/// Square matrix of `r × t` blocks `A_{j,k}`, `j, k ∈ [0, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFamily {
    size: usize,
    rows: usize,
    cols: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl MatrixFamily {
    /// `blocks` in row-major `(j, k)` order. Diagonal blocks must vanish.
    pub fn new(size: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if size == 0 || blocks.len() != size * size {
            return Err(Error::DimensionMismatch {
                what: "family block count",
                expected: size * size,
                got: blocks.len(),
            });
        }
        let (rows, cols) = blocks[0].shape();
        if blocks.iter().any(|b| b.shape() != (rows, cols)) {
            return Err(Error::InvalidArgument("blocks must share one shape".into()));
        }
        if blocks.iter().any(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("family block"));
        }
        if (0..size).any(|j| blocks[j * size + j].iter().any(|&v| v != 0.0)) {
            return Err(Error::InvalidArgument("diagonal blocks A_{j,j} must be zero".into()));
        }
        Ok(Self {
            size,
            rows,
            cols,
            blocks,
        })
    }

    /// `1 × 1` blocks from a zero-diagonal square matrix.
    pub fn from_scalars(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("scalar coefficients must be square".into()));
        }
        let m = a.nrows();
        let blocks = (0..m * m)
            .map(|idx| DMatrix::from_element(1, 1, a[(idx / m, idx % m)]))
            .collect();
        Self::new(m, blocks)
    }

    /// Independent uniform `[−1, 1]` entries, each block scaled by a random
    /// weight in `[0, 1]` so families are not all alike.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, size: usize, rows: usize, cols: usize) -> Result<Self> {
        let mut blocks = Vec::with_capacity(size * size);
        for j in 0..size {
            for k in 0..size {
                if j == k {
                    blocks.push(DMatrix::zeros(rows, cols));
                    continue;
                }
                let w: f64 = rng.random_range(0.0..=1.0);
                blocks.push(DMatrix::from_fn(rows, cols, |_, _| w * rng.random_range(-1.0..=1.0)));
            }
        }
        Self::new(size, blocks)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn block_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn block(&self, j: usize, k: usize) -> &DMatrix<f64> {
        &self.blocks[j * self.size + k]
    }

    /// `Σ_{j,k} ε_j ε'_k A_{j,k}`.
    pub fn bilinear_sum(&self, eps: &[f64], eps_prime: &[f64]) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for j in 0..self.size {
            for k in 0..self.size {
                let c = eps[j] * eps_prime[k];
                acc += self.block(j, k) * c;
            }
        }
        acc
    }

    /// `Σ_{j,k} ε_j ε_k A_{j,k}`.
    pub fn chaos_sum(&self, eps: &[f64]) -> DMatrix<f64> {
        self.bilinear_sum(eps, eps)
    }

    /// `Σ A_{j,k} A_{j,k}*` (`r × r`).
    pub fn row_square(&self) -> DMatrix<f64> {
        self.blocks
            .iter()
            .fold(DMatrix::zeros(self.rows, self.rows), |acc, b| acc + b * b.transpose())
    }

    /// `Σ A_{j,k}* A_{j,k}` (`t × t`).
    pub fn col_square(&self) -> DMatrix<f64> {
        self.blocks
            .iter()
            .fold(DMatrix::zeros(self.cols, self.cols), |acc, b| acc + b.transpose() * b)
    }

    /// Block matrix `F = (A_{j,k})` of shape `rM × tM`.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let (r, t, m) = (self.rows, self.cols, self.size);
        DMatrix::from_fn(r * m, t * m, |i, c| self.block(i / r, c / t)[(i % r, c % t)])
    }

    /// `Σ |A_{j,k}|²` entrywise (the Frobenius mass of all blocks).
    pub fn frobenius_mass(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exhaustive => "exhaustive",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

/// How an expectation over sign patterns is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Exhaustive,
    MonteCarlo { trials: usize, seed: u64 },
}

impl Sampling {
    pub fn method(&self) -> Method {
        match self {
            Sampling::Exhaustive => Method::Exhaustive,
            Sampling::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }
}

fn pattern(bits: u64, len: usize) -> Vec<f64> {
    (0..len).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

/// Mean and standard error of `f(ε)` over Rademacher vectors of length `len`.
fn sign_expectation<F>(len: usize, sampling: Sampling, max_bits: usize, f: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    match sampling {
        Sampling::Exhaustive => {
            if len > max_bits {
                return Err(Error::BudgetExceeded(format!(
                    "exhaustive enumeration over 2^{len} sign patterns exceeds 2^{max_bits}"
                )));
            }
            let vals: Vec<f64> = (0..1u64 << len)
                .into_par_iter()
                .map(|bits| f(&pattern(bits, len)))
                .collect();
            Ok((vals.iter().sum::<f64>() / vals.len() as f64, 0.0))
        }
        Sampling::MonteCarlo { trials, seed } => {
            if trials < 2 {
                return Err(Error::InvalidArgument("Monte Carlo needs ≥ 2 trials".into()));
            }
            let vals: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|t| f(&rademacher_vec(&mut SeedSpec::new(seed, t).rng(), len)))
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            Ok((mean, (var / n).sqrt()))
        }
    }
}

/// `(E Z)^{1/q}` with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_err: f64,
    pub method: Method,
}

impl MomentEstimate {
    fn from_mean(mean: f64, se: f64, q: f64, method: Method) -> Self {
        let value = mean.max(0.0).powf(1.0 / q);
        let std_err = if mean > 0.0 {
            se * mean.powf(1.0 / q - 1.0) / q
        } else {
            0.0
        };
        Self {
            value,
            std_err,
            method,
        }
    }
}

/// `[E ‖Σ ε_j ε_k A_{j,k}‖_{S_2m}^{2m}]^{1/2m}`.
pub fn chaos_moment_lhs(family: &MatrixFamily, m: u32, sampling: Sampling) -> Result<MomentEstimate> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be ≥ 1".into()));
    }
    let q = 2.0 * m as f64;
    let (mean, se) = sign_expectation(family.size(), sampling, MAX_EXHAUSTIVE_SIZE, |eps| {
        schatten_power(&family.chaos_sum(eps), q)
    })?;
    Ok(MomentEstimate::from_mean(mean, se, q, sampling.method()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveTerm {
    /// `‖(Σ A A*)^{1/2}‖`
    RowSquare,
    /// `‖(Σ A* A)^{1/2}‖`
    ColSquare,
    /// `‖F‖`
    Block,
}

impl fmt::Display for ActiveTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActiveTerm::RowSquare => "row_square",
            ActiveTerm::ColSquare => "col_square",
            ActiveTerm::Block => "block",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosBound {
    pub row_term: f64,
    pub col_term: f64,
    pub block_term: f64,
    pub active_term: ActiveTerm,
    pub constant: f64,
    /// `D_m · max(row, col, block)`
    pub rhs: f64,
}

impl ChaosBound {
    pub fn max_term(&self) -> f64 {
        self.row_term.max(self.col_term).max(self.block_term)
    }
}

/// `‖P^{1/2}‖_{S_q}` for a positive semidefinite `P`.
fn sqrt_psd_schatten(p: &DMatrix<f64>, q: f64) -> f64 {
    let ev: Vec<f64> = symmetric_eigenvalues(p).into_iter().map(|v| v.max(0.0)).collect();
    lp_of_sqrt(&ev, q)
}

pub fn chaos_bound_rhs(family: &MatrixFamily, m: u32) -> Result<ChaosBound> {
    let q = 2.0 * m as f64;
    let constant = chaos_constant(m)?;
    let row_term = sqrt_psd_schatten(&family.row_square(), q);
    let col_term = sqrt_psd_schatten(&family.col_square(), q);
    let block_term = schatten_norm(&family.block_matrix(), q)?;
    let active_term = if block_term >= row_term && block_term >= col_term {
        ActiveTerm::Block
    } else if row_term >= col_term {
        ActiveTerm::RowSquare
    } else {
        ActiveTerm::ColSquare
    };
    let mx = row_term.max(col_term).max(block_term);
    Ok(ChaosBound {
        row_term,
        col_term,
        block_term,
        active_term,
        constant,
        rhs: constant * mx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    /// `2m` for matrix chaos, `p` for scalar chaos.
    pub order: f64,
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub rhs: f64,
    /// Which term of the maximum is active; `None` for scalar checks.
    pub max_term_active: Option<ActiveTerm>,
    pub method: Method,
    pub holds: bool,
}

impl MomentCheck {
    fn new(order: f64, lhs: MomentEstimate, rhs: f64, active: Option<ActiveTerm>) -> Self {
        // exact comparison for enumeration, 3σ slack for Monte Carlo
        let slack = 3.0 * lhs.std_err;
        Self {
            order,
            lhs: lhs.value,
            lhs_std_err: lhs.std_err,
            rhs,
            max_term_active: active,
            method: lhs.method,
            holds: lhs.value - slack <= rhs * (1.0 + 1e-12),
        }
    }

    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            0.0
        }
    }
}

/// Matrix chaos inequality with constant `D_m`.
pub fn chaos_check(family: &MatrixFamily, m: u32, sampling: Sampling) -> Result<MomentCheck> {
    let lhs = chaos_moment_lhs(family, m, sampling)?;
    let bound = chaos_bound_rhs(family, m)?;
    Ok(MomentCheck::new(2.0 * m as f64, lhs, bound.rhs, Some(bound.active_term)))
}

/// `[E ‖Σ ε_k B_k‖_{S_2m}^{2m}]^{1/2m} ≤ C_m max(‖(Σ B B*)^{1/2}‖, ‖(Σ B* B)^{1/2}‖)`
/// in `S_2m`. The max-term field reports `RowSquare` or `ColSquare`.
pub fn rademacher_series_check(terms: &[DMatrix<f64>], m: u32, sampling: Sampling) -> Result<MomentCheck> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidArgument("series needs at least one term".into()))?;
    let (r, t) = first.shape();
    if terms.iter().any(|b| b.shape() != (r, t)) {
        return Err(Error::InvalidArgument("series terms must share one shape".into()));
    }
    let q = 2.0 * m as f64;
    let constant = rademacher_constant(m)?;
    let (mean, se) = sign_expectation(terms.len(), sampling, MAX_EXHAUSTIVE_DECOUPLED_BITS, |eps| {
        let mut sum = DMatrix::zeros(r, t);
        for (e, b) in eps.iter().zip(terms) {
            sum += b * *e;
        }
        schatten_power(&sum, q)
    })?;
    let mut rows = DMatrix::zeros(r, r);
    let mut cols = DMatrix::zeros(t, t);
    for b in terms {
        rows += b * b.transpose();
        cols += b.transpose() * b;
    }
    let row_term = sqrt_psd_schatten(&rows, q);
    let col_term = sqrt_psd_schatten(&cols, q);
    let active = if row_term >= col_term {
        ActiveTerm::RowSquare
    } else {
        ActiveTerm::ColSquare
    };
    let lhs = MomentEstimate::from_mean(mean, se, q, sampling.method());
    Ok(MomentCheck::new(q, lhs, constant * row_term.max(col_term), Some(active)))
}

fn check_zero_diagonal(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument("coefficient matrix must be square".into()));
    }
    if (0..a.nrows()).any(|j| a[(j, j)] != 0.0) {
        return Err(Error::InvalidArgument("coefficient diagonal must be zero".into()));
    }
    Ok(())
}

/// `[E |Σ ε_j ε_k a_{j,k}|^p]^{1/p} ≤ d_p (Σ |a_{j,k}|²)^{1/2}`.
pub fn scalar_chaos_check(a: &DMatrix<f64>, p: f64, sampling: Sampling) -> Result<MomentCheck> {
    check_zero_diagonal(a)?;
    let d = scalar_chaos_constant(p)?;
    let size = a.nrows();
    let (mean, se) = sign_expectation(size, sampling, MAX_EXHAUSTIVE_SIZE, |eps| {
        let mut s = 0.0;
        for j in 0..size {
            for k in 0..size {
                s += eps[j] * eps[k] * a[(j, k)];
            }
        }
        s.abs().powf(p)
    })?;
    let lhs = MomentEstimate::from_mean(mean, se, p, sampling.method());
    Ok(MomentCheck::new(p, lhs, d * a.norm(), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingCheck {
    /// `E ‖Σ ξ_j ξ_k A_{j,k}‖^p`
    pub coupled: f64,
    /// `E ‖Σ ξ_j ξ'_k A_{j,k}‖^p`
    pub decoupled: f64,
    /// `coupled / decoupled` (0 when both vanish)
    pub ratio: f64,
    pub p: f64,
    pub method: Method,
    pub holds: bool,
}

/// `E‖Σ ξ_j ξ_k A_{j,k}‖^p ≤ 4^p E‖Σ ξ_j ξ'_k A_{j,k}‖^p` in the Schatten
/// `S_q` norm (`q = ∞` for the operator norm).
pub fn decoupling_check(family: &MatrixFamily, q: f64, p: f64, sampling: Sampling) -> Result<DecouplingCheck> {
    if !(p >= 1.0 && p.is_finite()) || !(q >= 1.0) {
        return Err(Error::InvalidArgument("need p ≥ 1 and Schatten index q ≥ 1".into()));
    }
    let size = family.size();
    let norm_p = |x: &DMatrix<f64>| lp_of_sqrt(&squared_singular_values(x), q).powf(p);
    let (coupled, se_c) = sign_expectation(size, sampling, MAX_EXHAUSTIVE_SIZE, |eps| {
        norm_p(&family.chaos_sum(eps))
    })?;
    let (decoupled, se_d) = sign_expectation(2 * size, sampling, MAX_EXHAUSTIVE_DECOUPLED_BITS, |both| {
        let (e, e2) = both.split_at(size);
        norm_p(&family.bilinear_sum(e, e2))
    })?;
    let factor = 4f64.powf(p);
    let ratio = if decoupled > 0.0 { coupled / decoupled } else { 0.0 };
    let slack = 3.0 * (se_c + factor * se_d);
    Ok(DecouplingCheck {
        coupled,
        decoupled,
        ratio,
        p,
        method: sampling.method(),
        holds: coupled - slack <= factor * decoupled * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    /// `β e^{−u^γ}` (κ = 1)
    pub bound: f64,
    /// Markov step `β (p^{1/γ} / (e u))^p` evaluated at `p = u^γ`
    pub markov: f64,
    /// Level `e α u` the bound applies to.
    pub threshold: f64,
}

/// If `(E Z^p)^{1/p} ≤ α β^{1/p} p^{1/γ}` for `p ≥ p0`, then
/// `P(Z ≥ e α u) ≤ β e^{−u^γ}` for `u ≥ p0`.
pub fn moment_tail_bound(alpha: f64, beta: f64, gamma: f64, p0: f64, u: f64) -> Result<TailBound> {
    if !(alpha > 0.0 && beta > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidArgument("α, β, γ must be positive".into()));
    }
    if !(u >= p0) {
        return Err(Error::InvalidArgument(format!(
            "u = {u} below p0 = {p0}: bound not guaranteed"
        )));
    }
    let p = u.powf(gamma);
    Ok(TailBound {
        bound: beta * (-p).exp(),
        markov: beta * (p.powf(1.0 / gamma) / (E * u)).powf(p),
        threshold: E * alpha * u,
    })
}

/// Exact `E (Σ ε_k a_k)^{2m}` by enumeration.
pub fn rademacher_sum_moment(a: &[f64], m: u32) -> Result<f64> {
    let (mean, _) = sign_expectation(a.len(), Sampling::Exhaustive, MAX_EXHAUSTIVE_SIZE + 8, |eps| {
        let s: f64 = eps.iter().zip(a).map(|(e, x)| e * x).sum();
        s.powi(2 * m as i32)
    })?;
    Ok(mean)
}

/// Exact `E (Σ g_k a_k)^{2m} = (2m − 1)!! (Σ a_k²)^m` for standard Gaussians.
pub fn gaussian_sum_moment(a: &[f64], m: u32) -> Result<f64> {
    let s2: f64 = a.iter().map(|v| v * v).sum();
    Ok(odd_double_factorial(m)? as f64 * s2.powi(m as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_by_hand() {
        assert!((gaussian_constant(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((rademacher_constant(1).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-15);
        assert!((rademacher_constant(1).unwrap() - 1.25331).abs() < 1e-5);
        assert!((chaos_constant(1).unwrap() - 2f64.sqrt() * PI * PI).abs() < 1e-12);
        assert!((chaos_constant(1).unwrap() - 13.9577).abs() < 1e-4);
        assert!((scalar_chaos_constant(2.0).unwrap() - 16.0 / E).abs() < 1e-12);
        assert!(odd_double_factorial(21).is_err());
        assert!(odd_double_factorial(0).is_err());
        assert!(scalar_chaos_constant(1.5).is_err());
    }

    #[test]
    fn rademacher_series_single_term() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let c = rademacher_series_check(&[b], 2, Sampling::Exhaustive).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-14);
        assert!((c.rhs - 2.0 * rademacher_constant(2).unwrap()).abs() < 1e-12);
        assert!(c.holds);
        assert!(rademacher_series_check(&[], 1, Sampling::Exhaustive).is_err());
    }

    #[test]
    fn odd_double_factorial_exact() {
        assert_eq!(odd_double_factorial(3).unwrap(), 15);
        assert_eq!(odd_double_factorial(20).unwrap(), 319_830_986_772_877_770_815_625);
    }

    #[test]
    fn schatten_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((schatten_norm(&id, 4.0).unwrap() - 3f64.powf(0.25)).abs() < 1e-12);
        let u = DMatrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let p = &u * u.transpose();
        for q in [1.0, 2.0, 6.0, f64::INFINITY] {
            assert!((schatten_norm(&p, q).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(schatten_norm(&id, 0.5).is_err());
    }

    #[test]
    fn family_validation() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 0)] = 1.0;
        assert!(MatrixFamily::from_scalars(&a).is_err());
        let blocks = vec![DMatrix::zeros(1, 2), DMatrix::zeros(1, 2), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2)];
        assert!(MatrixFamily::new(2, blocks).is_err());
    }

    #[test]
    fn two_by_two_scalar_chaos() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let fam = MatrixFamily::from_scalars(&a).unwrap();
        let lhs = chaos_moment_lhs(&fam, 1, Sampling::Exhaustive).unwrap();
        assert!((lhs.value - 1.0).abs() < 1e-14);
        let rhs = chaos_bound_rhs(&fam, 1).unwrap();
        assert!((rhs.rhs - PI * PI).abs() < 1e-12);
        let sc = scalar_chaos_check(&a, 2.0, Sampling::Exhaustive).unwrap();
        assert!((sc.lhs - 1.0).abs() < 1e-14);
        assert!((sc.rhs - 16.0 / E / 2f64.sqrt()).abs() < 1e-12);
        assert!(sc.holds);
    }

    #[test]
    fn zero_family() {
        let fam = MatrixFamily::from_scalars(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(chaos_moment_lhs(&fam, 2, Sampling::Exhaustive).unwrap().value, 0.0);
        assert_eq!(chaos_bound_rhs(&fam, 2).unwrap().rhs, 0.0);
        let d = decoupling_check(&fam, 2.0, 2.0, Sampling::Exhaustive).unwrap();
        assert!(d.holds && d.coupled == 0.0 && d.decoupled == 0.0);
    }

    #[test]
    fn enumeration_budget() {
        let fam = MatrixFamily::from_scalars(&DMatrix::zeros(13, 13)).unwrap();
        assert!(matches!(
            chaos_moment_lhs(&fam, 1, Sampling::Exhaustive),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn tail_bound_values() {
        let t = moment_tail_bound(1.0, 4.0, 1.0, 2.0, 2.0).unwrap();
        assert!((t.bound - 4.0 * (-2f64).exp()).abs() < 1e-15);
        assert!((t.bound - 0.54134).abs() < 1e-5);
        assert!((t.markov - t.bound).abs() < 1e-12);
        assert!(moment_tail_bound(1.0, 4.0, 1.0, 2.0, 1.0).is_err());
        let big_n = 100.0f64;
        let eps = 0.05;
        let u = (2.0 * big_n * big_n / eps).ln();
        let t = moment_tail_bound(1.0, 2.0 * big_n * big_n, 1.0, 2.0, u).unwrap();
        assert!((t.bound - eps).abs() < 1e-12);
    }
}

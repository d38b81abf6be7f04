//! Coherence, restricted isometry diagnostics, the Fuchs/Tropp certificate
//! and the sample-complexity budget.
//!
//! Monte-Carlo checks resample the generator per trial from independent
//! ChaCha streams while the row set (and support, where relevant) stays
//! fixed. Trials run on the rayon pool but are collected in trial order, so
//! every aggregate is bit-stable regardless of thread count.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, gram_of_columns, norm2, symmetric_eigenvalues, Cholesky};
use crate::operators::{GeneratorKind, IndexSet, StructuredOperator};
use crate::signals::{rademacher_generator, rademacher_vec, SeedSpec};

/// Above this ambient dimension coherence is computed diagonal by diagonal with FFTs.
pub const DENSE_COHERENCE_MAX_N: usize = 2048;
/// Largest ambient dimension accepted by [`coherence`].
pub const COHERENCE_BUDGET_N: usize = 1 << 15;
/// Largest number of supports [`exhaustive_ric`] will enumerate.
pub const EXHAUSTIVE_RIC_BUDGET: u64 = 1_000_000;
/// Smallest admissible Cholesky pivot of `A_Λ*A_Λ`.
pub const GRAM_PIVOT_TOL: f64 = 1e-10;
/// `C̃ = 4π²`, the constant in the eigenvalue concentration condition.
pub const C_TILDE: f64 = 4.0 * PI * PI;
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceResult {
    pub mu: f64,
    pub argmax_pair: (usize, usize),
    /// `4 log(2N²/ε) / √n`
    pub bound_value: f64,
}

/// `4 log(2N²/ε) / √n`.
pub fn coherence_bound(big_n: usize, n: usize, epsilon: f64) -> f64 {
    let nn = big_n as f64;
    4.0 * (2.0 * nn * nn / epsilon).ln() / (n as f64).sqrt()
}

/// Exact coherence `max_{i≠ℓ} |⟨a_i, a_ℓ⟩|` of the operator as given.
pub fn coherence(op: &StructuredOperator, epsilon: f64) -> Result<CoherenceResult> {
    let big_n = op.cols();
    if big_n > COHERENCE_BUDGET_N {
        return Err(Error::BudgetExceeded(format!(
            "coherence for N = {big_n} exceeds the limit {COHERENCE_BUDGET_N}"
        )));
    }
    let (mu, argmax_pair) = if big_n <= DENSE_COHERENCE_MAX_N {
        coherence_dense(op)?
    } else {
        coherence_by_diagonals(op)
    };
    Ok(CoherenceResult {
        mu,
        argmax_pair,
        bound_value: coherence_bound(big_n, op.rows(), epsilon),
    })
}

/// Coherence from the full Gram matrix `AᵀA`.
pub fn coherence_dense(op: &StructuredOperator) -> Result<(f64, (usize, usize))> {
    let a = op.to_dense()?;
    let g = a.transpose() * &a;
    let mut best = (0.0, (0, 1.min(op.cols() - 1)));
    for l in 0..g.ncols() {
        for i in 0..l {
            let v = g[(i, l)].abs();
            if v > best.0 {
                best = (v, (i, l));
            }
        }
    }
    Ok(best)
}

/// Coherence diagonal by diagonal: for offset `d` the inner products
/// `⟨a_i, a_{i+d}⟩` over `i` are the convolution of the row indicator with
/// `w_d[k] = g_k g_{k+d}`.
pub fn coherence_by_diagonals(op: &StructuredOperator) -> (f64, (usize, usize)) {
    match op.kind() {
        GeneratorKind::Circulant => circulant_diagonals(op),
        GeneratorKind::Toeplitz => toeplitz_diagonals(op),
    }
}

fn circulant_diagonals(op: &StructuredOperator) -> (f64, (usize, usize)) {
    let big_n = op.cols();
    let b = op.generator().values();
    let scale2 = op.scale() * op.scale();
    let mut best = (0.0, (0, 1.min(big_n - 1)));
    if big_n < 2 {
        return best;
    }
    if op.rows() == big_n {
        // full row set: every diagonal is constant, equal to the cyclic autocorrelation
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(big_n);
        let inv = planner.plan_fft_inverse(big_n);
        let mut buf: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex64::new(c.norm_sqr(), 0.0);
        }
        inv.process(&mut buf);
        for d in 1..big_n {
            let v = (buf[d].re / big_n as f64 * scale2).abs();
            if v > best.0 {
                best = (v, (0, d));
            }
        }
        return best;
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(big_n);
    let inv = planner.plan_fft_inverse(big_n);
    let mut ind = vec![Complex64::new(0.0, 0.0); big_n];
    for r in op.omega().iter() {
        ind[r].re = 1.0;
    }
    fwd.process(&mut ind);
    let norm = scale2 / big_n as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); big_n];
    // diagonal N−d holds the same pairs as diagonal d
    for d in 1..=big_n / 2 {
        for (k, c) in buf.iter_mut().enumerate() {
            *c = Complex64::new(b[k] * b[(k + d) % big_n], 0.0);
        }
        fwd.process(&mut buf);
        for (c, f) in buf.iter_mut().zip(&ind) {
            *c *= f;
        }
        inv.process(&mut buf);
        for (i, c) in buf.iter().enumerate() {
            let v = (c.re * norm).abs();
            if v > best.0 {
                let l = (i + d) % big_n;
                best = (v, (i.min(l), i.max(l)));
            }
        }
    }
    best
}

fn toeplitz_diagonals(op: &StructuredOperator) -> (f64, (usize, usize)) {
    let big_n = op.cols();
    let g = op.generator();
    let scale2 = op.scale() * op.scale();
    let mut best = (0.0, (0, 1.min(big_n - 1)));
    let len = (3 * big_n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut ind = vec![Complex64::new(0.0, 0.0); len];
    for r in op.omega().iter() {
        ind[r].re = 1.0;
    }
    fwd.process(&mut ind);
    let norm = scale2 / len as f64;
    let off = big_n as isize - 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for d in 1..big_n {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        // w_d[k] = c_k c_{k+d} for k ∈ [−(N−1), N−1−d], stored at k + N − 1
        for k in -off..=(off - d as isize) {
            buf[(k + off) as usize].re = g.coefficient(k) * g.coefficient(k + d as isize);
        }
        fwd.process(&mut buf);
        for (c, f) in buf.iter_mut().zip(&ind) {
            *c *= f;
        }
        inv.process(&mut buf);
        for i in 0..(big_n - d) {
            let v = (buf[i + off as usize].re * norm).abs();
            if v > best.0 {
                best = (v, (i, i + d));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTailReport {
    pub bound_value: f64,
    pub exceed_fraction: f64,
    pub mus: Vec<f64>,
}

/// Fraction of independent Rademacher draws with `μ > 4 log(2N²/ε)/√n`.
pub fn coherence_tail_check(
    kind: GeneratorKind,
    omega: &IndexSet,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<CoherenceTailReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let big_n = omega.universe();
    let bound_value = coherence_bound(big_n, omega.len(), epsilon);
    let mus = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeedSpec::new(seed, t).rng();
            let g = rademacher_generator(&mut rng, kind, big_n)?;
            let op = StructuredOperator::new(g, omega.clone(), true)?;
            Ok(coherence(&op, epsilon)?.mu)
        })
        .collect::<Result<Vec<f64>>>()?;
    let exceed = mus.iter().filter(|&&m| m > bound_value).count();
    Ok(CoherenceTailReport {
        bound_value,
        exceed_fraction: exceed as f64 / trials as f64,
        mus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub u: f64,
    pub empirical: f64,
    pub bound: f64,
    /// Monte-Carlo standard error of `empirical`.
    pub std_err: f64,
}

impl TailPoint {
    fn new(u: f64, hits: usize, trials: usize, bound: f64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            u,
            empirical: p,
            bound,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Empirical tail at most the bound plus three standard errors.
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.std_err
    }
}

/// Per-pair tail `P(n|⟨s_i, s_ℓ⟩| ≥ 4√n u)` against `4e^{−u}`.
pub fn pair_tail_check(
    kind: GeneratorKind,
    omega: &IndexSet,
    pair: (usize, usize),
    u_values: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<TailPoint>> {
    let big_n = omega.universe();
    if pair.0 == pair.1 || pair.0.max(pair.1) >= big_n {
        return Err(Error::InvalidArgument(format!("invalid column pair {pair:?}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let sums: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeedSpec::new(seed, t).rng();
            let g = rademacher_generator(&mut rng, kind, big_n).expect("n > 0");
            // n⟨s_i, s_ℓ⟩ = Σ_{r∈Ω} g_{i−r} g_{ℓ−r}
            omega
                .iter()
                .map(|r| {
                    let r = r as isize;
                    g.coefficient(pair.0 as isize - r) * g.coefficient(pair.1 as isize - r)
                })
                .sum::<f64>()
                .abs()
        })
        .collect();
    let level = 4.0 * (omega.len() as f64).sqrt();
    Ok(u_values
        .iter()
        .map(|&u| {
            let hits = sums.iter().filter(|&&v| v >= level * u).count();
            TailPoint::new(u, hits, trials, 4.0 * (-u).exp())
        })
        .collect())
}

/// `δ_s ≤ (s − 1) μ`.
pub fn gershgorin_ric(mu: f64, s: usize) -> Result<f64> {
    if s == 0 || !(mu >= 0.0) {
        return Err(Error::InvalidArgument("need s ≥ 1 and μ ≥ 0".into()));
    }
    Ok((s - 1) as f64 * mu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenExtremes {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `max(1 − λ_min, λ_max − 1)`, the operator norm of `A_Λ*A_Λ − I`.
    pub delta: f64,
    pub support: Vec<usize>,
}

impl EigenExtremes {
    fn from_eigenvalues(ev: &[f64], support: Vec<usize>) -> Self {
        let lambda_min = ev[0].max(0.0);
        let lambda_max = ev[ev.len() - 1].max(lambda_min);
        Self {
            lambda_min,
            lambda_max,
            delta: (1.0 - lambda_min).max(lambda_max - 1.0),
            support,
        }
    }
}

fn check_support(op: &StructuredOperator, support: &IndexSet) -> Result<()> {
    if support.universe() != op.cols() {
        return Err(Error::DimensionMismatch {
            what: "support universe",
            expected: op.cols(),
            got: support.universe(),
        });
    }
    if support.len() > crate::operators::DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            requested: support.len(),
            cap: crate::operators::DEFAULT_DENSE_CAP,
        });
    }
    Ok(())
}

/// `A_Λ*A_Λ` assembled from operator columns.
pub fn support_gram(op: &StructuredOperator, support: &IndexSet) -> Result<(Vec<Vec<f64>>, DMatrix<f64>)> {
    check_support(op, support)?;
    let cols: Vec<Vec<f64>> = support.iter().map(|j| op.column(j)).collect();
    let g = gram_of_columns(&cols);
    Ok((cols, g))
}

pub fn submatrix_extremes(op: &StructuredOperator, support: &IndexSet) -> Result<EigenExtremes> {
    let (_, g) = support_gram(op, support)?;
    Ok(EigenExtremes::from_eigenvalues(
        &symmetric_eigenvalues(&g),
        support.as_slice().to_vec(),
    ))
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Lexicographic k-subsets of `0..n`.
pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact `δ_s`: the worst `max(1 − λ_min, λ_max − 1)` over all supports of size `s`.
pub fn exhaustive_ric(op: &StructuredOperator, s: usize) -> Result<f64> {
    let big_n = op.cols();
    if s == 0 || s > big_n {
        return Err(Error::InvalidArgument(format!("sparsity {s} must lie in [1, {big_n}]")));
    }
    match binomial(big_n as u64, s as u64) {
        Some(c) if c <= EXHAUSTIVE_RIC_BUDGET => {}
        _ => {
            return Err(Error::BudgetExceeded(format!(
                "C({big_n}, {s}) supports exceed {EXHAUSTIVE_RIC_BUDGET}"
            )))
        }
    }
    let a = op.to_dense()?;
    let full_gram = a.transpose() * &a;
    let mut worst = 0.0f64;
    for_each_combination(big_n, s, |sup| {
        let g = DMatrix::from_fn(s, s, |i, j| full_gram[(sup[i], sup[j])]);
        let ev = symmetric_eigenvalues(&g);
        worst = worst.max((1.0 - ev[0]).max(ev[s - 1] - 1.0));
    });
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub max_abs_correlation: f64,
    pub argmax_rho: Option<usize>,
    pub satisfied: bool,
    /// Smallest eigenvalue of `A_Λ*A_Λ`.
    pub lambda_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_rho: Option<Vec<(usize, f64)>>,
}

impl CertificateReport {
    /// `1 − max_ρ |⟨A_Λ^† a_ρ, sgn(x_Λ)⟩|`.
    pub fn margin(&self) -> f64 {
        1.0 - self.max_abs_correlation
    }
}

/// `max_{ρ∉Λ} |⟨A_Λ^† a_ρ, sgn(x_Λ)⟩|`, computed as `|⟨a_ρ, A_Λ(A_Λ*A_Λ)^{-1} sgn⟩|`
/// for all ρ with one adjoint application.
pub fn fuchs_tropp_certificate(
    op: &StructuredOperator,
    support: &IndexSet,
    signs: &[f64],
    keep_per_rho: bool,
) -> Result<CertificateReport> {
    if signs.len() != support.len() {
        return Err(Error::DimensionMismatch {
            what: "sign pattern",
            expected: support.len(),
            got: signs.len(),
        });
    }
    let (cols, g) = support_gram(op, support)?;
    let ch = Cholesky::factor(&g, GRAM_PIVOT_TOL)?;
    let lambda_min = symmetric_eigenvalues(&g)[0].max(0.0);
    let h = ch.solve(signs);
    let mut v = vec![0.0; op.rows()];
    for (c, &hj) in cols.iter().zip(&h) {
        for (vi, &ci) in v.iter_mut().zip(c) {
            *vi += hj * ci;
        }
    }
    let corr = op.adjoint_apply(&v)?;
    let mut max_abs = 0.0;
    let mut argmax = None;
    let mut per = keep_per_rho.then(Vec::new);
    for rho in support.complement() {
        let c = corr[rho].abs();
        if let Some(p) = per.as_mut() {
            p.push((rho, corr[rho]));
        }
        if argmax.is_none() || c > max_abs {
            max_abs = c;
            argmax = Some(rho);
        }
    }
    Ok(CertificateReport {
        max_abs_correlation: max_abs,
        argmax_rho: argmax,
        satisfied: max_abs < 1.0,
        lambda_min,
        per_rho: per,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoInverseChain {
    /// `‖A_Λ^† a_ρ‖₂ = ‖(A_Λ*A_Λ)^{-1} A_Λ* a_ρ‖₂`
    pub exact_norm: f64,
    /// `‖A_Λ* a_ρ‖₂`
    pub correlation_norm: f64,
    pub mu: f64,
    pub lambda_min: f64,
    /// `√s · μ / λ_min`
    pub bound: f64,
}

pub fn pseudo_inverse_norm_chain(
    op: &StructuredOperator,
    support: &IndexSet,
    rho: usize,
) -> Result<PseudoInverseChain> {
    if rho >= op.cols() || support.contains(rho) {
        return Err(Error::InvalidArgument(format!("column {rho} must lie outside the support")));
    }
    let (cols, g) = support_gram(op, support)?;
    let ch = Cholesky::factor(&g, GRAM_PIVOT_TOL)?;
    let lambda_min = symmetric_eigenvalues(&g)[0];
    let a_rho = op.column(rho);
    let corr: Vec<f64> = cols.iter().map(|c| dot(c, &a_rho)).collect();
    let exact = norm2(&ch.solve(&corr));
    let mu = coherence(op, DEFAULT_EPSILON)?.mu;
    let s = support.len() as f64;
    Ok(PseudoInverseChain {
        exact_norm: exact,
        correlation_norm: norm2(&corr),
        mu,
        lambda_min,
        bound: s.sqrt() * mu / lambda_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexityBudget {
    pub big_n: usize,
    pub s: usize,
    pub epsilon: f64,
    pub c_tilde: f64,
    /// `4 C̃ s log²(s/ε)`
    pub n_cond2: f64,
    /// `8 s log²(2N²/ε) log(2N/ε)`
    pub n_cond1: f64,
    pub n_required: f64,
}

pub fn sample_complexity_budget(big_n: usize, s: usize, epsilon: f64) -> Result<SampleComplexityBudget> {
    if big_n < 2 || s == 0 || s > big_n || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(
            "need N ≥ 2, 1 ≤ s ≤ N and 0 < ε < 1".into(),
        ));
    }
    let (nn, ss) = (big_n as f64, s as f64);
    let n_cond2 = 4.0 * C_TILDE * ss * (ss / epsilon).ln().powi(2);
    let n_cond1 = 8.0 * ss * (2.0 * nn * nn / epsilon).ln().powi(2) * (2.0 * nn / epsilon).ln();
    Ok(SampleComplexityBudget {
        big_n,
        s,
        epsilon,
        c_tilde: C_TILDE,
        n_cond2,
        n_cond1,
        n_required: n_cond1.max(n_cond2),
    })
}

/// `2N exp(−n / (8 s log²(2N²/ε))) + 2ε`: the recovery failure bound at `n` measurements.
pub fn failure_probability(big_n: usize, s: usize, epsilon: f64, n: usize) -> f64 {
    let (nn, ss) = (big_n as f64, s as f64);
    let l = (2.0 * nn * nn / epsilon).ln();
    2.0 * nn * (-(n as f64) / (8.0 * l * l * ss)).exp() + 2.0 * epsilon
}

/// Empirical `P(|Σ ε_j a_j| ≥ u‖a‖₂)` against `2e^{−u²/2}`.
pub fn hoeffding_tail_check(a: &[f64], u_values: &[f64], trials: usize, seed: u64) -> Result<Vec<TailPoint>> {
    if trials == 0 || a.is_empty() {
        return Err(Error::InvalidArgument("need trials ≥ 1 and a nonempty weight vector".into()));
    }
    let na = norm2(a);
    let sums: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let eps = rademacher_vec(&mut SeedSpec::new(seed, t).rng(), a.len());
            dot(&eps, a).abs()
        })
        .collect();
    Ok(u_values
        .iter()
        .map(|&u| {
            let hits = sums.iter().filter(|&&v| v >= u * na).count();
            TailPoint::new(u, hits, trials, 2.0 * (-u * u / 2.0).exp())
        })
        .collect())
}

//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's transforms or solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use circsense::GeneratorKind;

/// Row-major `n × N` matrix built straight from the index definitions:
/// circulant `S[i][j] = b[(j − i) mod N]`, Toeplitz `T[i][j] = c[j − i + N − 1]`.
pub fn dense_from_definition(
    kind: GeneratorKind,
    big_n: usize,
    values: &[f64],
    omega: &[usize],
    normalized: bool,
) -> Vec<Vec<f64>> {
    let scale = if normalized { 1.0 / (omega.len() as f64).sqrt() } else { 1.0 };
    omega
        .iter()
        .map(|&i| {
            (0..big_n)
                .map(|j| {
                    let v = match kind {
                        GeneratorKind::Circulant => values[(j + big_n - i) % big_n],
                        GeneratorKind::Toeplitz => values[j + big_n - 1 - i],
                    };
                    scale * v
                })
                .collect()
        })
        .collect()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(u, v)| u * v).sum()).collect()
}

pub fn matvec_t(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().zip(y).map(|(row, v)| row[j] * v).sum()).collect()
}

pub fn to_dmatrix(a: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols, |i, j| a[i][j])
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Calls `f` with every increasing `k`-subset of `0..n`.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum of `‖x‖₁` over `Ax = y` by enumerating basic solutions: every
/// `n`-subset of columns with a nonsingular square block. Requires `A` of
/// full row rank, which is checked. Returns `(value, minimizer)`.
pub fn l1_vertex_oracle(a: &[Vec<f64>], y: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = a.len();
    let big_n = a[0].len();
    let full = to_dmatrix(a);
    if full.clone().svd(false, false).rank(1e-9) < n {
        return None;
    }
    let yv = DVector::from_column_slice(y);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(big_n, n, |cols| {
        let block = DMatrix::from_fn(n, n, |i, k| a[i][cols[k]]);
        let lu = block.lu();
        if lu.determinant().abs() < 1e-9 {
            return;
        }
        let Some(sol) = lu.solve(&yv) else { return };
        let val: f64 = sol.iter().map(|v| v.abs()).sum();
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            let mut x = vec![0.0; big_n];
            for (k, &c) in cols.iter().enumerate() {
                x[c] = sol[k];
            }
            best = Some((val, x));
        }
    });
    best
}

/// `max_{|S| = s} ‖A_S*A_S − I‖` by enumeration with a dense eigensolver.
pub fn brute_force_ric(a: &[Vec<f64>], s: usize) -> f64 {
    let full = to_dmatrix(a);
    let big_n = full.ncols();
    let mut worst = 0.0f64;
    for_each_subset(big_n, s, |cols| {
        let sub = full.select_columns(cols);
        let g = sub.transpose() * &sub;
        let ev = g.symmetric_eigen().eigenvalues;
        for v in ev.iter() {
            worst = worst.max((v - 1.0).abs());
        }
    });
    worst
}

/// Largest off-diagonal Gram entry in absolute value.
pub fn brute_force_coherence(a: &[Vec<f64>]) -> f64 {
    let full = to_dmatrix(a);
    let g = full.transpose() * &full;
    let mut mu = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            if i != j {
                mu = mu.max(g[(i, j)].abs());
            }
        }
    }
    mu
}

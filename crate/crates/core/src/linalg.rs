//! Small dense helpers: vector kernels, a pivot-checked Cholesky and
//! symmetric eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Lower-triangular Cholesky factor of a symmetric matrix.
///
/// Fails with [`Error::SingularGram`] when a pivot drops below `min_pivot`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
    min_pivot: f64,
}

impl Cholesky {
    pub fn factor(a: &DMatrix<f64>, min_pivot: f64) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky needs a square matrix");
        let mut l = DMatrix::<f64>::zeros(n, n);
        let mut smallest = f64::INFINITY;
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            smallest = smallest.min(d);
            if !(d >= min_pivot) {
                return Err(Error::SingularGram { pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut v = a[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / djj;
            }
        }
        Ok(Self {
            l,
            min_pivot: smallest,
        })
    }

    /// Smallest pivot encountered during factorization.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.nrows();
        let mut z = b.to_vec();
        for i in 0..n {
            let mut v = z[i];
            for k in 0..i {
                v -= self.l[(i, k)] * z[k];
            }
            z[i] = v / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in (i + 1)..n {
                v -= self.l[(k, i)] * z[k];
            }
            z[i] = v / self.l[(i, i)];
        }
        z
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `AᵀA` for the columns given (each of equal length).
pub fn gram_of_columns(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let s = cols.len();
    let mut g = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let v = dot(&cols[i], &cols[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

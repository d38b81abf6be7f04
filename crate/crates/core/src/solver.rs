//! Matrix-free basis pursuit: `min ‖x‖₁ subject to Ax = y`.
//!
//! The scheme is Douglas–Rachford splitting of `‖x‖₁ + ι{Ax = y}`:
//!
//! ```text
//! x_k     = P(z_k)                      projection onto {Ax = y}
//! v_k     = soft(2 x_k − z_k, γ)
//! z_{k+1} = z_k + v_k − x_k
//! ```
//!
//! The projection `P(z) = z − A*w` solves `(AA*) w = Az − y` by warm-started
//! conjugate gradients, so only `apply` and `adjoint_apply` are used. The
//! multiplier `ν = −w/γ` is a dual iterate: `A*ν = (x − z)/γ` tends to a
//! subgradient of `‖·‖₁` at the solution, and `⟨y, ν⟩ / max(1, ‖A*ν‖∞)` is a
//! valid lower bound on the optimal value. Convergence is declared only when
//! the relative duality gap and the feasibility residual are both below
//! tolerance.
//!
//! Every few iterations the support of `v` is polished: the equality system
//! restricted to that support is solved exactly and accepted when the
//! sign-consistent multiplier `A_S (A_S*A_S)^{-1} sgn` is dual feasible,
//! which certifies optimality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, gram_of_columns, norm1, norm2, norm_inf, Cholesky};
use crate::operators::StructuredOperator;
use crate::signals::SparseSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Bound on `‖Ax̂ − y‖₂ / ‖y‖₂`.
    pub feas_tol: f64,
    /// Bound on the relative duality gap `(‖x‖₁ − dual) / (1 + ‖x‖₁)`.
    pub opt_tol: f64,
    pub max_iter: usize,
    /// Soft-threshold level relative to `‖x_ln‖∞`, the least-norm solution.
    pub step: f64,
    pub cg_max_iter: usize,
    /// Attempt support polishing every this many iterations (0 disables).
    pub polish_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            opt_tol: 1e-7,
            max_iter: 20_000,
            step: 0.5,
            cg_max_iter: 1_000,
            polish_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.opt_tol > 0.0 && self.step > 0.0) {
            return Err(Error::InvalidArgument("solver tolerances and step must be > 0".into()));
        }
        if self.max_iter == 0 || self.cg_max_iter == 0 {
            return Err(Error::InvalidArgument("iteration limits must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIter,
    InfeasibleInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub l1_value: f64,
    pub feas_residual: f64,
    /// Relative duality gap certified at the returned point.
    pub opt_residual: f64,
    pub iterations: usize,
    pub polished: bool,
    pub status: SolverStatus,
}

/// Relative residual `‖Ax − y‖₂ / ‖y‖₂` (absolute when `y = 0`).
pub fn feasibility_residual(op: &StructuredOperator, x: &[f64], y: &[f64]) -> Result<f64> {
    let ax = op.apply(x)?;
    let r: f64 = ax.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let ny = norm2(y);
    Ok(if ny > 0.0 { r / ny } else { r })
}

struct Projector<'a> {
    op: &'a StructuredOperator,
    y: &'a [f64],
    /// absolute CG residual target on `‖(AA*)w − rhs‖₂`
    cg_tol: f64,
    cg_max_iter: usize,
}

impl Projector<'_> {
    fn normal_apply(&self, w: &[f64]) -> Vec<f64> {
        let t = self.op.adjoint_apply(w).expect("length checked");
        self.op.apply(&t).expect("length checked")
    }

    /// Solves `(AA*) w = rhs` in place starting from the current `w`.
    fn cg(&self, rhs: &[f64], w: &mut [f64]) {
        let aw = self.normal_apply(w);
        let mut r: Vec<f64> = rhs.iter().zip(&aw).map(|(b, a)| b - a).collect();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        for _ in 0..self.cg_max_iter {
            if rr.sqrt() <= self.cg_tol {
                break;
            }
            let ap = self.normal_apply(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rr / pap;
            for i in 0..w.len() {
                w[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..p.len() {
                p[i] = r[i] + beta * p[i];
            }
        }
    }

    /// `x = z − A*w` where `w` solves `(AA*) w = Az − y`.
    fn project(&self, z: &[f64], w: &mut [f64]) -> Vec<f64> {
        let az = self.op.apply(z).expect("length checked");
        let rhs: Vec<f64> = az.iter().zip(self.y).map(|(a, b)| a - b).collect();
        self.cg(&rhs, w);
        let atw = self.op.adjoint_apply(w).expect("length checked");
        z.iter().zip(&atw).map(|(a, b)| a - b).collect()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Lower bound `⟨y, ν⟩ / max(1, ‖A*ν‖∞)` on the optimal value.
fn dual_bound(y: &[f64], nu: &[f64], at_nu: &[f64]) -> f64 {
    dot(y, nu) / norm_inf(at_nu).max(1.0)
}

fn relative_gap(l1: f64, dual: f64) -> f64 {
    ((l1 - dual) / (1.0 + l1)).max(0.0)
}

struct Polished {
    x: Vec<f64>,
    l1: f64,
    feas: f64,
    gap: f64,
}

/// Exact solve on `support`, accepted only if feasible and dual-certified,
/// either by the least-squares multiplier or by the running one (`nu`, `at_nu`).
fn polish(
    op: &StructuredOperator,
    y: &[f64],
    support: &[usize],
    running_dual: (&[f64], &[f64]),
    cfg: &SolverConfig,
) -> Option<Polished> {
    if support.is_empty() || support.len() > op.rows() {
        return None;
    }
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| op.column(j)).collect();
    let gram = gram_of_columns(&cols);
    let ch = Cholesky::factor(&gram, 1e-12).ok()?;
    let aty: Vec<f64> = cols.iter().map(|c| dot(c, y)).collect();
    let xs = ch.solve(&aty);
    if xs.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return None;
    }
    let mut x = vec![0.0; op.cols()];
    for (&j, &v) in support.iter().zip(&xs) {
        x[j] = v;
    }
    let feas = feasibility_residual(op, &x, y).ok()?;
    if feas > cfg.feas_tol {
        return None;
    }
    let l1 = norm1(&x);
    let gap_running = relative_gap(l1, dual_bound(y, running_dual.0, running_dual.1));
    if gap_running <= cfg.opt_tol {
        return Some(Polished {
            x,
            l1,
            feas,
            gap: gap_running,
        });
    }
    let sgn: Vec<f64> = xs.iter().map(|v| v.signum()).collect();
    let h = ch.solve(&sgn);
    let mut nu = vec![0.0; op.rows()];
    for (c, &hj) in cols.iter().zip(&h) {
        for (n, &cv) in nu.iter_mut().zip(c) {
            *n += hj * cv;
        }
    }
    let at_nu = op.adjoint_apply(&nu).ok()?;
    let gap = relative_gap(l1, dual_bound(y, &nu, &at_nu));
    (gap <= cfg.opt_tol).then_some(Polished { x, l1, feas, gap })
}

pub fn basis_pursuit(op: &StructuredOperator, y: &[f64], cfg: &SolverConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let (n_rows, n_cols) = (op.rows(), op.cols());
    if y.len() != n_rows {
        return Err(Error::DimensionMismatch {
            what: "measurement vector",
            expected: n_rows,
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurement vector"));
    }
    let ny = norm2(y);
    if ny == 0.0 {
        return Ok(RecoveryResult {
            x_hat: vec![0.0; n_cols],
            l1_value: 0.0,
            feas_residual: 0.0,
            opt_residual: 0.0,
            iterations: 0,
            polished: false,
            status: SolverStatus::Converged,
        });
    }

    let proj = Projector {
        op,
        y,
        cg_tol: 1e-3 * cfg.feas_tol * ny,
        cg_max_iter: cfg.cg_max_iter,
    };
    let mut w = vec![0.0; n_rows];
    let zero = vec![0.0; n_cols];
    let x_ln = proj.project(&zero, &mut w);
    let feas_ln = feasibility_residual(op, &x_ln, y)?;
    if feas_ln > cfg.feas_tol.sqrt() {
        return Ok(RecoveryResult {
            l1_value: norm1(&x_ln),
            x_hat: x_ln,
            feas_residual: feas_ln,
            opt_residual: f64::INFINITY,
            iterations: 0,
            polished: false,
            status: SolverStatus::InfeasibleInput,
        });
    }

    let gamma = cfg.step * norm_inf(&x_ln);
    let mut z = x_ln;
    let mut x = z.clone();
    let mut last_gap = f64::INFINITY;
    let mut last_feas = feas_ln;

    for iter in 1..=cfg.max_iter {
        x = proj.project(&z, &mut w);
        let v: Vec<f64> = x
            .iter()
            .zip(&z)
            .map(|(xi, zi)| soft_threshold(2.0 * xi - zi, gamma))
            .collect();

        // x − z = −A*w, so ν = −w/γ has A*ν = (x − z)/γ without another adjoint.
        let nu: Vec<f64> = w.iter().map(|wi| -wi / gamma).collect();
        let at_nu: Vec<f64> = x.iter().zip(&z).map(|(xi, zi)| (xi - zi) / gamma).collect();
        let l1 = norm1(&x);
        last_gap = relative_gap(l1, dual_bound(y, &nu, &at_nu));
        if last_gap <= cfg.opt_tol {
            last_feas = feasibility_residual(op, &x, y)?;
            if last_feas <= cfg.feas_tol {
                return Ok(RecoveryResult {
                    x_hat: x,
                    l1_value: l1,
                    feas_residual: last_feas,
                    opt_residual: last_gap,
                    iterations: iter,
                    polished: false,
                    status: SolverStatus::Converged,
                });
            }
        }

        if cfg.polish_every > 0 && iter % cfg.polish_every == 0 {
            let support: Vec<usize> = (0..n_cols).filter(|&i| v[i] != 0.0).collect();
            {
                if let Some(p) = polish(op, y, &support, (&nu, &at_nu), cfg) {
                    return Ok(RecoveryResult {
                        x_hat: p.x,
                        l1_value: p.l1,
                        feas_residual: p.feas,
                        opt_residual: p.gap,
                        iterations: iter,
                        polished: true,
                        status: SolverStatus::Converged,
                    });
                }
            }
        }

        for i in 0..n_cols {
            z[i] += v[i] - x[i];
        }
    }

    last_feas = feasibility_residual(op, &x, y).unwrap_or(last_feas);
    Ok(RecoveryResult {
        l1_value: norm1(&x),
        x_hat: x,
        feas_residual: last_feas,
        opt_residual: last_gap,
        iterations: cfg.max_iter,
        polished: false,
        status: SolverStatus::MaxIter,
    })
}

/// `‖x̂ − x‖₂ ≤ tol · max(1, ‖x‖₂)`.
pub fn exact_recovery(x_hat: &[f64], x: &SparseSignal, tol: f64) -> Result<bool> {
    if x_hat.len() != x.ambient_dim() {
        return Err(Error::DimensionMismatch {
            what: "estimate length",
            expected: x.ambient_dim(),
            got: x_hat.len(),
        });
    }
    let truth = x.to_dense();
    let err = x_hat
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(err <= tol * x.l2_norm().max(1.0))
}

pub const DEFAULT_RECOVERY_TOL: f64 = 1e-4;

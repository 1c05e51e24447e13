//! Full condensing of OCP-structured QPs, split into a matrix phase and a
//! vector phase.
//!
//! The initial state step is eliminated through `Δs_0 = x - s_0` and every
//! later state through the linearized dynamics,
//!
//! ```text
//! Δs_{k+1} = A_k Δs_k + B_k Δu_k + c_k   =>   Δs_k = Γ_k ΔU + b_k,
//! ```
//!
//! where `Γ_k` only depends on the dynamics Jacobians and `b_k` collects the
//! parameter and the shooting gaps. [`condense_lhs`] builds every `Γ_k`,
//! the dense Hessian (and its Cholesky factor) and the dense inequality
//! matrix. [`condense_rhs_and_solve`] propagates `b_k`, forms the condensed
//! gradient and bounds, solves, and expands the solution. Equality
//! multipliers are recovered by a backward sweep through the stationarity
//! rows of the eliminated states.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::data::{OcpDims, QpMatrices, QpVectors};
use super::dense::{active_set_correction, factor_pd, solve_factored, QpOptions};
use crate::Result;

/// Matrix-phase result, valid for any vectors and parameter that belong to
/// the same matrices.
#[derive(Debug, Clone)]
pub struct CondensedLhs {
    matrices: QpMatrices,
    /// `Γ_k`, `n_x × N n_u`, for `k = 0..=N`.
    gamma: Vec<DMatrix<f64>>,
    hessian: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    ineq: DMatrix<f64>,
    regularization: f64,
}

impl CondensedLhs {
    pub fn dims(&self) -> &OcpDims {
        &self.matrices.dims
    }

    pub fn matrices(&self) -> &QpMatrices {
        &self.matrices
    }

    /// Dense Hessian over the stacked controls.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Dense inequality matrix over the stacked controls.
    pub fn inequality_matrix(&self) -> &DMatrix<f64> {
        &self.ineq
    }

    /// Ridge that had to be added to make the Hessian factorizable.
    pub fn regularization(&self) -> f64 {
        self.regularization
    }
}

/// Full-space primal-dual solution of an OCP-structured QP.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub dw: DVector<f64>,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
    pub active_set: Vec<usize>,
    pub iterations: usize,
}

pub fn condense_lhs(matrices: &QpMatrices) -> Result<CondensedLhs> {
    let d = &matrices.dims;
    let (nx, nu, n) = (d.n_x, d.n_u, d.horizon);
    let nv = d.n_controls();

    let mut gamma = Vec::with_capacity(n + 1);
    gamma.push(DMatrix::zeros(nx, nv));
    for k in 0..n {
        let mut next = &matrices.dyn_s[k] * &gamma[k];
        next.view_mut((0, k * nu), (nx, nu)).copy_from(&matrices.dyn_u[k]);
        gamma.push(next);
    }

    let mut hessian = DMatrix::zeros(nv, nv);
    for k in 0..=n {
        let q = matrices.hess[k].view((0, 0), (nx, nx));
        let g = &gamma[k];
        // Γ_k only has nonzero columns for controls before stage k.
        let cols = k * nu;
        if cols > 0 {
            let gk = g.columns(0, cols);
            let qg = q * gk;
            let mut block = hessian.view_mut((0, 0), (cols, cols));
            block.gemm_tr(1.0, &gk, &qg, 1.0);
        }
        if k < n {
            let s = matrices.hess[k].view((nx, 0), (nu, nx));
            let r = matrices.hess[k].view((nx, nx), (nu, nu));
            if cols > 0 {
                let sg = s * g.columns(0, cols);
                let mut row = hessian.view_mut((k * nu, 0), (nu, cols));
                row += &sg;
                let mut col = hessian.view_mut((0, k * nu), (cols, nu));
                col += sg.transpose();
            }
            let mut diag = hessian.view_mut((k * nu, k * nu), (nu, nu));
            diag += r;
        }
    }
    let sym = (&hessian + hessian.transpose()) * 0.5;
    let hessian = sym;
    let (chol, regularization) = factor_pd(&hessian)?;

    let mut ineq = DMatrix::zeros(d.n_h_total(), nv);
    for k in 0..=n {
        let m = d.n_h[k];
        if m == 0 {
            continue;
        }
        let row = d.ineq_offset(k);
        let mut block = ineq.view_mut((row, 0), (m, nv));
        block.gemm(1.0, &matrices.ineq_s[k], &gamma[k], 0.0);
        if k < n {
            let mut ublock = ineq.view_mut((row, k * nu), (m, nu));
            ublock += &matrices.ineq_u[k];
        }
    }

    Ok(CondensedLhs { matrices: matrices.clone(), gamma, hessian, chol, ineq, regularization })
}

pub fn condense_rhs_and_solve(lhs: &CondensedLhs, vectors: &QpVectors, x: &DVector<f64>) -> Result<QpSolution> {
    condense_rhs_and_solve_with(lhs, vectors, x, &QpOptions::default())
}

pub fn condense_rhs_and_solve_with(
    lhs: &CondensedLhs,
    vectors: &QpVectors,
    x: &DVector<f64>,
    opts: &QpOptions,
) -> Result<QpSolution> {
    let mats = &lhs.matrices;
    let d = &mats.dims;
    let (nx, nu, n) = (d.n_x, d.n_u, d.horizon);
    let nv = d.n_controls();

    // Affine part of every state step.
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(x - &vectors.init);
    for k in 0..n {
        let next = &mats.dyn_s[k] * &offsets[k] + &vectors.gaps[k];
        offsets.push(next);
    }

    let mut grad = DVector::zeros(nv);
    let mut bounds = DVector::zeros(d.n_h_total());
    for k in 0..=n {
        let b = &offsets[k];
        let q = mats.hess[k].view((0, 0), (nx, nx));
        let gs = q * b + vectors.grad[k].rows(0, nx);
        let cols = k * nu;
        if cols > 0 {
            let mut head = grad.rows_mut(0, cols);
            head.gemv_tr(1.0, &lhs.gamma[k].columns(0, cols), &gs, 1.0);
        }
        if k < n {
            let s = mats.hess[k].view((nx, 0), (nu, nx));
            let gu = s * b + vectors.grad[k].rows(nx, nu);
            let mut seg = grad.rows_mut(k * nu, nu);
            seg += gu;
        }
        let m = d.n_h[k];
        if m > 0 {
            let v = &mats.ineq_s[k] * b + &vectors.ineq[k];
            bounds.rows_mut(d.ineq_offset(k), m).copy_from(&v);
        }
    }

    let dense = solve_factored(&lhs.chol, &grad, &lhs.ineq, &bounds, opts)?;
    let active = dense.active_set;
    let mut du = dense.x;
    let mut mu = dense.mu;

    // The condensed Hessian of long unstable horizons is badly conditioned,
    // so the dense solution is refined with residuals from the stage-wise
    // recursions, which do not suffer from the condensation.
    let mut best: Option<(f64, Expansion)> = None;
    for _ in 0..=REFINEMENT_STEPS {
        let ex = expand(mats, vectors, &offsets, &du, &mu);
        let e_res = DVector::from_fn(active.len(), |i, _| ex.ineq[active[i]]);
        let size = ex.control_residual.amax().max(e_res.amax());
        let scale = 1.0 + grad.amax();
        if best.as_ref().is_none_or(|(b, _)| size < *b) {
            best = Some((size, ex.clone()));
        }
        if size <= REFINEMENT_TOL * scale {
            break;
        }
        let Some((step, dmu)) = active_set_correction(&lhs.chol, &lhs.ineq, &active, &ex.control_residual, &e_res)
        else {
            break;
        };
        du += step;
        for (i, &j) in active.iter().enumerate() {
            mu[j] = (mu[j] + dmu[i]).max(0.0);
        }
    }
    let (_, ex) = best.expect("at least one expansion");

    Ok(QpSolution { dw: ex.dw, lambda: ex.lambda, mu: ex.mu, active_set: active, iterations: dense.iterations })
}

const REFINEMENT_STEPS: usize = 4;
const REFINEMENT_TOL: f64 = 1e-14;

#[derive(Clone)]
struct Expansion {
    dw: DVector<f64>,
    lambda: DVector<f64>,
    mu: DVector<f64>,
    /// Stationarity residual of the control rows.
    control_residual: DVector<f64>,
    /// Linearized inequality values `h + HΔw`.
    ineq: DVector<f64>,
}

/// Forward simulation of the state steps and backward sweep for the
/// equality multipliers, given control steps and inequality multipliers.
fn expand(mats: &QpMatrices, vectors: &QpVectors, offsets: &[DVector<f64>], du: &DVector<f64>, mu: &DVector<f64>) -> Expansion {
    let d = &mats.dims;
    let (nx, nu, n) = (d.n_x, d.n_u, d.horizon);

    let mut dw = DVector::zeros(d.n_w());
    let mut ds = offsets[0].clone();
    for k in 0..=n {
        dw.rows_mut(d.state_offset(k), nx).copy_from(&ds);
        if k < n {
            let u = du.rows(k * nu, nu);
            dw.rows_mut(d.control_offset(k), nu).copy_from(&u);
            ds = &mats.dyn_s[k] * &ds + &mats.dyn_u[k] * u + &vectors.gaps[k];
        }
    }

    let mut ineq = DVector::zeros(d.n_h_total());
    for k in 0..=n {
        let m = d.n_h[k];
        if m == 0 {
            continue;
        }
        let mut v = &vectors.ineq[k] + &mats.ineq_s[k] * dw.rows(d.state_offset(k), nx);
        if k < n {
            v += &mats.ineq_u[k] * dw.rows(d.control_offset(k), nu);
        }
        ineq.rows_mut(d.ineq_offset(k), m).copy_from(&v);
    }

    // Stationarity w.r.t. s_k determines the multiplier of the row that
    // eliminated s_k; the control rows are what is left over.
    let mut lambda = DVector::zeros(d.n_g());
    let mut control_residual = DVector::zeros(d.n_controls());
    let mut pi_next: Option<DVector<f64>> = None;
    for k in (0..=n).rev() {
        let width = d.stage_width(k);
        let y = dw.rows(d.state_offset(k), width);
        let mut r = &mats.hess[k] * y + &vectors.grad[k];
        if d.n_h[k] > 0 {
            let mk = mu.rows(d.ineq_offset(k), d.n_h[k]);
            let mut rs = r.rows_mut(0, nx);
            rs -= mats.ineq_s[k].tr_mul(&mk);
            if k < n {
                let mut ru = r.rows_mut(nx, nu);
                ru -= mats.ineq_u[k].tr_mul(&mk);
            }
        }
        if let Some(pi) = &pi_next {
            let mut rs = r.rows_mut(0, nx);
            rs -= mats.dyn_s[k].tr_mul(pi);
            let mut ru = r.rows_mut(nx, nu);
            ru -= mats.dyn_u[k].tr_mul(pi);
        }
        if k < n {
            control_residual.rows_mut(k * nu, nu).copy_from(&r.rows(nx, nu));
        }
        let rs = r.rows(0, nx).into_owned();
        if k > 0 {
            // Row of gap k-1 carries -I on s_k.
            let pi = -rs;
            lambda.rows_mut(d.gap_offset(k - 1), nx).copy_from(&pi);
            pi_next = Some(pi);
        } else {
            lambda.rows_mut(0, nx).copy_from(&rs);
        }
    }
    Expansion { dw, lambda, mu: mu.clone(), control_residual, ineq }
}

/// Matrix and vector phase in one call.
pub fn condense_and_solve(matrices: &QpMatrices, vectors: &QpVectors, x: &DVector<f64>) -> Result<QpSolution> {
    let lhs = condense_lhs(matrices)?;
    condense_rhs_and_solve(&lhs, vectors, x)
}

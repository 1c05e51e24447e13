//! Dense strictly convex QP solver.
//!
//! Solves
//!
//! ```text
//! min  ½ xᵀ H x + qᵀ x   s.t.   C x + r >= 0
//! ```
//!
//! with the dual active-set method of Goldfarb and Idnani in range-space
//! form. Starting from the unconstrained minimizer, the most violated row is
//! added at each major iteration; blocking active rows are dropped when
//! their multiplier would become negative. Ties are broken by the lowest
//! row index. A warm-start working set is tried first and accepted when it
//! already yields a KKT point.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 200;
/// Ridge added to a Hessian whose Cholesky factorization fails.
pub const REGULARIZATION: f64 = 1e-8;

const FEAS_TOL: f64 = 1e-11;
const DEP_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct QpOptions {
    pub max_iter: usize,
    pub warm_start: Option<Vec<usize>>,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { max_iter: DEFAULT_MAX_ITER, warm_start: None }
    }
}

#[derive(Debug, Clone)]
pub struct DenseQpSolution {
    pub x: DVector<f64>,
    /// Multipliers of all rows, zero for inactive rows.
    pub mu: DVector<f64>,
    /// Active rows in ascending order.
    pub active_set: Vec<usize>,
    /// Number of active-set changes.
    pub iterations: usize,
}

/// Cholesky factor of a symmetric matrix, regularized once with
/// [`REGULARIZATION`] if the plain factorization fails.
pub fn factor_pd(h: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(h.clone()) {
        return Ok((c, 0.0));
    }
    let n = h.nrows();
    let reg = h + DMatrix::identity(n, n) * REGULARIZATION;
    Cholesky::new(reg)
        .map(|c| (c, REGULARIZATION))
        .ok_or(Error::NotPositiveDefinite)
}

pub fn solve_dense_qp(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    r: &DVector<f64>,
) -> Result<DenseQpSolution> {
    solve_dense_qp_with(h, q, c, r, &QpOptions::default())
}

pub fn solve_dense_qp_with(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    r: &DVector<f64>,
    opts: &QpOptions,
) -> Result<DenseQpSolution> {
    let (chol, _) = factor_pd(h)?;
    solve_factored(&chol, q, c, r, opts)
}

struct Workspace<'a> {
    c: &'a DMatrix<f64>,
    /// `H⁻¹ Cᵀ`
    hinv_ct: DMatrix<f64>,
}

impl Workspace<'_> {
    /// `K = C_A H⁻¹ C_Aᵀ` restricted to `active`.
    fn reduced(&self, active: &[usize]) -> DMatrix<f64> {
        let k = active.len();
        DMatrix::from_fn(k, k, |i, j| self.c.row(active[i]).dot(&self.hinv_ct.column(active[j]).transpose()))
    }
}

pub(crate) fn solve_factored(
    chol: &Cholesky<f64, Dyn>,
    q: &DVector<f64>,
    c: &DMatrix<f64>,
    r: &DVector<f64>,
    opts: &QpOptions,
) -> Result<DenseQpSolution> {
    let n = q.len();
    let m = c.nrows();
    assert_eq!(c.ncols(), n, "constraint matrix width");
    assert_eq!(r.len(), m, "constraint residual length");

    let hinv_q = chol.solve(q);
    let ws = Workspace { c, hinv_ct: chol.solve(&c.transpose()) };

    if let Some(warm) = &opts.warm_start {
        if let Some(sol) = try_working_set(&ws, &hinv_q, r, warm) {
            return Ok(sol);
        }
    }

    let mut x = -&hinv_q;
    let mut active: Vec<usize> = Vec::new();
    let mut mu_active: Vec<f64> = Vec::new();
    let mut iterations = 0;

    loop {
        let slack = c * &x + r;
        let mut candidate: Option<(usize, f64)> = None;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let tol = FEAS_TOL * (1.0 + r[i].abs());
            if slack[i] < -tol && candidate.is_none_or(|(_, s)| slack[i] < s) {
                candidate = Some((i, slack[i]));
            }
        }
        let Some((p, _)) = candidate else {
            break;
        };

        let np = c.row(p);
        let hinv_np = ws.hinv_ct.column(p).into_owned();
        let mut mu_p = 0.0;
        loop {
            iterations += 1;
            if iterations > opts.max_iter {
                return Err(Error::QpIterationLimit(opts.max_iter));
            }
            // Change of active multipliers and primal direction per unit of mu_p.
            let dmu = if active.is_empty() {
                DVector::zeros(0)
            } else {
                let kmat = ws.reduced(&active);
                let rhs = DVector::from_fn(active.len(), |i, _| c.row(active[i]).dot(&hinv_np.transpose()));
                match kmat.clone().cholesky() {
                    Some(kc) => kc.solve(&rhs),
                    None => kmat.lu().solve(&rhs).ok_or(Error::NotPositiveDefinite)?,
                }
            };
            let mut z = hinv_np.clone();
            for (i, &j) in active.iter().enumerate() {
                z.axpy(-dmu[i], &ws.hinv_ct.column(j), 1.0);
            }

            let curvature = np.dot(&z.transpose());
            let s_p = np.dot(&x.transpose()) + r[p];
            let full_step = if curvature > DEP_TOL * (1.0 + np.norm_squared()) {
                Some(-s_p / curvature)
            } else {
                None
            };
            let mut partial: Option<(f64, usize)> = None;
            for (i, &j) in active.iter().enumerate() {
                if dmu[i] > DEP_TOL {
                    let t = mu_active[i] / dmu[i];
                    let better = match partial {
                        None => true,
                        Some((tb, ib)) => t < tb || (t == tb && j < active[ib]),
                    };
                    if better {
                        partial = Some((t, i));
                    }
                }
            }

            match (full_step, partial) {
                (None, None) => {
                    let mut violated = active.clone();
                    violated.push(p);
                    violated.sort_unstable();
                    return Err(Error::QpInfeasible { violated });
                }
                (Some(t1), Some((t2, drop))) if t2 < t1 => {
                    x.axpy(t2, &z, 1.0);
                    take_step(&mut mu_active, &dmu, t2);
                    mu_p += t2;
                    active.remove(drop);
                    mu_active.remove(drop);
                }
                (None, Some((t2, drop))) => {
                    take_step(&mut mu_active, &dmu, t2);
                    mu_p += t2;
                    active.remove(drop);
                    mu_active.remove(drop);
                }
                (Some(t1), _) => {
                    x.axpy(t1, &z, 1.0);
                    take_step(&mut mu_active, &dmu, t1);
                    mu_p += t1;
                    active.push(p);
                    mu_active.push(mu_p);
                    break;
                }
            }
        }
    }

    Ok(finish(x, m, &active, &mu_active, iterations))
}

/// Newton correction of a KKT point on a fixed active set: returns `(δ, δμ_A)`
/// with `Hδ + g_res - C_Aᵀδμ_A = 0` and `C_A δ + e_res = 0`, where `g_res` is
/// the stationarity residual and `e_res` the residual of the active rows.
pub(crate) fn active_set_correction(
    chol: &Cholesky<f64, Dyn>,
    c: &DMatrix<f64>,
    active: &[usize],
    g_res: &DVector<f64>,
    e_res: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let hinv_g = chol.solve(g_res);
    if active.is_empty() {
        return Some((-hinv_g, DVector::zeros(0)));
    }
    let ca = c.select_rows(active);
    let hinv_ct = chol.solve(&ca.transpose());
    let k = &ca * &hinv_ct;
    let rhs = &ca * &hinv_g - e_res;
    let dmu = k.cholesky()?.solve(&rhs);
    Some((&hinv_ct * &dmu - hinv_g, dmu))
}

fn take_step(mu: &mut [f64], dmu: &DVector<f64>, t: f64) {
    for (m, d) in mu.iter_mut().zip(dmu.iter()) {
        *m = (*m - t * d).max(0.0);
    }
}

fn finish(x: DVector<f64>, m: usize, active: &[usize], mu_active: &[f64], iterations: usize) -> DenseQpSolution {
    let mut mu = DVector::zeros(m);
    let mut pairs: Vec<(usize, f64)> = active.iter().copied().zip(mu_active.iter().copied()).collect();
    pairs.sort_unstable_by_key(|p| p.0);
    for &(i, v) in &pairs {
        mu[i] = v.max(0.0);
    }
    DenseQpSolution {
        x,
        mu,
        active_set: pairs.into_iter().map(|p| p.0).collect(),
        iterations,
    }
}

/// Solves the equality-constrained problem on `warm` and accepts it if it is
/// primal feasible with nonnegative multipliers.
fn try_working_set(ws: &Workspace, hinv_q: &DVector<f64>, r: &DVector<f64>, warm: &[usize]) -> Option<DenseQpSolution> {
    let m = ws.c.nrows();
    let mut active: Vec<usize> = warm.iter().copied().filter(|&i| i < m).collect();
    active.sort_unstable();
    active.dedup();
    let mu_active = if active.is_empty() {
        DVector::zeros(0)
    } else {
        let kmat = ws.reduced(&active);
        let rhs = DVector::from_fn(active.len(), |i, _| ws.c.row(active[i]).dot(&hinv_q.transpose()) - r[active[i]]);
        kmat.cholesky()?.solve(&rhs)
    };
    if mu_active.iter().any(|&v| v < -FEAS_TOL) {
        return None;
    }
    let mut x = -hinv_q;
    for (i, &j) in active.iter().enumerate() {
        x.axpy(mu_active[i], &ws.hinv_ct.column(j), 1.0);
    }
    let slack = ws.c * &x + r;
    for i in 0..m {
        if slack[i] < -FEAS_TOL * (1.0 + r[i].abs()) {
            return None;
        }
    }
    Some(finish(x, m, &active, mu_active.as_slice(), 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_lower_bound() {
        let h = DMatrix::from_element(1, 1, 1.0);
        let q = DVector::zeros(1);
        let c = DMatrix::from_element(1, 1, 1.0);
        let r = DVector::from_element(1, -1.0);
        let sol = solve_dense_qp(&h, &q, &c, &r).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(sol.mu[0], 1.0, epsilon = 1e-14);
        assert_eq!(sol.active_set, vec![0]);
    }

    #[test]
    fn unconstrained_is_newton_step() {
        let h = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let q = DVector::from_vec(vec![1.0, -2.0]);
        let sol = solve_dense_qp(&h, &q, &DMatrix::zeros(0, 2), &DVector::zeros(0)).unwrap();
        let expected = -h.clone().lu().solve(&q).unwrap();
        assert!((sol.x - expected).amax() < 1e-14);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn infeasible_box_is_reported() {
        // x >= 1 and -x >= 0 (x <= 0)
        let h = DMatrix::from_element(1, 1, 1.0);
        let q = DVector::zeros(1);
        let c = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let r = DVector::from_vec(vec![-1.0, 0.0]);
        match solve_dense_qp(&h, &q, &c, &r) {
            Err(Error::QpInfeasible { violated }) => assert_eq!(violated, vec![0, 1]),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn warm_start_with_optimal_set_takes_no_iterations() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let q = DVector::from_vec(vec![-2.0, -5.0]);
        // x0 <= 0.5, x1 <= 1, x0 + x1 >= 0
        let c = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        let r = DVector::from_vec(vec![0.5, 1.0, 0.0]);
        let cold = solve_dense_qp(&h, &q, &c, &r).unwrap();
        assert!(cold.iterations > 0);
        let warm = solve_dense_qp_with(
            &h,
            &q,
            &c,
            &r,
            &QpOptions { warm_start: Some(cold.active_set.clone()), ..Default::default() },
        )
        .unwrap();
        assert_eq!(warm.iterations, 0);
        assert_eq!(warm.active_set, cold.active_set);
        assert!((warm.x - cold.x).amax() < 1e-14);
    }

    #[test]
    fn bad_warm_start_falls_back_to_cold_solve() {
        let h = DMatrix::identity(2, 2);
        let q = DVector::from_vec(vec![1.0, 1.0]);
        let c = DMatrix::identity(2, 2);
        let r = DVector::from_vec(vec![-1.0, 3.0]);
        let sol = solve_dense_qp_with(
            &h,
            &q,
            &c,
            &r,
            &QpOptions { warm_start: Some(vec![1]), ..Default::default() },
        )
        .unwrap();
        assert_eq!(sol.active_set, vec![0]);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(sol.x[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn indefinite_hessian_is_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let err = solve_dense_qp(&h, &DVector::zeros(2), &DMatrix::zeros(0, 2), &DVector::zeros(0)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite));
    }

    #[test]
    fn iteration_cap_is_enforced() {
        let h = DMatrix::identity(3, 3);
        let q = DVector::zeros(3);
        let c = DMatrix::identity(3, 3);
        let r = DVector::from_element(3, -1.0);
        let err = solve_dense_qp_with(&h, &q, &c, &r, &QpOptions { max_iter: 2, warm_start: None }).unwrap_err();
        assert!(matches!(err, Error::QpIterationLimit(2)));
    }
}

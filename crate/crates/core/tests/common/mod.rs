//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use asrti::qp::{OcpDims, QpMatrices, QpVectors};
use asrti::OdeModel;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random symmetric positive definite matrix with eigenvalues bounded below by `floor`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, floor: f64) -> DMatrix<f64> {
    let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &l * l.transpose() + DMatrix::identity(n, n) * floor
}

pub fn random_matrix<R: Rng>(rng: &mut R, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// Solution of a QP with equality constraints `E x + e = 0` and
/// inequalities `C x + r >= 0`, multipliers signed so that
/// `H x + q - Eᵀλ - Cᵀμ = 0`.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
}

/// Tries every subset of inequality rows as the active set, smallest
/// subsets first, and returns the first KKT point found.
pub fn enumerate_qp(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    e_mat: &DMatrix<f64>,
    e: &DVector<f64>,
    c: &DMatrix<f64>,
    r: &DVector<f64>,
) -> Option<OracleSolution> {
    let n = q.len();
    let p = e.len();
    let m = r.len();
    assert!(m < 20, "enumeration is exponential in the row count");
    let mut subsets: Vec<u32> = (0..(1u32 << m)).collect();
    subsets.sort_by_key(|s| s.count_ones());
    for s in subsets {
        let rows: Vec<usize> = (0..m).filter(|i| s & (1 << i) != 0).collect();
        let k = rows.len();
        if p + k > n {
            continue;
        }
        let dim = n + p + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        rhs.rows_mut(0, n).copy_from(&(-q));
        for i in 0..p {
            for j in 0..n {
                kkt[(j, n + i)] = -e_mat[(i, j)];
                kkt[(n + i, j)] = e_mat[(i, j)];
            }
            rhs[n + i] = -e[i];
        }
        for (a, &row) in rows.iter().enumerate() {
            for j in 0..n {
                kkt[(j, n + p + a)] = -c[(row, j)];
                kkt[(n + p + a, j)] = c[(row, j)];
            }
            rhs[n + p + a] = -r[row];
        }
        let lu = kkt.clone().lu();
        let Some(sol) = lu.solve(&rhs) else { continue };
        if !sol.iter().all(|v| v.is_finite()) {
            continue;
        }
        // Reject numerically singular systems.
        if (&kkt * &sol - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let scale = 1.0 + x.amax();
        let slack = c * &x + r;
        if slack.iter().any(|v| *v < -1e-10 * scale) {
            continue;
        }
        let mut mu = DVector::zeros(m);
        let mut ok = true;
        for (a, &row) in rows.iter().enumerate() {
            let v = sol[n + p + a];
            if v < -1e-10 * scale {
                ok = false;
            }
            mu[row] = v;
        }
        if ok {
            return Some(OracleSolution { x, lambda: sol.rows(n, p).into_owned(), mu });
        }
    }
    None
}

/// Random OCP-structured QP: stage Hessians are SPD, dynamics Jacobians
/// have moderate norm, the inequality rows bound the controls from both
/// sides and add one random state row per stage. The zero step of the
/// controls is strictly feasible for the control bounds.
pub fn random_ocp_qp<R: Rng>(rng: &mut R, nx: usize, nu: usize, horizon: usize, state_rows: bool) -> (QpMatrices, QpVectors, DVector<f64>) {
    let mut n_h = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let mut m = if k < horizon { 2 * nu } else { 0 };
        if state_rows && k > 0 {
            m += 1;
        }
        n_h.push(m);
    }
    let dims = OcpDims::new(nx, nu, horizon, n_h.clone());
    let mut hess = Vec::new();
    let mut grad = Vec::new();
    let mut dyn_s = Vec::new();
    let mut dyn_u = Vec::new();
    let mut gaps = Vec::new();
    let mut ineq_s = Vec::new();
    let mut ineq_u = Vec::new();
    let mut ineq = Vec::new();
    for k in 0..=horizon {
        let width = if k < horizon { nx + nu } else { nx };
        hess.push(random_spd(rng, width, 0.5));
        grad.push(random_vector(rng, width, 2.0));
        let m = n_h[k];
        let mut js = DMatrix::zeros(m, nx);
        let mut ju = DMatrix::zeros(m, if k < horizon { nu } else { 0 });
        let mut v = DVector::zeros(m);
        let mut row = 0;
        if k < horizon {
            dyn_s.push(random_matrix(rng, nx, nx, 0.6) + DMatrix::identity(nx, nx) * 0.5);
            dyn_u.push(random_matrix(rng, nx, nu, 1.0));
            gaps.push(random_vector(rng, nx, 0.3));
            for i in 0..nu {
                ju[(row, i)] = 1.0;
                v[row] = rng.random_range(0.05..1.0);
                ju[(row + nu, i)] = -1.0;
                v[row + nu] = rng.random_range(0.05..1.0);
                row += 1;
            }
            row += nu;
        }
        if state_rows && k > 0 {
            for j in 0..nx {
                js[(row, j)] = rng.random_range(-1.0..1.0);
            }
            v[row] = rng.random_range(0.5..3.0);
        }
        ineq_s.push(js);
        ineq_u.push(ju);
        ineq.push(v);
    }
    let x = random_vector(rng, nx, 1.0);
    let init = random_vector(rng, nx, 1.0);
    (
        QpMatrices { dims, hess, dyn_s, dyn_u, ineq_s, ineq_u },
        QpVectors { grad, init, gaps, ineq },
        x,
    )
}

/// Classic fourth-order Runge-Kutta with `steps` equal steps.
pub fn rk4<M: OdeModel>(model: &M, x: &DVector<f64>, u: &DVector<f64>, h: f64, steps: usize) -> DVector<f64> {
    let dt = h / steps as f64;
    let mut s = x.clone();
    for _ in 0..steps {
        let k1 = model.rhs(&s, u);
        let k2 = model.rhs(&(&s + &k1 * (dt / 2.0)), u);
        let k3 = model.rhs(&(&s + &k2 * (dt / 2.0)), u);
        let k4 = model.rhs(&(&s + &k3 * dt), u);
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    s
}

/// Van der Pol oscillator with an additive input on the velocity.
pub struct VanDerPol {
    pub damping: f64,
}

impl OdeModel for VanDerPol {
    fn n_x(&self) -> usize {
        2
    }
    fn n_u(&self) -> usize {
        1
    }
    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let m = self.damping;
        DVector::from_vec(vec![x[1], m * (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0]])
    }
    fn rhs_jacobians(&self, x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = self.damping;
        let jx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0 * m * x[0] * x[1] - 1.0, m * (1.0 - x[0] * x[0])]);
        let ju = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        (jx, ju)
    }
}

/// Least-squares slope of `log y` over `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Dense full-space data `(H, g, G, e, C, h)` of an OCP QP at parameter `x`.
pub fn full_space(m: &QpMatrices, v: &QpVectors, x: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let d = &m.dims;
    (
        m.dense_hessian(),
        v.gradient_full(d),
        m.dense_equality_jacobian(),
        v.equality_full(d, x),
        m.dense_inequality_jacobian(),
        v.inequality_full(d),
    )
}

//! Two-stage Radau IIA (order 3) integration with exact sensitivities.
//!
//! One step solves the stage-value system
//!
//! ```text
//! Y_i = x + h * sum_j a_ij f(Y_j, u),   i = 1, 2
//! ```
//!
//! by full Newton. The method is stiffly accurate, so `x_next = Y_2`.
//! Sensitivities follow from the implicit-function theorem applied to the
//! converged stage system, using the factorization of the stage Jacobian
//! at the converged point.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Radau IIA stage matrix for `c = (1/3, 1)`.
const A11: f64 = 5.0 / 12.0;
const A12: f64 = -1.0 / 12.0;
const A21: f64 = 3.0 / 4.0;
const A22: f64 = 1.0 / 4.0;

/// Newton tolerance on the ∞-norm of the stage residual.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 20;

/// Continuous-time model `ẋ = f(x, u)` with analytic Jacobians.
pub trait OdeModel: Send + Sync {
    fn n_x(&self) -> usize;
    fn n_u(&self) -> usize;
    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// Returns `(∂f/∂x, ∂f/∂u)`.
    fn rhs_jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub x_next: DVector<f64>,
    /// `∂x_next/∂x`, `n_x × n_x`.
    pub sens_x: DMatrix<f64>,
    /// `∂x_next/∂u`, `n_x × n_u`.
    pub sens_u: DMatrix<f64>,
    pub newton_iters: usize,
}

struct ConvergedStages {
    stages: DVector<f64>,
    /// LU of the stage Jacobian at `stages`, present when requested.
    jacobian: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    newton_iters: usize,
}

fn solve_stages<M: OdeModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    u: &DVector<f64>,
    h: f64,
    want_jacobian: bool,
) -> Result<ConvergedStages> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::config(format!("step length must be positive, got {h}")));
    }
    let n = x.len();
    let mut stages = DVector::zeros(2 * n);
    stages.rows_mut(0, n).copy_from(x);
    stages.rows_mut(n, n).copy_from(x);

    let mut iters = 0;
    loop {
        let y1 = stages.rows(0, n).into_owned();
        let y2 = stages.rows(n, n).into_owned();
        let f1 = model.rhs(&y1, u);
        let f2 = model.rhs(&y2, u);

        let mut residual = DVector::zeros(2 * n);
        residual
            .rows_mut(0, n)
            .copy_from(&(&y1 - x - (&f1 * (h * A11) + &f2 * (h * A12))));
        residual
            .rows_mut(n, n)
            .copy_from(&(&y2 - x - (&f1 * (h * A21) + &f2 * (h * A22))));
        let res_norm = residual.amax();
        if !res_norm.is_finite() {
            return Err(Error::Integration { iterations: iters, residual: res_norm });
        }
        let converged = res_norm <= NEWTON_TOL;
        if converged && !want_jacobian {
            return Ok(ConvergedStages { stages, jacobian: None, newton_iters: iters });
        }
        if !converged && iters >= NEWTON_MAX_ITER {
            return Err(Error::Integration { iterations: iters, residual: res_norm });
        }

        let (j1, _) = model.rhs_jacobians(&y1, u);
        let (j2, _) = model.rhs_jacobians(&y2, u);
        let mut jac = DMatrix::identity(2 * n, 2 * n);
        for (r, c, a, j) in [(0, 0, A11, &j1), (0, n, A12, &j2), (n, 0, A21, &j1), (n, n, A22, &j2)] {
            let mut blk = jac.view_mut((r, c), (n, n));
            blk -= j * (h * a);
        }
        let lu = jac.lu();

        if converged {
            return Ok(ConvergedStages { stages, jacobian: Some(lu), newton_iters: iters });
        }
        let delta = lu
            .solve(&(-residual))
            .ok_or(Error::Integration { iterations: iters, residual: res_norm })?;
        stages += delta;
        iters += 1;
    }
}

/// One Radau IIA step of length `h` with constant control `u`, including
/// the sensitivities of the end state.
pub fn radau3_step<M: OdeModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    u: &DVector<f64>,
    h: f64,
) -> Result<IntegrationResult> {
    let n = x.len();
    let nu = u.len();
    let conv = solve_stages(model, x, u, h, true)?;
    let lu = conv.jacobian.expect("jacobian requested");

    let y1 = conv.stages.rows(0, n).into_owned();
    let y2 = conv.stages.rows(n, n).into_owned();
    let (_, b1) = model.rhs_jacobians(&y1, u);
    let (_, b2) = model.rhs_jacobians(&y2, u);

    // J dY/d[x u] = [I I; h(A ⊗ B)]
    let mut rhs = DMatrix::zeros(2 * n, n + nu);
    for i in 0..n {
        rhs[(i, i)] = 1.0;
        rhs[(n + i, i)] = 1.0;
    }
    rhs.view_mut((0, n), (n, nu))
        .copy_from(&(&b1 * (h * A11) + &b2 * (h * A12)));
    rhs.view_mut((n, n), (n, nu))
        .copy_from(&(&b1 * (h * A21) + &b2 * (h * A22)));
    let dy = lu.solve(&rhs).ok_or(Error::Integration {
        iterations: conv.newton_iters,
        residual: f64::NAN,
    })?;

    Ok(IntegrationResult {
        x_next: y2,
        sens_x: dy.view((n, 0), (n, n)).into_owned(),
        sens_u: dy.view((n, n), (n, nu)).into_owned(),
        newton_iters: conv.newton_iters,
    })
}

/// Radau step without sensitivities.
pub fn radau3_advance<M: OdeModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    u: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let n = x.len();
    let conv = solve_stages(model, x, u, h, false)?;
    Ok(conv.stages.rows(n, n).into_owned())
}

/// Integrates the plant over `dt` with `substeps` equal Radau steps and a
/// zero-order-hold control.
pub fn simulate_plant<M: OdeModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dt: f64,
    substeps: usize,
) -> Result<DVector<f64>> {
    if substeps == 0 {
        return Err(Error::config("plant simulation needs at least one substep"));
    }
    let h = dt / substeps as f64;
    let mut state = x.clone();
    for _ in 0..substeps {
        state = radau3_advance(model, &state, u, h)?;
    }
    Ok(state)
}

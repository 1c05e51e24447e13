use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dare::dare_terminal_cost;
use super::BenchmarkConfig;
use crate::integrator::{radau3_step, OdeModel};
use crate::nlp::{Bounds, OcpSpec, QuadraticStageCost, QuadraticTerminalCost, RadauDynamics};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumParams {
    /// kg
    pub cart_mass: f64,
    /// kg
    pub pole_mass: f64,
    /// m
    pub pole_length: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams { cart_mass: 1.0, pole_mass: 0.1, pole_length: 0.8, gravity: 9.81 }
    }
}

/// Inverted pendulum on a cart.
///
/// State `[p, θ, v, ω]`: cart position, pole angle (0 = upright), cart
/// velocity, angular velocity. Control: horizontal force on the cart.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PendulumModel {
    pub params: PendulumParams,
}

impl PendulumModel {
    pub fn new(params: PendulumParams) -> Result<Self> {
        let p = &params;
        if !(p.cart_mass > 0.0 && p.pole_mass > 0.0 && p.pole_length > 0.0) || !p.gravity.is_finite() {
            return Err(Error::config("pendulum masses and length must be positive"));
        }
        Ok(PendulumModel { params })
    }
}

impl OdeModel for PendulumModel {
    fn n_x(&self) -> usize {
        4
    }

    fn n_u(&self) -> usize {
        1
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let PendulumParams { cart_mass: mc, pole_mass: m, pole_length: l, gravity: g } = self.params;
        let (theta, v, omega, force) = (x[1], x[2], x[3], u[0]);
        let (s, c) = theta.sin_cos();
        let den = mc + m - m * c * c;
        let vdot = (-m * l * s * omega * omega + m * g * c * s + force) / den;
        let wdot = (-m * l * c * s * omega * omega + force * c + (mc + m) * g * s) / (l * den);
        DVector::from_vec(vec![v, omega, vdot, wdot])
    }

    fn rhs_jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let PendulumParams { cart_mass: mc, pole_mass: m, pole_length: l, gravity: g } = self.params;
        let (theta, omega, force) = (x[1], x[3], u[0]);
        let (s, c) = theta.sin_cos();
        let w2 = omega * omega;
        let den = mc + m - m * c * c;
        let dden = 2.0 * m * s * c;

        let n1 = -m * l * s * w2 + m * g * c * s + force;
        let dn1_dtheta = -m * l * c * w2 + m * g * (c * c - s * s);
        let dn1_domega = -2.0 * m * l * s * omega;

        let n2 = -m * l * c * s * w2 + force * c + (mc + m) * g * s;
        let dn2_dtheta = -m * l * (c * c - s * s) * w2 - force * s + (mc + m) * g * c;
        let dn2_domega = -2.0 * m * l * c * s * omega;

        let mut jx = DMatrix::zeros(4, 4);
        jx[(0, 2)] = 1.0;
        jx[(1, 3)] = 1.0;
        jx[(2, 1)] = (dn1_dtheta * den - n1 * dden) / (den * den);
        jx[(2, 3)] = dn1_domega / den;
        jx[(3, 1)] = (dn2_dtheta * den - n2 * dden) / (l * den * den);
        jx[(3, 3)] = dn2_domega / (l * den);

        let mut ju = DMatrix::zeros(4, 1);
        ju[(2, 0)] = 1.0 / den;
        ju[(3, 0)] = c / (l * den);
        (jx, ju)
    }
}

/// Interval lengths: the first equals the sampling time, the remaining
/// `intervals - 1` split the rest of the horizon uniformly.
pub fn nonuniform_grid(horizon: f64, sampling_time: f64, intervals: usize) -> Result<Vec<f64>> {
    if intervals == 0 || !(horizon > 0.0) || !(sampling_time > 0.0) {
        return Err(Error::config("grid needs a positive horizon, sampling time and interval count"));
    }
    if intervals == 1 {
        return Ok(vec![horizon]);
    }
    if sampling_time >= horizon {
        return Err(Error::config("sampling time must be shorter than the horizon"));
    }
    let rest = (horizon - sampling_time) / (intervals - 1) as f64;
    let mut grid = vec![rest; intervals];
    grid[0] = sampling_time;
    Ok(grid)
}

pub fn uniform_grid(horizon: f64, intervals: usize) -> Result<Vec<f64>> {
    if intervals == 0 || !(horizon > 0.0) {
        return Err(Error::config("grid needs a positive horizon and interval count"));
    }
    Ok(vec![horizon / intervals as f64; intervals])
}

/// Terminal weight from the DARE of the steady-state linearization,
/// discretized over one sampling interval with the time-scaled stage weights.
pub fn pendulum_terminal_weight(cfg: &BenchmarkConfig) -> Result<DMatrix<f64>> {
    let model = PendulumModel::new(cfg.model)?;
    let dt = cfg.scenario.dt;
    let lin = radau3_step(&model, &DVector::zeros(4), &DVector::zeros(1), dt)?;
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&cfg.q_diag)) * dt;
    let r = DMatrix::from_element(1, 1, cfg.r * dt);
    dare_terminal_cost(&lin.sens_x, &lin.sens_u, &q, &r)
}

fn pendulum_ocp(cfg: &BenchmarkConfig, dt_grid: Vec<f64>) -> Result<OcpSpec> {
    let model = Arc::new(PendulumModel::new(cfg.model)?);
    let p = pendulum_terminal_weight(cfg)?;
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&cfg.q_diag));
    let r = DMatrix::from_element(1, 1, cfg.r);
    Ok(OcpSpec {
        n_x: 4,
        n_u: 1,
        dt_grid,
        stage_cost: Arc::new(QuadraticStageCost { q, r, time_scaled: true }),
        terminal_cost: Arc::new(QuadraticTerminalCost { p }),
        dynamics: Arc::new(RadauDynamics::new(model)),
        path_constraints: None,
        terminal_constraints: None,
        control_bounds: Some(Bounds::new(
            DVector::from_element(1, -cfg.u_max),
            DVector::from_element(1, cfg.u_max),
        )),
        state_bounds: None,
    })
}

/// Controller OCP on the nonuniform grid.
pub fn build_pendulum_ocp(cfg: &BenchmarkConfig) -> Result<OcpSpec> {
    let grid = nonuniform_grid(cfg.horizon, cfg.scenario.dt, cfg.intervals)?;
    pendulum_ocp(cfg, grid)
}

/// Reference OCP on the finer uniform grid.
pub fn build_reference_ocp(cfg: &BenchmarkConfig) -> Result<OcpSpec> {
    let grid = uniform_grid(cfg.horizon, cfg.reference_intervals)?;
    pendulum_ocp(cfg, grid)
}

/// Closed-loop running cost `xᵀQx + uᵀRu`.
pub fn running_cost(cfg: &BenchmarkConfig, x: &DVector<f64>, u: f64) -> f64 {
    x.iter().zip(cfg.q_diag.iter()).map(|(xi, qi)| qi * xi * xi).sum::<f64>() + cfg.r * u * u
}

//! SQP and the multi-level iterations (MLI).
//!
//! All levels solve the same QP
//!
//! ```text
//! min  aᵀΔw + ½ ΔwᵀAΔw   s.t.   g + Mx + GΔw = 0,   h + HΔw >= 0
//! ```
//!
//! and update `w ← w + Δw`, `λ ← λ_QP`, `μ ← μ_QP`. They differ in which
//! parts of the QP are re-evaluated:
//!
//! | level | matrices `A, G, H` | `g, h` | `a` |
//! |-------|--------------------|--------|-----|
//! | D | at every iterate | at every iterate | `∇f(w)` |
//! | C | frozen at `ẑ` | at every iterate | `∇L(z) + Ĝᵀλ + Ĥᵀμ` |
//! | B | frozen at `ẑ` | at every iterate | `∇f(ŵ) + Â(w - ŵ)` |
//! | A | frozen at `ẑ` | frozen at `ẑ` | frozen at `ẑ` |
//!
//! Levels A, B and C reuse the condensed matrices of the prepared
//! linearization for every QP they solve.

use nalgebra::DVector;
use serde::Serialize;

use crate::nlp::{kkt_from_linearization, Iterate, KktResidual, OcpNlp};
use crate::qp::{
    condense_and_solve, condense_lhs, condense_rhs_and_solve_with, CondensedLhs, OcpQpData, QpOptions, QpSolution,
    QpVectors,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MliLevel {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MliConfig {
    pub level: MliLevel,
    pub inner_iterations: usize,
}

impl MliConfig {
    pub fn new(level: MliLevel, inner_iterations: usize) -> Result<Self> {
        if inner_iterations == 0 {
            return Err(Error::config("inner iteration count must be at least 1"));
        }
        let inner_iterations = if level == MliLevel::A { 1 } else { inner_iterations };
        Ok(MliConfig { level, inner_iterations })
    }
}

/// One SQP iteration as seen by the log.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub stat: f64,
    pub eq: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SqpOutcome {
    pub iterate: Iterate,
    pub kkt: KktResidual,
    pub converged: bool,
    /// QP solves performed.
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
}

fn apply_step(z: &Iterate, sol: QpSolution) -> Iterate {
    Iterate { w: &z.w + sol.dw, lambda: sol.lambda, mu: sol.mu }
}

/// Full-step SQP with Gauss-Newton Hessian until every KKT residual is at
/// most `tol` or `max_iter` QPs have been solved.
pub fn sqp_solve(nlp: &OcpNlp, x: &DVector<f64>, z0: &Iterate, tol: f64, max_iter: usize) -> Result<SqpOutcome> {
    let mut z = z0.clone();
    let mut log = Vec::new();
    let mut iterations = 0;
    loop {
        let data = nlp.linearize(&z.w)?;
        let kkt = kkt_from_linearization(&data, &z, x);
        if kkt.within(tol) || iterations >= max_iter {
            log.push(IterationRecord { iter: iterations, stat: kkt.stat, eq: kkt.eq, step_norm: 0.0 });
            return Ok(SqpOutcome { iterate: z, kkt, converged: kkt.within(tol), iterations, log });
        }
        let sol = condense_and_solve(&data.matrices, &data.vectors, x)?;
        log.push(IterationRecord { iter: iterations, stat: kkt.stat, eq: kkt.eq, step_norm: sol.dw.amax() });
        z = apply_step(&z, sol);
        iterations += 1;
    }
}

/// Exactly `n_d` full SQP iterations at the fixed parameter `x`.
pub fn level_d(nlp: &OcpNlp, x: &DVector<f64>, z_start: &Iterate, n_d: usize) -> Result<Iterate> {
    level_d_observed(nlp, x, z_start, n_d, &mut |_, _| {})
}

pub(crate) fn level_d_observed(
    nlp: &OcpNlp,
    x: &DVector<f64>,
    z_start: &Iterate,
    n_d: usize,
    observe: &mut dyn FnMut(usize, &Iterate),
) -> Result<Iterate> {
    let mut z = z_start.clone();
    for j in 0..n_d {
        let data = nlp.linearize(&z.w)?;
        let sol = condense_and_solve(&data.matrices, &data.vectors, x)?;
        z = apply_step(&z, sol);
        observe(j, &z);
    }
    Ok(z)
}

/// QP matrices and vectors frozen at a reference point `ẑ`, with the
/// condensed matrices cached.
#[derive(Debug, Clone)]
pub struct PreparedLinearization {
    pub reference: Iterate,
    pub data: OcpQpData,
    pub lhs: CondensedLhs,
    /// Parameter the linearization was prepared for.
    pub parameter: DVector<f64>,
    /// Active set of the last QP solved with this linearization.
    pub last_active_set: Option<Vec<usize>>,
}

impl PreparedLinearization {
    pub fn new(nlp: &OcpNlp, reference: Iterate, parameter: DVector<f64>) -> Result<Self> {
        let data = nlp.linearize(&reference.w)?;
        Self::from_data(reference, data, parameter)
    }

    pub fn from_data(reference: Iterate, data: OcpQpData, parameter: DVector<f64>) -> Result<Self> {
        let lhs = condense_lhs(&data.matrices)?;
        Ok(PreparedLinearization { reference, data, lhs, parameter, last_active_set: None })
    }

    /// `∇f(ŵ)` as a full vector.
    pub fn objective_gradient(&self) -> DVector<f64> {
        self.data.vectors.gradient_full(&self.data.matrices.dims)
    }

    pub(crate) fn solve(&self, vectors: &QpVectors, x: &DVector<f64>) -> Result<QpSolution> {
        let opts = QpOptions { warm_start: self.last_active_set.clone(), ..Default::default() };
        condense_rhs_and_solve_with(&self.lhs, vectors, x, &opts)
    }
}

/// Frozen-matrix iterations with exact constraint residuals and a
/// Lagrange-gradient correction.
pub fn level_c(prep: &PreparedLinearization, nlp: &OcpNlp, x: &DVector<f64>, z_start: &Iterate, n_c: usize) -> Result<Iterate> {
    level_c_observed(prep, nlp, x, z_start, n_c, &mut |_, _| {})
}

/// QP vectors of a level-C iteration at `z`.
fn level_c_vectors(prep: &PreparedLinearization, nlp: &OcpNlp, z: &Iterate) -> Result<QpVectors> {
    let dims = &prep.data.matrices.dims;
    let data = nlp.linearize(&z.w)?;
    // a = ∇f(w) - (∇g(w) - Ĝᵀ)λ - (∇h(w) - Ĥᵀ)μ
    let grad = data.vectors.gradient_full(dims) - data.matrices.jacobian_transpose_product(&z.lambda, &z.mu)
        + prep.data.matrices.jacobian_transpose_product(&z.lambda, &z.mu);
    Ok(QpVectors { grad: QpVectors::split_gradient(dims, &grad), ..data.vectors })
}

pub(crate) fn level_c_observed(
    prep: &PreparedLinearization,
    nlp: &OcpNlp,
    x: &DVector<f64>,
    z_start: &Iterate,
    n_c: usize,
    observe: &mut dyn FnMut(usize, &Iterate),
) -> Result<Iterate> {
    let mut z = z_start.clone();
    for j in 0..n_c {
        let vectors = level_c_vectors(prep, nlp, &z)?;
        let sol = prep.solve(&vectors, x)?;
        z = apply_step(&z, sol);
        observe(j, &z);
    }
    Ok(z)
}

/// QP vectors of a level-B iteration at `w`: fresh constraint residuals and
/// the gradient `∇f(ŵ) + Â(w - ŵ)`.
fn level_b_vectors(prep: &PreparedLinearization, nlp: &OcpNlp, w: &DVector<f64>) -> Result<QpVectors> {
    let dims = &prep.data.matrices.dims;
    let cv = nlp.constraint_values(w)?;
    let grad = prep.objective_gradient() + prep.data.matrices.hessian_product(&(w - &prep.reference.w));
    Ok(QpVectors { grad: QpVectors::split_gradient(dims, &grad), init: cv.init, gaps: cv.gaps, ineq: cv.ineq })
}

/// Zero-order iterations: only constraint functions are evaluated.
pub fn level_b(prep: &PreparedLinearization, nlp: &OcpNlp, x: &DVector<f64>, z_start: &Iterate, n_b: usize) -> Result<Iterate> {
    level_b_observed(prep, nlp, x, z_start, n_b, &mut |_, _| {})
}

pub(crate) fn level_b_observed(
    prep: &PreparedLinearization,
    nlp: &OcpNlp,
    x: &DVector<f64>,
    z_start: &Iterate,
    n_b: usize,
    observe: &mut dyn FnMut(usize, &Iterate),
) -> Result<Iterate> {
    let mut z = z_start.clone();
    for j in 0..n_b {
        let vectors = level_b_vectors(prep, nlp, &z.w)?;
        let sol = prep.solve(&vectors, x)?;
        z = apply_step(&z, sol);
        observe(j, &z);
    }
    Ok(z)
}

/// One QP with every vector frozen at `ẑ`; only the parameter changes.
pub fn level_a(prep: &PreparedLinearization, x_pred: &DVector<f64>) -> Result<Iterate> {
    let sol = prep.solve(&prep.data.vectors, x_pred)?;
    Ok(apply_step(&prep.reference, sol))
}

/// Gradient perturbation `β` for which a level-B fixed point `z_B` is a KKT
/// point of `min f(w) + wᵀβ` under the original constraints:
///
/// ```text
/// β = ∇f(ŵ) + Â(w_B - ŵ) - ∇f(w_B) + (∇g(w_B) - Ĝᵀ)λ_B + (∇h(w_B) - Ĥᵀ)μ_B
/// ```
pub fn beta_vector(prep: &PreparedLinearization, z_b: &Iterate, nlp: &OcpNlp) -> Result<DVector<f64>> {
    let dims = &prep.data.matrices.dims;
    let data = nlp.linearize(&z_b.w)?;
    let approx_grad = prep.objective_gradient() + prep.data.matrices.hessian_product(&(&z_b.w - &prep.reference.w));
    Ok(approx_grad - data.vectors.gradient_full(dims)
        + data.matrices.jacobian_transpose_product(&z_b.lambda, &z_b.mu)
        - prep.data.matrices.jacobian_transpose_product(&z_b.lambda, &z_b.mu))
}

/// Empirical Newton-type contraction estimates from an error sequence
/// `‖z^j - z̄‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionDiagnostics {
    /// `e_{j+1} / e_j`, estimates of `α`.
    pub ratios: Vec<f64>,
    /// Terminal ratio.
    pub kappa: f64,
    /// Twice the slope of ratio over error.
    pub omega: f64,
    /// Lipschitz estimate of the solution map, when known.
    pub sigma: Option<f64>,
    /// `‖β‖∞` for level-B runs.
    pub beta_norm: Option<f64>,
    /// `2(1 - κ)/ω`, when `ω > 0` and `κ < 1`.
    pub radius: Option<f64>,
    pub contractive: bool,
}

pub fn estimate_contraction(errors: &[f64]) -> Result<ContractionDiagnostics> {
    if errors.len() < 3 {
        return Err(Error::config(format!("need at least 3 error values, got {}", errors.len())));
    }
    let ratios: Vec<f64> = errors
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let kappa = *ratios.last().expect("at least two ratios");
    let contractive = ratios.iter().all(|&r| r < 1.0);

    // ratio_j ≈ κ + (ω/2) e_j over the tail of the run.
    let n = ratios.len();
    let take = n.saturating_sub(2).max(3).min(n);
    let pts: Vec<(f64, f64)> = (n - take..n).map(|j| (errors[j], ratios[j])).collect();
    let mean_e = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let mean_r = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_e).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_e) * (p.1 - mean_r)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let omega = 2.0 * slope;

    let radius = (omega > 0.0 && kappa < 1.0).then(|| 2.0 * (1.0 - kappa) / omega);
    Ok(ContractionDiagnostics { ratios, kappa, omega, sigma: None, beta_norm: None, radius, contractive })
}

/// Least-squares slope through the origin of `‖Δz̄‖` over `‖Δx‖`.
pub fn estimate_lipschitz(samples: &[(f64, f64)]) -> f64 {
    let sxx: f64 = samples.iter().map(|(dx, _)| dx * dx).sum();
    let sxy: f64 = samples.iter().map(|(dx, dz)| dx * dz).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

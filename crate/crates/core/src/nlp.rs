//! Optimal control problems and their multiple-shooting transcription into
//! the parametric NLP
//!
//! ```text
//! min f(w)   s.t.   0 = g(w) + M x,   0 <= h(w)
//! ```
//!
//! with Lagrangian `L(z) = f(w) - λᵀ(g(w) + Mx) - μᵀh(w)`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::integrator::{radau3_advance, radau3_step, OdeModel};
use crate::qp::{OcpDims, OcpQpData, QpMatrices, QpVectors};
use crate::{Error, Result};

/// Stage cost `L_k(s, u)`. `dt` is the length of the stage interval.
pub trait StageCost: Send + Sync {
    fn value(&self, stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> f64;
    /// Gradient over `(s, u)`.
    fn gradient(&self, stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// Symmetric positive definite Hessian (approximation) over `(s, u)`.
    fn hessian(&self, stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;
}

pub trait TerminalCost: Send + Sync {
    fn value(&self, s: &DVector<f64>) -> f64;
    fn gradient(&self, s: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, s: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct DynamicsLinearization {
    pub next: DVector<f64>,
    pub jac_s: DMatrix<f64>,
    pub jac_u: DMatrix<f64>,
}

/// Discrete dynamics `s_{k+1} = φ_k(s_k, u_k)` over an interval of length `dt`.
pub trait Dynamics: Send + Sync {
    fn eval(&self, stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;
    fn linearize(&self, stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> Result<DynamicsLinearization>;
}

/// Path constraint `h_k(s, u) >= 0` for `k < N`.
pub trait PathConstraint: Send + Sync {
    fn dim(&self, stage: usize) -> usize;
    fn eval(&self, stage: usize, s: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// `(∂h/∂s, ∂h/∂u)`.
    fn jacobian(&self, stage: usize, s: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);
}

/// Terminal constraint `h_N(s) >= 0`.
pub trait TerminalConstraint: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, s: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, s: &DVector<f64>) -> DMatrix<f64>;
}

/// One implicit Radau IIA step per shooting interval.
pub struct RadauDynamics {
    model: Arc<dyn OdeModel>,
}

impl RadauDynamics {
    pub fn new(model: Arc<dyn OdeModel>) -> Self {
        RadauDynamics { model }
    }
}

impl Dynamics for RadauDynamics {
    fn eval(&self, _stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        radau3_advance(self.model.as_ref(), s, u, dt)
    }

    fn linearize(&self, _stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> Result<DynamicsLinearization> {
        let r = radau3_step(self.model.as_ref(), s, u, dt)?;
        Ok(DynamicsLinearization { next: r.x_next, jac_s: r.sens_x, jac_u: r.sens_u })
    }
}

/// Box bounds; infinite entries produce no constraint rows.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Bounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Self {
        Bounds { lower, upper }
    }

    fn rows(&self) -> usize {
        self.lower.iter().filter(|v| v.is_finite()).count() + self.upper.iter().filter(|v| v.is_finite()).count()
    }

    /// Values `v - lb` (finite lower entries) then `ub - v` (finite upper entries),
    /// with the Jacobian w.r.t. `v`.
    fn eval(&self, v: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.rows();
        let mut vals = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, v.len());
        let mut row = 0;
        for (i, &lb) in self.lower.iter().enumerate() {
            if lb.is_finite() {
                vals[row] = v[i] - lb;
                jac[(row, i)] = 1.0;
                row += 1;
            }
        }
        for (i, &ub) in self.upper.iter().enumerate() {
            if ub.is_finite() {
                vals[row] = ub - v[i];
                jac[(row, i)] = -1.0;
                row += 1;
            }
        }
        (vals, jac)
    }
}

/// Discrete-time optimal control problem
///
/// ```text
/// min  Σ L_k(s_k, u_k) + E(s_N)
/// s.t. s_0 = x,  s_{k+1} = φ_k(s_k, u_k),  h_k(s_k, u_k) >= 0,  h_N(s_N) >= 0
/// ```
///
/// Control bounds apply to every `u_k`; state bounds to `s_1..s_N`.
#[derive(Clone)]
pub struct OcpSpec {
    pub n_x: usize,
    pub n_u: usize,
    /// Shooting interval lengths; `N = dt_grid.len()`.
    pub dt_grid: Vec<f64>,
    pub stage_cost: Arc<dyn StageCost>,
    pub terminal_cost: Arc<dyn TerminalCost>,
    pub dynamics: Arc<dyn Dynamics>,
    pub path_constraints: Option<Arc<dyn PathConstraint>>,
    pub terminal_constraints: Option<Arc<dyn TerminalConstraint>>,
    pub control_bounds: Option<Bounds>,
    pub state_bounds: Option<Bounds>,
}

impl OcpSpec {
    pub fn horizon(&self) -> usize {
        self.dt_grid.len()
    }
}

/// Primal-dual point `z = (w, λ, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub w: DVector<f64>,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
}

impl Iterate {
    pub fn zeros(n_w: usize, n_g: usize, n_h: usize) -> Self {
        Iterate { w: DVector::zeros(n_w), lambda: DVector::zeros(n_g), mu: DVector::zeros(n_h) }
    }

    /// Stacked `(w, λ, μ)`.
    pub fn stacked(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.w.len() + self.lambda.len() + self.mu.len());
        out.rows_mut(0, self.w.len()).copy_from(&self.w);
        out.rows_mut(self.w.len(), self.lambda.len()).copy_from(&self.lambda);
        out.rows_mut(self.w.len() + self.lambda.len(), self.mu.len()).copy_from(&self.mu);
        out
    }

    /// ∞-norm distance between two iterates.
    pub fn distance(&self, other: &Iterate) -> f64 {
        (&self.w - &other.w)
            .amax()
            .max((&self.lambda - &other.lambda).amax())
            .max((&self.mu - &other.mu).amax())
    }
}

/// ∞-norm KKT residuals.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct KktResidual {
    /// `‖∇_w L‖`
    pub stat: f64,
    /// `‖g(w) + Mx‖`
    pub eq: f64,
    /// `‖max(0, -h(w))‖`
    pub ineq: f64,
    /// `‖μ ∘ h(w)‖`
    pub comp: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stat.max(self.eq).max(self.ineq).max(self.comp)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.stat <= tol && self.eq <= tol && self.ineq <= tol && self.comp <= tol
    }

    pub(crate) fn from_parts(
        lagrange_grad: &DVector<f64>,
        eq: &DVector<f64>,
        h: &DVector<f64>,
        mu: &DVector<f64>,
    ) -> Self {
        KktResidual {
            stat: lagrange_grad.amax(),
            eq: eq.amax(),
            ineq: h.iter().fold(0.0_f64, |m, &v| m.max(-v)),
            comp: h.iter().zip(mu.iter()).fold(0.0_f64, |m, (a, b)| m.max((a * b).abs())),
        }
    }
}

/// Compact parametric NLP interface with dense derivatives.
pub trait ParametricNlp {
    fn n_w(&self) -> usize;
    fn n_g(&self) -> usize;
    fn n_h(&self) -> usize;
    fn n_p(&self) -> usize;

    fn objective(&self, w: &DVector<f64>) -> Result<f64>;
    fn objective_gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>>;
    /// `g(w)`, without the parameter term.
    fn equality_residual(&self, w: &DVector<f64>) -> Result<DVector<f64>>;
    fn inequality_residual(&self, w: &DVector<f64>) -> Result<DVector<f64>>;
    /// `∇g(w)ᵀ`, `n_g × n_w`.
    fn equality_jacobian(&self, w: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// `∇h(w)ᵀ`, `n_h × n_w`.
    fn inequality_jacobian(&self, w: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// Embedding matrix `M`, `n_g × n_p`.
    fn embedding(&self) -> DMatrix<f64>;
    /// Symmetric positive definite approximation of the Lagrange Hessian.
    fn hessian_approximation(&self, w: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `∇g(w) λ + ∇h(w) μ`.
    fn jacobian_transpose_product(&self, w: &DVector<f64>, lambda: &DVector<f64>, mu: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.equality_jacobian(w)?.tr_mul(lambda) + self.inequality_jacobian(w)?.tr_mul(mu))
    }
}

fn check_dims<N: ParametricNlp + ?Sized>(nlp: &N, z: &Iterate, x: &DVector<f64>) -> Result<()> {
    if z.w.len() != nlp.n_w() || z.lambda.len() != nlp.n_g() || z.mu.len() != nlp.n_h() || x.len() != nlp.n_p() {
        return Err(Error::config(format!(
            "iterate dimensions (w {}, λ {}, μ {}, x {}) do not match NLP (w {}, g {}, h {}, p {})",
            z.w.len(),
            z.lambda.len(),
            z.mu.len(),
            x.len(),
            nlp.n_w(),
            nlp.n_g(),
            nlp.n_h(),
            nlp.n_p()
        )));
    }
    Ok(())
}

/// `∇_w L(z) = ∇f(w) - ∇g(w)λ - ∇h(w)μ`.
pub fn lagrange_gradient<N: ParametricNlp + ?Sized>(nlp: &N, z: &Iterate, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims(nlp, z, x)?;
    Ok(nlp.objective_gradient(&z.w)? - nlp.jacobian_transpose_product(&z.w, &z.lambda, &z.mu)?)
}

pub fn eval_kkt<N: ParametricNlp + ?Sized>(nlp: &N, z: &Iterate, x: &DVector<f64>) -> Result<KktResidual> {
    let grad = lagrange_gradient(nlp, z, x)?;
    let eq = nlp.equality_residual(&z.w)? + nlp.embedding() * x;
    let h = nlp.inequality_residual(&z.w)?;
    Ok(KktResidual::from_parts(&grad, &eq, &h, &z.mu))
}

/// Constraint values at a point, without derivatives.
#[derive(Debug, Clone)]
pub struct ConstraintValues {
    pub init: DVector<f64>,
    pub gaps: Vec<DVector<f64>>,
    pub ineq: Vec<DVector<f64>>,
}

/// Multiple-shooting transcription of an [`OcpSpec`].
///
/// Every callback invocation made through this type is counted; see
/// [`OcpNlp::callback_count`].
pub struct OcpNlp {
    spec: OcpSpec,
    dims: OcpDims,
    calls: AtomicUsize,
}

impl std::fmt::Debug for OcpNlp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OcpNlp").field("dims", &self.dims).field("dt_grid", &self.spec.dt_grid).finish()
    }
}

pub fn transcribe(spec: OcpSpec) -> Result<OcpNlp> {
    let n = spec.horizon();
    let (nx, nu) = (spec.n_x, spec.n_u);
    if n == 0 {
        return Err(Error::config("horizon must have at least one interval"));
    }
    if let Some(bad) = spec.dt_grid.iter().find(|dt| !(**dt > 0.0) || !dt.is_finite()) {
        return Err(Error::config(format!("interval lengths must be positive, got {bad}")));
    }
    for (name, b, len) in [("control", &spec.control_bounds, nu), ("state", &spec.state_bounds, nx)] {
        if let Some(b) = b {
            if b.lower.len() != len || b.upper.len() != len {
                return Err(Error::config(format!("{name} bounds must have length {len}")));
            }
        }
    }

    let s = DVector::zeros(nx);
    let u = DVector::zeros(nu);
    let expect = |what: &str, got: (usize, usize), want: (usize, usize)| -> Result<()> {
        if got != want {
            return Err(Error::config(format!("{what}: expected shape {want:?}, got {got:?}")));
        }
        Ok(())
    };
    let dt0 = spec.dt_grid[0];
    expect("stage cost gradient", (spec.stage_cost.gradient(0, dt0, &s, &u).len(), 1), (nx + nu, 1))?;
    expect("stage cost Hessian", spec.stage_cost.hessian(0, dt0, &s, &u).shape(), (nx + nu, nx + nu))?;
    expect("terminal cost gradient", (spec.terminal_cost.gradient(&s).len(), 1), (nx, 1))?;
    expect("terminal cost Hessian", spec.terminal_cost.hessian(&s).shape(), (nx, nx))?;
    let lin = spec.dynamics.linearize(0, dt0, &s, &u)?;
    expect("dynamics value", (lin.next.len(), 1), (nx, 1))?;
    expect("dynamics state Jacobian", lin.jac_s.shape(), (nx, nx))?;
    expect("dynamics control Jacobian", lin.jac_u.shape(), (nx, nu))?;

    let mut n_h = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut m = 0;
        if k < n {
            if let Some(b) = &spec.control_bounds {
                m += b.rows();
            }
        }
        if k > 0 {
            if let Some(b) = &spec.state_bounds {
                m += b.rows();
            }
        }
        if k < n {
            if let Some(pc) = &spec.path_constraints {
                let dim = pc.dim(k);
                expect("path constraint value", (pc.eval(k, &s, &u).len(), 1), (dim, 1))?;
                let (js, ju) = pc.jacobian(k, &s, &u);
                expect("path constraint state Jacobian", js.shape(), (dim, nx))?;
                expect("path constraint control Jacobian", ju.shape(), (dim, nu))?;
                m += dim;
            }
        } else if let Some(tc) = &spec.terminal_constraints {
            let dim = tc.dim();
            expect("terminal constraint value", (tc.eval(&s).len(), 1), (dim, 1))?;
            expect("terminal constraint Jacobian", tc.jacobian(&s).shape(), (dim, nx))?;
            m += dim;
        }
        n_h.push(m);
    }

    Ok(OcpNlp { dims: OcpDims::new(nx, nu, n, n_h), spec, calls: AtomicUsize::new(0) })
}

impl OcpNlp {
    pub fn spec(&self) -> &OcpSpec {
        &self.spec
    }

    pub fn dims(&self) -> &OcpDims {
        &self.dims
    }

    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    /// Total number of model callbacks (costs, dynamics, constraints)
    /// evaluated through this NLP.
    pub fn callback_count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn tick(&self, n: usize) {
        self.calls.fetch_add(n, Ordering::Relaxed);
    }

    pub fn state(&self, w: &DVector<f64>, k: usize) -> DVector<f64> {
        w.rows(self.dims.state_offset(k), self.dims.n_x).into_owned()
    }

    pub fn control(&self, w: &DVector<f64>, k: usize) -> DVector<f64> {
        w.rows(self.dims.control_offset(k), self.dims.n_u).into_owned()
    }

    /// Stacks per-stage states and controls into `w`.
    pub fn pack(&self, states: &[DVector<f64>], controls: &[DVector<f64>]) -> DVector<f64> {
        assert_eq!(states.len(), self.dims.horizon + 1);
        assert_eq!(controls.len(), self.dims.horizon);
        let mut w = DVector::zeros(self.dims.n_w());
        for (k, s) in states.iter().enumerate() {
            w.rows_mut(self.dims.state_offset(k), self.dims.n_x).copy_from(s);
        }
        for (k, u) in controls.iter().enumerate() {
            w.rows_mut(self.dims.control_offset(k), self.dims.n_u).copy_from(u);
        }
        w
    }

    /// Inverse of [`OcpNlp::pack`].
    pub fn unpack(&self, w: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let states = (0..=self.dims.horizon).map(|k| self.state(w, k)).collect();
        let controls = (0..self.dims.horizon).map(|k| self.control(w, k)).collect();
        (states, controls)
    }

    pub fn zero_iterate(&self) -> Iterate {
        Iterate::zeros(self.dims.n_w(), self.dims.n_g(), self.dims.n_h_total())
    }

    fn stage_ineq(&self, k: usize, s: &DVector<f64>, u: Option<&DVector<f64>>) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
        let (nx, nu) = (self.dims.n_x, self.dims.n_u);
        let m = self.dims.n_h[k];
        let ucols = if k < self.dims.horizon { nu } else { 0 };
        let mut vals = DVector::zeros(m);
        let mut js = DMatrix::zeros(m, nx);
        let mut ju = DMatrix::zeros(m, ucols);
        let mut row = 0;
        if let (Some(b), Some(u)) = (&self.spec.control_bounds, u) {
            let (v, j) = b.eval(u);
            vals.rows_mut(row, v.len()).copy_from(&v);
            ju.view_mut((row, 0), (v.len(), nu)).copy_from(&j);
            row += v.len();
        }
        if k > 0 {
            if let Some(b) = &self.spec.state_bounds {
                let (v, j) = b.eval(s);
                vals.rows_mut(row, v.len()).copy_from(&v);
                js.view_mut((row, 0), (v.len(), nx)).copy_from(&j);
                row += v.len();
            }
        }
        match u {
            Some(u) => {
                if let Some(pc) = &self.spec.path_constraints {
                    self.tick(2);
                    let v = pc.eval(k, s, u);
                    let (a, b) = pc.jacobian(k, s, u);
                    vals.rows_mut(row, v.len()).copy_from(&v);
                    js.view_mut((row, 0), (v.len(), nx)).copy_from(&a);
                    ju.view_mut((row, 0), (v.len(), nu)).copy_from(&b);
                    row += v.len();
                }
            }
            None => {
                if let Some(tc) = &self.spec.terminal_constraints {
                    self.tick(2);
                    let v = tc.eval(s);
                    let a = tc.jacobian(s);
                    vals.rows_mut(row, v.len()).copy_from(&v);
                    js.view_mut((row, 0), (v.len(), nx)).copy_from(&a);
                    row += v.len();
                }
            }
        }
        debug_assert_eq!(row, m);
        (vals, js, ju)
    }

    fn stage_ineq_values(&self, k: usize, s: &DVector<f64>, u: Option<&DVector<f64>>) -> DVector<f64> {
        let m = self.dims.n_h[k];
        let mut vals = DVector::zeros(m);
        let mut row = 0;
        if let (Some(b), Some(u)) = (&self.spec.control_bounds, u) {
            let (v, _) = b.eval(u);
            vals.rows_mut(row, v.len()).copy_from(&v);
            row += v.len();
        }
        if k > 0 {
            if let Some(b) = &self.spec.state_bounds {
                let (v, _) = b.eval(s);
                vals.rows_mut(row, v.len()).copy_from(&v);
                row += v.len();
            }
        }
        let v = match u {
            Some(u) => self.spec.path_constraints.as_ref().map(|pc| pc.eval(k, s, u)),
            None => self.spec.terminal_constraints.as_ref().map(|tc| tc.eval(s)),
        };
        if let Some(v) = v {
            self.tick(1);
            vals.rows_mut(row, v.len()).copy_from(&v);
        }
        vals
    }

    pub fn objective_value(&self, w: &DVector<f64>) -> f64 {
        let n = self.dims.horizon;
        self.tick(n + 1);
        let mut total = 0.0;
        for k in 0..n {
            total += self.spec.stage_cost.value(k, self.spec.dt_grid[k], &self.state(w, k), &self.control(w, k));
        }
        total + self.spec.terminal_cost.value(&self.state(w, n))
    }

    /// Objective gradient per stage.
    pub fn objective_gradient_stages(&self, w: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.dims.horizon;
        self.tick(n + 1);
        let mut out: Vec<DVector<f64>> = (0..n)
            .map(|k| self.spec.stage_cost.gradient(k, self.spec.dt_grid[k], &self.state(w, k), &self.control(w, k)))
            .collect();
        out.push(self.spec.terminal_cost.gradient(&self.state(w, n)));
        out
    }

    /// Constraint residuals only (no derivatives).
    pub fn constraint_values(&self, w: &DVector<f64>) -> Result<ConstraintValues> {
        let n = self.dims.horizon;
        let mut gaps = Vec::with_capacity(n);
        let mut ineq = Vec::with_capacity(n + 1);
        for k in 0..n {
            let s = self.state(w, k);
            let u = self.control(w, k);
            self.tick(1);
            let next = self.spec.dynamics.eval(k, self.spec.dt_grid[k], &s, &u)?;
            gaps.push(next - self.state(w, k + 1));
            ineq.push(self.stage_ineq_values(k, &s, Some(&u)));
        }
        ineq.push(self.stage_ineq_values(n, &self.state(w, n), None));
        Ok(ConstraintValues { init: self.state(w, 0), gaps, ineq })
    }

    /// Evaluates all QP matrices and vectors at `w`.
    pub fn linearize(&self, w: &DVector<f64>) -> Result<OcpQpData> {
        let n = self.dims.horizon;
        let mut hess = Vec::with_capacity(n + 1);
        let mut grad = Vec::with_capacity(n + 1);
        let mut dyn_s = Vec::with_capacity(n);
        let mut dyn_u = Vec::with_capacity(n);
        let mut gaps = Vec::with_capacity(n);
        let mut ineq_s = Vec::with_capacity(n + 1);
        let mut ineq_u = Vec::with_capacity(n + 1);
        let mut ineq = Vec::with_capacity(n + 1);
        for k in 0..n {
            let dt = self.spec.dt_grid[k];
            let s = self.state(w, k);
            let u = self.control(w, k);
            self.tick(3);
            hess.push(self.spec.stage_cost.hessian(k, dt, &s, &u));
            grad.push(self.spec.stage_cost.gradient(k, dt, &s, &u));
            let lin = self.spec.dynamics.linearize(k, dt, &s, &u)?;
            gaps.push(lin.next - self.state(w, k + 1));
            dyn_s.push(lin.jac_s);
            dyn_u.push(lin.jac_u);
            let (v, js, ju) = self.stage_ineq(k, &s, Some(&u));
            ineq.push(v);
            ineq_s.push(js);
            ineq_u.push(ju);
        }
        let s_n = self.state(w, n);
        self.tick(2);
        hess.push(self.spec.terminal_cost.hessian(&s_n));
        grad.push(self.spec.terminal_cost.gradient(&s_n));
        let (v, js, ju) = self.stage_ineq(n, &s_n, None);
        ineq.push(v);
        ineq_s.push(js);
        ineq_u.push(ju);

        Ok(OcpQpData {
            matrices: QpMatrices { dims: self.dims.clone(), hess, dyn_s, dyn_u, ineq_s, ineq_u },
            vectors: QpVectors { grad, init: self.state(w, 0), gaps, ineq },
        })
    }

    /// Builds an iterate from a full state/control guess and zero duals.
    pub fn iterate_from_primal(&self, w: DVector<f64>) -> Iterate {
        Iterate { w, lambda: DVector::zeros(self.dims.n_g()), mu: DVector::zeros(self.dims.n_h_total()) }
    }
}

/// KKT residual computed from an existing linearization at `z.w`.
pub fn kkt_from_linearization(data: &OcpQpData, z: &Iterate, x: &DVector<f64>) -> KktResidual {
    let dims = &data.matrices.dims;
    let grad = data.vectors.gradient_full(dims) - data.matrices.jacobian_transpose_product(&z.lambda, &z.mu);
    let eq = data.vectors.equality_full(dims, x);
    let h = data.vectors.inequality_full(dims);
    KktResidual::from_parts(&grad, &eq, &h, &z.mu)
}

impl ParametricNlp for OcpNlp {
    fn n_w(&self) -> usize {
        self.dims.n_w()
    }

    fn n_g(&self) -> usize {
        self.dims.n_g()
    }

    fn n_h(&self) -> usize {
        self.dims.n_h_total()
    }

    fn n_p(&self) -> usize {
        self.dims.n_x
    }

    fn objective(&self, w: &DVector<f64>) -> Result<f64> {
        Ok(self.objective_value(w))
    }

    fn objective_gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let stages = self.objective_gradient_stages(w);
        let mut out = DVector::zeros(self.dims.n_w());
        for (k, g) in stages.iter().enumerate() {
            out.rows_mut(self.dims.state_offset(k), g.len()).copy_from(g);
        }
        Ok(out)
    }

    fn equality_residual(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let cv = self.constraint_values(w)?;
        let nx = self.dims.n_x;
        let mut out = DVector::zeros(self.dims.n_g());
        out.rows_mut(0, nx).copy_from(&cv.init);
        for (k, gap) in cv.gaps.iter().enumerate() {
            out.rows_mut(self.dims.gap_offset(k), nx).copy_from(gap);
        }
        Ok(out)
    }

    fn inequality_residual(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let cv = self.constraint_values(w)?;
        let mut out = DVector::zeros(self.dims.n_h_total());
        for (k, h) in cv.ineq.iter().enumerate() {
            out.rows_mut(self.dims.ineq_offset(k), h.len()).copy_from(h);
        }
        Ok(out)
    }

    fn equality_jacobian(&self, w: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.linearize(w)?.matrices.dense_equality_jacobian())
    }

    fn inequality_jacobian(&self, w: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.linearize(w)?.matrices.dense_inequality_jacobian())
    }

    fn embedding(&self) -> DMatrix<f64> {
        let nx = self.dims.n_x;
        let mut m = DMatrix::zeros(self.dims.n_g(), nx);
        m.view_mut((0, 0), (nx, nx)).fill_with_identity();
        m.neg_mut();
        m
    }

    fn hessian_approximation(&self, w: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.linearize(w)?.matrices.dense_hessian())
    }

    fn jacobian_transpose_product(&self, w: &DVector<f64>, lambda: &DVector<f64>, mu: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.linearize(w)?.matrices.jacobian_transpose_product(lambda, mu))
    }
}

/// `dt · (sᵀQs + uᵀRu)` when `time_scaled`, otherwise `sᵀQs + uᵀRu`.
#[derive(Debug, Clone)]
pub struct QuadraticStageCost {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub time_scaled: bool,
}

impl QuadraticStageCost {
    fn weight(&self, dt: f64) -> f64 {
        if self.time_scaled {
            dt
        } else {
            1.0
        }
    }
}

impl StageCost for QuadraticStageCost {
    fn value(&self, _stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.weight(dt) * ((s.transpose() * &self.q * s)[0] + (u.transpose() * &self.r * u)[0])
    }

    fn gradient(&self, _stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (nx, nu) = (s.len(), u.len());
        let c = 2.0 * self.weight(dt);
        let mut g = DVector::zeros(nx + nu);
        g.rows_mut(0, nx).copy_from(&(&self.q * s * c));
        g.rows_mut(nx, nu).copy_from(&(&self.r * u * c));
        g
    }

    fn hessian(&self, _stage: usize, dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        let (nx, nu) = (s.len(), u.len());
        let c = 2.0 * self.weight(dt);
        let mut h = DMatrix::zeros(nx + nu, nx + nu);
        h.view_mut((0, 0), (nx, nx)).copy_from(&(&self.q * c));
        h.view_mut((nx, nx), (nu, nu)).copy_from(&(&self.r * c));
        h
    }
}

/// `sᵀPs`.
#[derive(Debug, Clone)]
pub struct QuadraticTerminalCost {
    pub p: DMatrix<f64>,
}

impl TerminalCost for QuadraticTerminalCost {
    fn value(&self, s: &DVector<f64>) -> f64 {
        (s.transpose() * &self.p * s)[0]
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        (&self.p + self.p.transpose()) * s
    }

    fn hessian(&self, _s: &DVector<f64>) -> DMatrix<f64> {
        &self.p + self.p.transpose()
    }
}

/// Discrete linear dynamics `s' = A s + B u`.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Dynamics for LinearDynamics {
    fn eval(&self, _stage: usize, _dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.a * s + &self.b * u)
    }

    fn linearize(&self, _stage: usize, _dt: f64, s: &DVector<f64>, u: &DVector<f64>) -> Result<DynamicsLinearization> {
        Ok(DynamicsLinearization { next: &self.a * s + &self.b * u, jac_s: self.a.clone(), jac_u: self.b.clone() })
    }
}

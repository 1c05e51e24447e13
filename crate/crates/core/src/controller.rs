//! Preparation/feedback state machine of the real-time controllers.
//!
//! One sampling period of an AS-RTI controller is
//!
//! 1. predict the next initial state `x_pred`,
//! 2. run inner MLI iterations on the advanced problem at `x_pred`,
//!    starting from the last output, to obtain `z_lin`,
//! 3. linearize at `z_lin` and condense the QP matrices,
//! 4. once the state is measured, solve the prepared QP for it.
//!
//! Steps 1-3 happen in [`Controller::prepare`], step 4 in
//! [`Controller::feedback`]. Plain RTI skips steps 1-2; SQP-n does nothing
//! in preparation and runs `n` SQP iterations in feedback.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use crate::clock::Stopwatch;

use nalgebra::DVector;
use serde::Serialize;

use crate::mli::{
    level_a, level_b_observed, level_c_observed, level_d_observed, sqp_solve, MliLevel, PreparedLinearization,
};
use crate::nlp::{eval_kkt, Iterate, OcpNlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Rti,
    AsRti { level: MliLevel, iterations: usize },
    Sqp { iterations: usize },
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Rti => write!(f, "rti"),
            Algorithm::AsRti { level: MliLevel::A, .. } => write!(f, "as-rti-a"),
            Algorithm::AsRti { level, iterations } => {
                let l = match level {
                    MliLevel::A => "a",
                    MliLevel::B => "b",
                    MliLevel::C => "c",
                    MliLevel::D => "d",
                };
                write!(f, "as-rti-{l}-{iterations}")
            }
            Algorithm::Sqp { iterations } => write!(f, "sqp-{iterations}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let bad = || Error::config(format!("unknown algorithm '{s}'"));
        let count = |n: &str| -> Result<usize> {
            match n.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(bad()),
            }
        };
        if lower == "rti" {
            return Ok(Algorithm::Rti);
        }
        if lower == "as-rti-a" {
            return Ok(Algorithm::AsRti { level: MliLevel::A, iterations: 1 });
        }
        if let Some(n) = lower.strip_prefix("sqp-") {
            return Ok(Algorithm::Sqp { iterations: count(n)? });
        }
        if let Some(rest) = lower.strip_prefix("as-rti-") {
            let (lvl, n) = rest.split_once('-').ok_or_else(bad)?;
            let level = match lvl {
                "a" => MliLevel::A,
                "b" => MliLevel::B,
                "c" => MliLevel::C,
                "d" => MliLevel::D,
                _ => return Err(bad()),
            };
            let iterations = if level == MliLevel::A { 1 } else { count(n)? };
            return Ok(Algorithm::AsRti { level, iterations });
        }
        Err(bad())
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Source of the predicted next initial state.
#[derive(Clone, Default)]
pub enum PredictionStrategy {
    /// One step of the first-stage dynamics `φ_0(x_k, u_0)`.
    #[default]
    Internal,
    /// User-supplied predictor `(x_k, u_0) -> x_pred`.
    External(Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>),
}

impl fmt::Debug for PredictionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionStrategy::Internal => write!(f, "Internal"),
            PredictionStrategy::External(_) => write!(f, "External(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub algorithm: Algorithm,
    pub prediction: PredictionStrategy,
    pub qp_max_iter: usize,
    /// KKT tolerance of SQP-n feedback.
    pub sqp_tol: f64,
    /// Record KKT residuals of every inner iterate (costs extra evaluations).
    pub record_trace: bool,
}

impl ControllerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        ControllerConfig {
            algorithm,
            prediction: PredictionStrategy::Internal,
            qp_max_iter: crate::qp::DEFAULT_MAX_ITER,
            sqp_tol: 1e-8,
            record_trace: false,
        }
    }
}

/// CPU seconds of the last preparation and feedback phases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub preparation: f64,
    pub feedback: f64,
}

/// Residuals of an iterate on the advanced (or feedback) problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRecord {
    pub cycle: usize,
    /// Inner iteration index; `-1` marks the feedback step.
    pub inner_iter: i64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ControllerMetrics {
    pub timings: PhaseTimings,
    pub fallbacks: usize,
    /// Model callbacks evaluated during the last feedback phase.
    pub feedback_callbacks: usize,
    pub feedback_qp_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    NeedsPreparation,
    Prepared,
}

pub struct Controller {
    nlp: Arc<OcpNlp>,
    config: ControllerConfig,
    output: Iterate,
    prepared: Option<PreparedLinearization>,
    phase: Phase,
    cycle: usize,
    metrics: ControllerMetrics,
    trace: Vec<TraceRecord>,
}

impl fmt::Debug for Controller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Controller")
            .field("algorithm", &self.config.algorithm)
            .field("cycle", &self.cycle)
            .field("phase", &self.phase)
            .finish()
    }
}

/// `φ_0(x_k, u_0)` or the external predictor.
pub fn predict_state(nlp: &OcpNlp, strategy: &PredictionStrategy, x_k: &DVector<f64>, z_k: &Iterate) -> Result<DVector<f64>> {
    let u0 = nlp.control(&z_k.w, 0);
    match strategy {
        PredictionStrategy::Internal => nlp.spec().dynamics.eval(0, nlp.spec().dt_grid[0], x_k, &u0),
        PredictionStrategy::External(f) => Ok(f(x_k, &u0)),
    }
}

/// Cold-start guess: states interpolate linearly from `x0` to the origin,
/// controls and multipliers are zero.
pub fn cold_start(nlp: &OcpNlp, x0: &DVector<f64>) -> Iterate {
    let n = nlp.horizon();
    let states: Vec<DVector<f64>> = (0..=n).map(|k| x0 * (1.0 - k as f64 / n as f64)).collect();
    let controls = vec![DVector::zeros(nlp.dims().n_u); n];
    nlp.iterate_from_primal(nlp.pack(&states, &controls))
}

impl Controller {
    pub fn new(nlp: Arc<OcpNlp>, config: ControllerConfig, x0: &DVector<f64>) -> Result<Self> {
        if let Algorithm::AsRti { iterations: 0, .. } | Algorithm::Sqp { iterations: 0 } = config.algorithm {
            return Err(Error::config("iteration count must be at least 1"));
        }
        if x0.len() != nlp.dims().n_x {
            return Err(Error::config("initial state dimension mismatch"));
        }
        let output = cold_start(&nlp, x0);
        Ok(Controller {
            nlp,
            config,
            output,
            prepared: None,
            phase: Phase::NeedsPreparation,
            cycle: 0,
            metrics: ControllerMetrics::default(),
            trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn nlp(&self) -> &Arc<OcpNlp> {
        &self.nlp
    }

    /// Last output `z^k`.
    pub fn output(&self) -> &Iterate {
        &self.output
    }

    pub fn prepared(&self) -> Option<&PreparedLinearization> {
        self.prepared.as_ref()
    }

    pub fn metrics(&self) -> ControllerMetrics {
        self.metrics
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    /// Replaces the current output, e.g. with a converged solution.
    pub fn set_output(&mut self, z: Iterate) {
        self.output = z;
    }

    fn record(&mut self, inner: i64, z: &Iterate, x: &DVector<f64>) {
        if let Ok(k) = eval_kkt(self.nlp.as_ref(), z, x) {
            self.trace.push(TraceRecord { cycle: self.cycle, inner_iter: inner, primal_residual: k.eq, dual_residual: k.stat });
        }
    }

    /// Preparation phase given the current measured state. Returns the
    /// elapsed seconds.
    pub fn prepare(&mut self, x_k: &DVector<f64>) -> Result<f64> {
        if self.phase == Phase::Prepared {
            return Err(Error::Protocol("prepare called twice without feedback"));
        }
        let start = Stopwatch::start();
        if let Algorithm::Sqp { .. } = self.config.algorithm {
            self.phase = Phase::Prepared;
            let elapsed = start.elapsed();
            self.metrics.timings.preparation = elapsed;
            return Ok(elapsed);
        }

        // Before the first feedback there is no control to predict with;
        // the extra cold-start preparation targets the measured state.
        let x_pred = if self.prepared.is_none() {
            x_k.clone()
        } else {
            predict_state(&self.nlp, &self.config.prediction, x_k, &self.output)?
        };

        let z_lin = match self.inner_iterations(&x_pred) {
            Ok(z) => z,
            Err(Error::QpInfeasible { .. } | Error::QpIterationLimit(_) | Error::Integration { .. } | Error::NotPositiveDefinite) => {
                self.metrics.fallbacks += 1;
                self.output.clone()
            }
            Err(e) => return Err(e),
        };

        let mut prep = PreparedLinearization::new(&self.nlp, z_lin, x_pred)?;
        prep.last_active_set = self.prepared.as_ref().and_then(|p| p.last_active_set.clone());
        self.prepared = Some(prep);
        self.phase = Phase::Prepared;
        let elapsed = start.elapsed();
        self.metrics.timings.preparation = elapsed;
        Ok(elapsed)
    }

    fn inner_iterations(&mut self, x_pred: &DVector<f64>) -> Result<Iterate> {
        let Algorithm::AsRti { level, iterations } = self.config.algorithm else {
            return Ok(self.output.clone());
        };
        let nlp = Arc::clone(&self.nlp);
        let record = self.config.record_trace;
        let mut seen: Vec<(usize, Iterate)> = Vec::new();
        let mut observe = |j: usize, z: &Iterate| {
            if record {
                seen.push((j, z.clone()));
            }
        };
        let start = self.output.clone();
        let z = match (level, self.prepared.as_ref()) {
            (MliLevel::D, _) => level_d_observed(&nlp, x_pred, &start, iterations, &mut observe)?,
            (_, None) => start,
            (MliLevel::A, Some(prep)) => {
                let z = level_a(prep, x_pred)?;
                observe(0, &z);
                z
            }
            (MliLevel::B, Some(prep)) => level_b_observed(prep, &nlp, x_pred, &start, iterations, &mut observe)?,
            (MliLevel::C, Some(prep)) => level_c_observed(prep, &nlp, x_pred, &start, iterations, &mut observe)?,
        };
        for (j, zj) in seen {
            self.record(j as i64, &zj, x_pred);
        }
        Ok(z)
    }

    /// Feedback phase for the measured state; returns the first control.
    pub fn feedback(&mut self, x_next: &DVector<f64>) -> Result<DVector<f64>> {
        if self.phase != Phase::Prepared {
            return Err(Error::Protocol("feedback called before prepare"));
        }
        let calls_before = self.nlp.callback_count();
        let start = Stopwatch::start();
        let qp_iterations = match self.config.algorithm {
            Algorithm::Sqp { iterations } => {
                let out = sqp_solve(&self.nlp, x_next, &self.output, self.config.sqp_tol, iterations)?;
                self.output = out.iterate;
                out.iterations
            }
            _ => {
                let prep = self.prepared.as_mut().ok_or(Error::Protocol("no prepared linearization"))?;
                let sol = prep.solve(&prep.data.vectors, x_next)?;
                let iters = sol.iterations;
                prep.last_active_set = Some(sol.active_set.clone());
                self.output = Iterate { w: &prep.reference.w + sol.dw, lambda: sol.lambda, mu: sol.mu };
                iters
            }
        };
        let u0 = self.nlp.control(&self.output.w, 0);
        let elapsed = start.elapsed();
        self.metrics.timings.feedback = elapsed;
        self.metrics.feedback_callbacks = self.nlp.callback_count() - calls_before;
        self.metrics.feedback_qp_iterations = qp_iterations;
        if self.config.record_trace {
            let z = self.output.clone();
            self.record(-1, &z, x_next);
        }
        self.phase = Phase::NeedsPreparation;
        self.cycle += 1;
        Ok(u0)
    }
}

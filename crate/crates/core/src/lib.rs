//! Real-time nonlinear model predictive control built around the
//! advanced-step real-time iteration (AS-RTI).
//!
//! The crate is layered bottom-up:
//!
//! * [`nlp`] describes optimal control problems and transcribes them by
//!   multiple shooting into a parametric NLP `min f(w) s.t. g(w) + Mx = 0,
//!   h(w) >= 0`, and evaluates Lagrangian and KKT quantities.
//! * [`integrator`] provides the two-stage Radau IIA step with exact
//!   sensitivities used as discrete dynamics, and a plant simulator.
//! * [`qp`] stores OCP-structured QPs, condenses them in a matrix phase
//!   ([`qp::condense_lhs`]) and a vector phase ([`qp::condense_rhs_and_solve`]),
//!   and solves the dense result with an active-set method.
//! * [`mli`] implements full SQP and the multi-level iterations A/B/C/D.
//! * [`controller`] runs the preparation/feedback state machine.
//! * [`benchmark`] reproduces the inverted pendulum closed-loop study.

pub mod benchmark;
pub mod clock;
pub mod controller;
mod error;
pub mod integrator;
pub mod mli;
pub mod nlp;
pub mod qp;

pub use error::{Error, Result};

pub use controller::{Algorithm, Controller, ControllerConfig, PhaseTimings, PredictionStrategy};
pub use integrator::{radau3_step, simulate_plant, IntegrationResult, OdeModel};
pub use mli::{
    beta_vector, estimate_contraction, level_a, level_b, level_c, level_d, sqp_solve,
    ContractionDiagnostics, MliConfig, MliLevel, PreparedLinearization, SqpOutcome,
};
pub use nlp::{
    eval_kkt, lagrange_gradient, transcribe, Iterate, KktResidual, OcpNlp, OcpSpec, ParametricNlp,
};
pub use qp::{
    condense_lhs, condense_rhs_and_solve, solve_dense_qp, CondensedLhs, DenseQpSolution,
    OcpQpData, QpMatrices, QpSolution, QpVectors,
};

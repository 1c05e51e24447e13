//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use asrti::benchmark::{build_pendulum_ocp, BenchmarkConfig};
use asrti::controller::cold_start;
use asrti::{sqp_solve, transcribe, Iterate, OcpNlp};
use nalgebra::{DMatrix, DVector};

/// Controller NLP of the default pendulum benchmark.
pub fn pendulum_nlp() -> Arc<OcpNlp> {
    let spec = build_pendulum_ocp(&BenchmarkConfig::default()).expect("default config is valid");
    Arc::new(transcribe(spec).expect("pendulum OCP transcribes"))
}

/// A tilted state and the converged primal-dual solution there.
pub fn operating_point(nlp: &OcpNlp) -> (DVector<f64>, Iterate) {
    let x = DVector::from_vec(vec![0.3, 0.1, 0.0, 0.0]);
    let z = sqp_solve(nlp, &x, &cold_start(nlp, &x), 1e-10, 100).expect("SQP runs").iterate;
    (x, z)
}

/// Box-constrained dense QP `(H, q, C, r)` with `C v + r >= 0`, about half
/// of the bounds active at the solution.
pub fn box_qp(n: usize) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
    let l = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) as f64).sin());
    let h = &l * l.transpose() + DMatrix::identity(n, n);
    let q = DVector::from_fn(n, |i, _| 3.0 * ((i * 5) as f64).cos());
    let mut c = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        c[(2 * i, i)] = 1.0;
        c[(2 * i + 1, i)] = -1.0;
    }
    (h, q, c, DVector::from_element(2 * n, 0.5))
}

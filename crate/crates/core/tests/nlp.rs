mod common;

use std::sync::Arc;

use asrti::benchmark::{build_pendulum_ocp, BenchmarkConfig};
use asrti::nlp::{Bounds, LinearDynamics, QuadraticStageCost, QuadraticTerminalCost};
use asrti::{eval_kkt, lagrange_gradient, transcribe, Iterate, OcpNlp, OcpSpec, ParametricNlp};
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pendulum() -> OcpNlp {
    transcribe(build_pendulum_ocp(&BenchmarkConfig::default()).unwrap()).unwrap()
}

fn random_iterate(nlp: &OcpNlp, rng: &mut ChaCha8Rng) -> Iterate {
    let mut w = random_vector(rng, nlp.n_w(), 0.3);
    for k in 0..nlp.horizon() {
        let off = nlp.dims().control_offset(k);
        w[off] *= 30.0;
    }
    Iterate { w, lambda: random_vector(rng, nlp.n_g(), 1.0), mu: random_vector(rng, nlp.n_h(), 1.0).abs() }
}

fn lagrangian(nlp: &OcpNlp, z: &Iterate, x: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let eq = nlp.equality_residual(w).unwrap() + nlp.embedding() * x;
    nlp.objective(w).unwrap() - z.lambda.dot(&eq) - z.mu.dot(&nlp.inequality_residual(w).unwrap())
}

#[test]
fn lagrange_gradient_matches_finite_differences() {
    let nlp = pendulum();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z = random_iterate(&nlp, &mut rng);
    let x = random_vector(&mut rng, 4, 0.5);
    let grad = lagrange_gradient(&nlp, &z, &x).unwrap();
    let eps = 1e-6;
    for i in 0..nlp.n_w() {
        let (mut wp, mut wm) = (z.w.clone(), z.w.clone());
        wp[i] += eps;
        wm[i] -= eps;
        let fd = (lagrangian(&nlp, &z, &x, &wp) - lagrangian(&nlp, &z, &x, &wm)) / (2.0 * eps);
        assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0), "{i}: {} vs {fd}", grad[i]);
    }
}

#[test]
fn constraint_jacobians_match_finite_differences() {
    let nlp = pendulum();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = random_iterate(&nlp, &mut rng).w;
    let g = nlp.equality_jacobian(&w).unwrap();
    let h = nlp.inequality_jacobian(&w).unwrap();
    let eps = 1e-6;
    for i in 0..nlp.n_w() {
        let (mut wp, mut wm) = (w.clone(), w.clone());
        wp[i] += eps;
        wm[i] -= eps;
        let fd_g = (nlp.equality_residual(&wp).unwrap() - nlp.equality_residual(&wm).unwrap()) / (2.0 * eps);
        let fd_h = (nlp.inequality_residual(&wp).unwrap() - nlp.inequality_residual(&wm).unwrap()) / (2.0 * eps);
        assert!((fd_g - g.column(i)).amax() <= 1e-5 * (1.0 + g.column(i).amax()));
        assert!((fd_h - h.column(i)).amax() <= 1e-8);
    }
}

#[test]
fn equality_rows_start_with_initial_state_block() {
    let nlp = pendulum();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let z = random_iterate(&nlp, &mut rng);
    let x = random_vector(&mut rng, 4, 1.0);
    let eq = nlp.equality_residual(&z.w).unwrap() + nlp.embedding() * &x;
    let s0 = nlp.state(&z.w, 0);
    assert_eq!(eq.rows(0, 4).into_owned(), &s0 - &x);
    assert_eq!(nlp.embedding().view((0, 0), (4, 4)).into_owned(), -DMatrix::<f64>::identity(4, 4));
    assert_eq!(nlp.embedding().rows(4, nlp.n_g() - 4).amax(), 0.0);
}

fn scalar_lq() -> OcpNlp {
    transcribe(OcpSpec {
        n_x: 1,
        n_u: 1,
        dt_grid: vec![1.0],
        stage_cost: Arc::new(QuadraticStageCost {
            q: DMatrix::from_element(1, 1, 1.0),
            r: DMatrix::from_element(1, 1, 1.0),
            time_scaled: false,
        }),
        terminal_cost: Arc::new(QuadraticTerminalCost { p: DMatrix::from_element(1, 1, 1.0) }),
        dynamics: Arc::new(LinearDynamics { a: DMatrix::from_element(1, 1, 1.0), b: DMatrix::from_element(1, 1, 1.0) }),
        path_constraints: None,
        terminal_constraints: None,
        control_bounds: Some(Bounds::new(DVector::from_element(1, -1.0), DVector::from_element(1, f64::INFINITY))),
        state_bounds: None,
    })
    .unwrap()
}

#[test]
fn scalar_problem_kkt_point_by_hand() {
    // min s0² + u² + s1², s1 = s0 + u, s0 = x = 1: u = -1/2, s1 = 1/2.
    // s1 row: 2 s1 + λ_1 = 0, s0 row: 2 s0 - λ_0 - λ_1 = 0, so λ = (3, -1); μ = 0.
    let nlp = scalar_lq();
    assert_eq!((nlp.n_w(), nlp.n_g(), nlp.n_h()), (3, 2, 1));
    let w = DVector::from_vec(vec![1.0, -0.5, 0.5]);
    let z = Iterate { w, lambda: DVector::from_vec(vec![3.0, -1.0]), mu: DVector::zeros(1) };
    let kkt = eval_kkt(&nlp, &z, &DVector::from_element(1, 1.0)).unwrap();
    assert!(kkt.max() <= 1e-15, "{kkt:?}");
}

#[test]
fn dimension_mismatch_is_an_error() {
    let nlp = scalar_lq();
    let z = Iterate::zeros(2, 2, 1);
    assert!(eval_kkt(&nlp, &z, &DVector::zeros(1)).is_err());
}

#[test]
fn callbacks_are_counted() {
    let nlp = pendulum();
    let before = nlp.callback_count();
    nlp.linearize(&DVector::zeros(nlp.n_w())).unwrap();
    assert!(nlp.callback_count() > before);
}

proptest! {
    #[test]
    fn pack_unpack_round_trip(values in proptest::collection::vec(-1e3..1e3f64, 104)) {
        let nlp = pendulum();
        let w = DVector::from_vec(values);
        let (states, controls) = nlp.unpack(&w);
        prop_assert_eq!(states.len(), 21);
        prop_assert_eq!(controls.len(), 20);
        prop_assert_eq!(nlp.pack(&states, &controls), w);
    }
}

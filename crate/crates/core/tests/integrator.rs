mod common;

use asrti::benchmark::PendulumModel;
use asrti::integrator::radau3_advance;
use asrti::{radau3_step, simulate_plant, OdeModel};
use common::*;
use nalgebra::{DMatrix, DVector};

fn step_errors(h0: f64) -> (Vec<f64>, Vec<f64>) {
    let model = VanDerPol { damping: 1.0 };
    let x = DVector::from_vec(vec![1.2, -0.4]);
    let u = DVector::from_element(1, 0.3);
    let hs: Vec<f64> = (0..6).map(|i| h0 / 2f64.powi(i)).collect();
    let errs = hs
        .iter()
        .map(|&h| {
            let exact = rk4(&model, &x, &u, h, 2000);
            (radau3_step(&model, &x, &u, h).unwrap().x_next - exact).amax()
        })
        .collect();
    (hs, errs)
}

#[test]
fn local_error_has_order_three_slope() {
    // A one-step local error of an order-3 method scales as h⁴; the global
    // error over a fixed interval scales as h³.
    let (hs, errs) = step_errors(0.2);
    let local = loglog_slope(&hs, &errs);
    assert!((local - 4.0).abs() <= 0.3, "local slope {local}");
}

#[test]
fn global_error_has_order_three_slope() {
    let model = VanDerPol { damping: 1.0 };
    let x = DVector::from_vec(vec![1.2, -0.4]);
    let u = DVector::from_element(1, 0.3);
    let t = 1.0;
    let exact = rk4(&model, &x, &u, t, 20_000);
    let steps = [8usize, 16, 32, 64, 128];
    let hs: Vec<f64> = steps.iter().map(|n| t / *n as f64).collect();
    let errs: Vec<f64> = steps
        .iter()
        .map(|&n| (simulate_plant(&model, &x, &u, t, n).unwrap() - &exact).amax())
        .collect();
    let slope = loglog_slope(&hs, &errs);
    assert!((slope - 3.0).abs() <= 0.3, "global slope {slope}");
}

fn fd_check<M: OdeModel>(model: &M, x: &DVector<f64>, u: &DVector<f64>, h: f64) {
    let r = radau3_step(model, x, u, h).unwrap();
    let eps = 1e-6;
    let nx = x.len();
    for j in 0..nx + u.len() {
        let (mut xp, mut xm, mut up, mut um) = (x.clone(), x.clone(), u.clone(), u.clone());
        if j < nx {
            xp[j] += eps;
            xm[j] -= eps;
        } else {
            up[j - nx] += eps;
            um[j - nx] -= eps;
        }
        let fd = (radau3_advance(model, &xp, &up, h).unwrap() - radau3_advance(model, &xm, &um, h).unwrap()) / (2.0 * eps);
        for i in 0..nx {
            let an = if j < nx { r.sens_x[(i, j)] } else { r.sens_u[(i, j - nx)] };
            assert!((an - fd[i]).abs() <= 1e-5 * an.abs().max(1.0), "({i},{j}): {an} vs {}", fd[i]);
        }
    }
}

#[test]
fn sensitivities_match_finite_differences() {
    fd_check(&VanDerPol { damping: 2.0 }, &DVector::from_vec(vec![0.7, 1.5]), &DVector::from_element(1, -0.8), 0.1);
    let pendulum = PendulumModel::default();
    for (x, u, h) in [
        (vec![0.1, 0.2, -0.3, 0.5], 10.0, 0.05),
        (vec![-0.4, 1.0, 2.0, -3.0], -35.0, 3.95 / 19.0),
        (vec![0.0, 3.0, 0.0, 0.0], 0.0, 0.2),
    ] {
        fd_check(&pendulum, &DVector::from_vec(x), &DVector::from_element(1, u), h);
    }
}

#[test]
fn linear_flow_matches_matrix_exponential_to_order() {
    struct Linear(DMatrix<f64>, DMatrix<f64>);
    impl OdeModel for Linear {
        fn n_x(&self) -> usize {
            2
        }
        fn n_u(&self) -> usize {
            1
        }
        fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
            &self.0 * x + &self.1 * u
        }
        fn rhs_jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
            (self.0.clone(), self.1.clone())
        }
    }
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.5]);
    let model = Linear(a.clone(), DMatrix::zeros(2, 1));
    let h = 0.01;
    let r = radau3_step(&model, &DVector::from_vec(vec![1.0, 0.0]), &DVector::zeros(1), h).unwrap();
    let exp = (a * h).exp();
    assert!((&r.sens_x - &exp).amax() <= 1e-8);
}

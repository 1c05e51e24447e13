use std::hint::black_box;

use asrti::benchmark::PendulumModel;
use asrti::{condense_lhs, condense_rhs_and_solve, radau3_step, solve_dense_qp, Algorithm, Controller, ControllerConfig};
use asrti_bench::{box_qp, operating_point, pendulum_nlp};
use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

fn qp(c: &mut Criterion) {
    let (h, q, cm, r) = box_qp(20);
    c.bench_function("dense_qp_20", |b| b.iter(|| solve_dense_qp(black_box(&h), &q, &cm, &r).unwrap()));

    let nlp = pendulum_nlp();
    let (x, z) = operating_point(&nlp);
    let data = nlp.linearize(&z.w).unwrap();
    c.bench_function("condense_lhs", |b| b.iter(|| condense_lhs(black_box(&data.matrices)).unwrap()));
    let lhs = condense_lhs(&data.matrices).unwrap();
    let x_pert = &x + DVector::from_vec(vec![0.05, 0.02, 0.1, -0.1]);
    c.bench_function("condense_rhs_and_solve", |b| {
        b.iter(|| condense_rhs_and_solve(&lhs, black_box(&data.vectors), &x_pert).unwrap())
    });
    c.bench_function("linearize", |b| b.iter(|| nlp.linearize(black_box(&z.w)).unwrap()));
}

fn integrator(c: &mut Criterion) {
    let model = PendulumModel::default();
    let x = DVector::from_vec(vec![0.1, 0.3, -0.2, 0.5]);
    let u = DVector::from_element(1, 5.0);
    c.bench_function("radau3_step", |b| b.iter(|| radau3_step(&model, black_box(&x), &u, 0.05).unwrap()));
}

fn controller(c: &mut Criterion) {
    let nlp = pendulum_nlp();
    let (x, _) = operating_point(&nlp);
    for name in ["rti", "as-rti-b-2", "as-rti-d-2", "sqp-2"] {
        let alg: Algorithm = name.parse().unwrap();
        let mut ctrl = Controller::new(nlp.clone(), ControllerConfig::new(alg), &x).unwrap();
        ctrl.prepare(&x).unwrap();
        ctrl.feedback(&x).unwrap();
        c.bench_function(&format!("cycle_{name}"), |b| {
            b.iter(|| {
                ctrl.prepare(black_box(&x)).unwrap();
                ctrl.feedback(&x).unwrap()
            })
        });
    }
}

criterion_group!(benches, qp, integrator, controller);
criterion_main!(benches);

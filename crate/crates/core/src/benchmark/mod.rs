//! Closed-loop inverted pendulum benchmark.
//!
//! Every algorithm is simulated on the same seeded scenarios: random initial
//! cart position, and two sampling intervals where the applied control is
//! overwritten by a random force. Closed-loop costs are compared against a
//! reference controller that solves a finer-grid OCP to convergence at every
//! sampling time.

mod dare;
mod pendulum;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use crate::clock::Stopwatch;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dare::{dare_residual, dare_terminal_cost, DARE_MAX_ITER, DARE_TOL};
pub use pendulum::{
    build_pendulum_ocp, build_reference_ocp, nonuniform_grid, pendulum_terminal_weight, running_cost, uniform_grid,
    PendulumModel, PendulumParams,
};

use crate::controller::{cold_start, Algorithm, Controller, ControllerConfig, TraceRecord};
use crate::integrator::simulate_plant;
use crate::mli::sqp_solve;
use crate::nlp::{kkt_from_linearization, transcribe, Iterate, KktResidual, OcpNlp};
use crate::{Error, Result};

pub const DEFAULT_ALGORITHMS: &str =
    "rti,as-rti-a,as-rti-b-1,as-rti-b-2,as-rti-c-1,as-rti-c-2,as-rti-d-1,as-rti-d-2,sqp-2,sqp-100";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Simulated time, s.
    pub t_sim: f64,
    /// Sampling time, s.
    pub dt: f64,
    pub scenarios: usize,
    /// Range of the initial cart position, m.
    pub p0_range: [f64; 2],
    /// Sampling instants at which the applied control is overwritten, s.
    pub disturbance_times: Vec<f64>,
    /// Range of the disturbance force, N.
    pub disturbance_range: [f64; 2],
    pub seed: u64,
    pub plant_substeps: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            t_sim: 4.0,
            dt: 0.05,
            scenarios: 20,
            p0_range: [-0.5, 0.5],
            disturbance_times: vec![0.0, 2.0],
            disturbance_range: [-100.0, 100.0],
            seed: 42,
            plant_substeps: 10,
        }
    }
}

impl ScenarioConfig {
    pub fn cycles(&self) -> usize {
        (self.t_sim / self.dt).round() as usize
    }

    /// Sampling index of a time on the grid.
    fn grid_index(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        ((t / self.dt - k).abs() <= 1e-9 && k >= 0.0).then_some(k as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_range = |r: &[f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !(self.dt > 0.0 && self.t_sim > 0.0) || self.grid_index(self.t_sim).is_none() {
            return Err(Error::config("simulation time must be a positive multiple of the sampling time"));
        }
        if !finite_range(&self.p0_range) || !finite_range(&self.disturbance_range) {
            return Err(Error::config("scenario ranges must be finite with lower <= upper"));
        }
        for &t in &self.disturbance_times {
            match self.grid_index(t) {
                Some(k) if k < self.cycles() => {}
                _ => return Err(Error::config(format!("disturbance time {t} is not a sampling instant of the run"))),
            }
        }
        if self.plant_substeps == 0 {
            return Err(Error::config("plant needs at least one substep"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub model: PendulumParams,
    pub scenario: ScenarioConfig,
    /// Prediction horizon, s.
    pub horizon: f64,
    pub intervals: usize,
    pub reference_intervals: usize,
    pub q_diag: [f64; 4],
    pub r: f64,
    pub u_max: f64,
    pub reference_tol: f64,
    pub reference_max_iter: usize,
    pub sqp_tol: f64,
    pub qp_max_iter: usize,
    /// Worker threads for scenarios; `None` or 1 runs sequentially.
    pub jobs: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            model: PendulumParams::default(),
            scenario: ScenarioConfig::default(),
            horizon: 4.0,
            intervals: 20,
            reference_intervals: 80,
            q_diag: [100.0, 1e3, 0.01, 0.01],
            r: 0.2,
            u_max: 40.0,
            reference_tol: 1e-8,
            reference_max_iter: 100,
            sqp_tol: 1e-8,
            qp_max_iter: crate::qp::DEFAULT_MAX_ITER,
            jobs: None,
        }
    }
}

impl BenchmarkConfig {
    /// Defaults overridden by the fields present in a JSON file.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: BenchmarkConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        PendulumModel::new(self.model)?;
        if self.intervals == 0 || self.reference_intervals == 0 {
            return Err(Error::config("interval counts must be positive"));
        }
        if !(self.u_max > 0.0) || !(self.r > 0.0) || self.q_diag.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::config("weights must be nonnegative, R and the input bound positive"));
        }
        if !(self.reference_tol > 0.0 && self.sqp_tol > 0.0) || self.reference_max_iter == 0 || self.qp_max_iter == 0 {
            return Err(Error::config("tolerances and iteration limits must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(Error::config("jobs must be at least 1"));
        }
        Ok(())
    }
}

/// One realization of initial state and disturbances.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub index: usize,
    pub x0: DVector<f64>,
    /// `(sampling index, force)` in chronological order.
    pub disturbances: Vec<(usize, f64)>,
}

impl Scenario {
    fn disturbance_at(&self, k: usize) -> Option<f64> {
        self.disturbances.iter().find(|(i, _)| *i == k).map(|(_, u)| *u)
    }
}

/// Draws scenario `index`: stream `index` of the seeded generator, initial
/// position first, then the disturbances in time order.
pub fn generate_scenario(cfg: &ScenarioConfig, index: usize) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let [plo, phi] = cfg.p0_range;
    let p0 = if plo < phi { rng.random_range(plo..=phi) } else { plo };
    let mut times: Vec<usize> = cfg.disturbance_times.iter().filter_map(|&t| cfg.grid_index(t)).collect();
    times.sort_unstable();
    let [dlo, dhi] = cfg.disturbance_range;
    let disturbances = times
        .into_iter()
        .map(|k| (k, if dlo < dhi { rng.random_range(dlo..=dhi) } else { dlo }))
        .collect();
    Ok(Scenario { index, x0: DVector::from_vec(vec![p0, 0.0, 0.0, 0.0]), disturbances })
}

/// Algorithm column of the benchmark: a real-time controller or the
/// converged fine-grid reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchAlgorithm {
    Reference,
    Controller(Algorithm),
}

impl fmt::Display for BenchAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchAlgorithm::Reference => write!(f, "reference"),
            BenchAlgorithm::Controller(a) => a.fmt(f),
        }
    }
}

impl FromStr for BenchAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("reference") {
            Ok(BenchAlgorithm::Reference)
        } else {
            s.parse().map(BenchAlgorithm::Controller)
        }
    }
}

/// Parses a comma-separated algorithm list.
pub fn parse_algorithms(list: &str) -> Result<Vec<BenchAlgorithm>> {
    let algs: Vec<BenchAlgorithm> =
        list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    if algs.is_empty() {
        return Err(Error::config("empty algorithm list"));
    }
    Ok(algs)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryStep {
    pub cycle: usize,
    pub time: f64,
    pub state: Vec<f64>,
    /// Control returned by the controller.
    pub u_controller: f64,
    /// Control applied to the plant (the disturbance, when one is active).
    pub u_applied: f64,
}

/// Per-scenario closed-loop metrics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMetrics {
    pub closed_loop_cost: f64,
    /// Filled in by [`run_benchmark`] once the reference cost is known.
    pub rel_subopt_pct: Option<f64>,
    pub mean_g_norm: f64,
    pub mean_lagrange_grad: f64,
    /// Excludes the cold-start preparation.
    pub max_prep_s: f64,
    pub max_feedback_s: f64,
    pub fallbacks: usize,
    /// Largest model-callback count of a single feedback phase.
    pub max_feedback_callbacks: usize,
    pub failed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub algorithm: BenchAlgorithm,
    pub metrics: RunMetrics,
    pub trajectory: Vec<TrajectoryStep>,
    pub trace: Vec<TraceRecord>,
}

/// Transcribed controller and reference problems shared by all runs.
#[derive(Debug, Clone)]
pub struct BenchmarkProblems {
    pub controller: Arc<OcpNlp>,
    pub reference: Arc<OcpNlp>,
    pub model: PendulumModel,
}

impl BenchmarkProblems {
    pub fn new(cfg: &BenchmarkConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(BenchmarkProblems {
            controller: Arc::new(transcribe(build_pendulum_ocp(cfg)?)?),
            reference: Arc::new(transcribe(build_reference_ocp(cfg)?)?),
            model: PendulumModel::new(cfg.model)?,
        })
    }
}

trait ClosedLoopPolicy {
    fn nlp(&self) -> &OcpNlp;
    fn output(&self) -> &Iterate;
    /// Returns `(u, feedback seconds, feedback callbacks)`.
    fn feedback(&mut self, x: &DVector<f64>) -> Result<(DVector<f64>, f64, usize)>;
    /// Returns preparation seconds.
    fn prepare(&mut self, x: &DVector<f64>) -> Result<f64>;
    fn fallbacks(&self) -> usize;
    fn take_trace(&mut self) -> Vec<TraceRecord>;
}

impl ClosedLoopPolicy for Controller {
    fn nlp(&self) -> &OcpNlp {
        Controller::nlp(self)
    }
    fn output(&self) -> &Iterate {
        Controller::output(self)
    }
    fn feedback(&mut self, x: &DVector<f64>) -> Result<(DVector<f64>, f64, usize)> {
        let u = Controller::feedback(self, x)?;
        let m = self.metrics();
        Ok((u, m.timings.feedback, m.feedback_callbacks))
    }
    fn prepare(&mut self, x: &DVector<f64>) -> Result<f64> {
        Controller::prepare(self, x)
    }
    fn fallbacks(&self) -> usize {
        self.metrics().fallbacks
    }
    fn take_trace(&mut self) -> Vec<TraceRecord> {
        Controller::take_trace(self)
    }
}

struct ReferencePolicy {
    nlp: Arc<OcpNlp>,
    z: Iterate,
    tol: f64,
    max_iter: usize,
    unconverged: usize,
}

impl ClosedLoopPolicy for ReferencePolicy {
    fn nlp(&self) -> &OcpNlp {
        &self.nlp
    }
    fn output(&self) -> &Iterate {
        &self.z
    }
    fn feedback(&mut self, x: &DVector<f64>) -> Result<(DVector<f64>, f64, usize)> {
        let calls = self.nlp.callback_count();
        let start = Stopwatch::start();
        let out = sqp_solve(&self.nlp, x, &self.z, self.tol, self.max_iter)?;
        let elapsed = start.elapsed();
        if !out.converged {
            self.unconverged += 1;
        }
        self.z = out.iterate;
        Ok((self.nlp.control(&self.z.w, 0), elapsed, self.nlp.callback_count() - calls))
    }
    fn prepare(&mut self, _x: &DVector<f64>) -> Result<f64> {
        Ok(0.0)
    }
    fn fallbacks(&self) -> usize {
        self.unconverged
    }
    fn take_trace(&mut self) -> Vec<TraceRecord> {
        Vec::new()
    }
}

fn output_kkt(nlp: &OcpNlp, z: &Iterate, x: &DVector<f64>) -> Result<KktResidual> {
    let data = nlp.linearize(&z.w)?;
    Ok(kkt_from_linearization(&data, z, x))
}

fn closed_loop(
    policy: &mut dyn ClosedLoopPolicy,
    problems: &BenchmarkProblems,
    cfg: &BenchmarkConfig,
    scenario: &Scenario,
    metrics: &mut RunMetrics,
    trajectory: &mut Vec<TrajectoryStep>,
) -> Result<()> {
    let sc = &cfg.scenario;
    let cycles = sc.cycles();
    let mut x = scenario.x0.clone();
    policy.prepare(&x)?;
    let (mut sum_g, mut sum_grad) = (0.0, 0.0);
    for k in 0..cycles {
        let (u, t_fb, calls) = policy.feedback(&x)?;
        metrics.max_feedback_s = metrics.max_feedback_s.max(t_fb);
        metrics.max_feedback_callbacks = metrics.max_feedback_callbacks.max(calls);

        let kkt = output_kkt(policy.nlp(), policy.output(), &x)?;
        sum_g += kkt.eq;
        sum_grad += kkt.stat;

        let u_applied = scenario.disturbance_at(k).unwrap_or(u[0]);
        metrics.closed_loop_cost += sc.dt * running_cost(cfg, &x, u_applied);
        trajectory.push(TrajectoryStep {
            cycle: k,
            time: k as f64 * sc.dt,
            state: x.iter().copied().collect(),
            u_controller: u[0],
            u_applied,
        });
        let x_next = simulate_plant(&problems.model, &x, &DVector::from_element(1, u_applied), sc.dt, sc.plant_substeps)?;
        if k + 1 < cycles {
            let t_prep = policy.prepare(&x)?;
            metrics.max_prep_s = metrics.max_prep_s.max(t_prep);
        }
        x = x_next;
    }
    metrics.mean_g_norm = sum_g / cycles as f64;
    metrics.mean_lagrange_grad = sum_grad / cycles as f64;
    Ok(())
}

/// Simulates one scenario in closed loop. Controller errors do not
/// propagate: the run is returned with `failed` set.
pub fn run_scenario(
    problems: &BenchmarkProblems,
    cfg: &BenchmarkConfig,
    algorithm: BenchAlgorithm,
    scenario: &Scenario,
    record_trace: bool,
) -> Result<ScenarioRun> {
    let mut policy: Box<dyn ClosedLoopPolicy> = match algorithm {
        BenchAlgorithm::Reference => {
            let nlp = Arc::clone(&problems.reference);
            let z = cold_start(&nlp, &scenario.x0);
            Box::new(ReferencePolicy { nlp, z, tol: cfg.reference_tol, max_iter: cfg.reference_max_iter, unconverged: 0 })
        }
        BenchAlgorithm::Controller(alg) => {
            let mut config = ControllerConfig::new(alg);
            config.qp_max_iter = cfg.qp_max_iter;
            config.sqp_tol = cfg.sqp_tol;
            config.record_trace = record_trace;
            Box::new(Controller::new(Arc::clone(&problems.controller), config, &scenario.x0)?)
        }
    };
    let mut metrics = RunMetrics::default();
    let mut trajectory = Vec::new();
    if let Err(e) = closed_loop(policy.as_mut(), problems, cfg, scenario, &mut metrics, &mut trajectory) {
        metrics.failed = true;
        metrics.error = Some(e.to_string());
    }
    metrics.fallbacks = policy.fallbacks();
    Ok(ScenarioRun { algorithm, metrics, trajectory, trace: policy.take_trace() })
}

/// `100 (cost - cost_ref) / cost_ref`.
pub fn relative_suboptimality(cost: f64, cost_ref: f64) -> f64 {
    100.0 * (cost - cost_ref) / cost_ref
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub max_prep_ms: f64,
    pub max_feedback_ms: f64,
    pub rel_subopt_pct: f64,
    pub mean_g_norm_x1e3: f64,
    pub mean_lagrange_grad: f64,
    pub failed_scenarios: usize,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResults {
    pub rows: Vec<ResultRow>,
    /// `runs[s][a]` for scenario `s` and algorithm `a` of the input list.
    pub runs: Vec<Vec<RunMetrics>>,
    pub reference: Vec<RunMetrics>,
}

/// Runs every algorithm on the same scenarios and aggregates the results.
pub fn run_benchmark(cfg: &BenchmarkConfig, algorithms: &[BenchAlgorithm]) -> Result<BenchmarkResults> {
    let problems = BenchmarkProblems::new(cfg)?;
    let scenarios: Vec<Scenario> =
        (0..cfg.scenario.scenarios).map(|i| generate_scenario(&cfg.scenario, i)).collect::<Result<_>>()?;

    let per_scenario = |sc: &Scenario| -> Result<(RunMetrics, Vec<RunMetrics>)> {
        let reference = run_scenario(&problems, cfg, BenchAlgorithm::Reference, sc, false)?.metrics;
        let runs = algorithms
            .iter()
            .map(|&a| run_scenario(&problems, cfg, a, sc, false).map(|r| r.metrics))
            .collect::<Result<Vec<_>>>()?;
        Ok((reference, runs))
    };

    let outcomes: Vec<(RunMetrics, Vec<RunMetrics>)> = match cfg.jobs {
        Some(jobs) if jobs > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::config(e.to_string()))?;
            pool.install(|| scenarios.par_iter().map(per_scenario).collect::<Result<_>>())?
        }
        _ => scenarios.iter().map(per_scenario).collect::<Result<_>>()?,
    };

    let mut reference = Vec::with_capacity(outcomes.len());
    let mut runs = Vec::with_capacity(outcomes.len());
    for (r, mut a) in outcomes {
        for m in a.iter_mut() {
            if !m.failed && !r.failed {
                m.rel_subopt_pct = Some(relative_suboptimality(m.closed_loop_cost, r.closed_loop_cost));
            }
        }
        reference.push(r);
        runs.push(a);
    }

    let rows = algorithms
        .iter()
        .enumerate()
        .map(|(j, alg)| {
            let column: Vec<&RunMetrics> = runs.iter().map(|r| &r[j]).collect();
            aggregate(&alg.to_string(), &column)
        })
        .collect();
    Ok(BenchmarkResults { rows, runs, reference })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn aggregate(name: &str, column: &[&RunMetrics]) -> ResultRow {
    let ok: Vec<&&RunMetrics> = column.iter().filter(|m| !m.failed).collect();
    let max = |f: fn(&RunMetrics) -> f64| ok.iter().map(|m| f(m)).fold(0.0_f64, f64::max);
    ResultRow {
        algorithm: name.to_string(),
        max_prep_ms: 1e3 * max(|m| m.max_prep_s),
        max_feedback_ms: 1e3 * max(|m| m.max_feedback_s),
        rel_subopt_pct: mean(ok.iter().filter_map(|m| m.rel_subopt_pct)),
        mean_g_norm_x1e3: 1e3 * mean(ok.iter().map(|m| m.mean_g_norm)),
        mean_lagrange_grad: mean(ok.iter().map(|m| m.mean_lagrange_grad)),
        failed_scenarios: column.len() - ok.len(),
    }
}

/// Residual traces of one algorithm on one scenario.
pub fn run_traces(cfg: &BenchmarkConfig, algorithm: Algorithm, scenario_index: usize) -> Result<ScenarioRun> {
    let problems = BenchmarkProblems::new(cfg)?;
    let scenario = generate_scenario(&cfg.scenario, scenario_index)?;
    run_scenario(&problems, cfg, BenchAlgorithm::Controller(algorithm), &scenario, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub algorithm: String,
    /// `max_prep_ms + max_feedback_ms`.
    pub max_total_ms: f64,
    pub rel_subopt_pct: f64,
    /// No other algorithm is at least as fast and as good, and strictly
    /// better in one of the two.
    pub pareto_optimal: bool,
}

pub fn pareto_front(rows: &[ResultRow]) -> Vec<ParetoPoint> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.max_prep_ms + r.max_feedback_ms, r.rel_subopt_pct)).collect();
    rows.iter()
        .zip(&pts)
        .map(|(r, &(t, s))| {
            let valid = t.is_finite() && s.is_finite();
            let dominated = pts
                .iter()
                .any(|&(t2, s2)| t2.is_finite() && s2.is_finite() && t2 <= t && s2 <= s && (t2 < t || s2 < s));
            ParetoPoint {
                algorithm: r.algorithm.clone(),
                max_total_ms: t,
                rel_subopt_pct: s,
                pareto_optimal: valid && !dominated,
            }
        })
        .collect()
}

fn write_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_csv(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_pareto_csv(path: impl AsRef<Path>, points: &[ParetoPoint]) -> Result<()> {
    write_rows(path, points)
}

pub fn write_traces_csv(path: impl AsRef<Path>, trace: &[TraceRecord]) -> Result<()> {
    write_rows(path, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = BenchmarkConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.scenario.cycles(), 80);
    }

    #[test]
    fn off_grid_disturbance_rejected() {
        let sc = ScenarioConfig { disturbance_times: vec![0.0, 2.01], ..Default::default() };
        assert!(sc.validate().is_err());
        let sc = ScenarioConfig { disturbance_times: vec![4.0], ..Default::default() };
        assert!(sc.validate().is_err());
    }

    #[test]
    fn scenario_draws_are_reproducible_and_in_range() {
        let sc = ScenarioConfig::default();
        for i in 0..20 {
            let a = generate_scenario(&sc, i).unwrap();
            assert_eq!(a, generate_scenario(&sc, i).unwrap());
            assert!(a.x0[0].abs() <= 0.5);
            assert_eq!(a.x0.rows(1, 3).amax(), 0.0);
            assert_eq!(a.disturbances.iter().map(|d| d.0).collect::<Vec<_>>(), vec![0, 40]);
            assert!(a.disturbances.iter().all(|d| d.1.abs() <= 100.0));
        }
        assert_ne!(generate_scenario(&sc, 0).unwrap().x0, generate_scenario(&sc, 1).unwrap().x0);
    }

    #[test]
    fn partial_json_override() {
        let cfg: BenchmarkConfig =
            serde_json::from_str(r#"{"scenario": {"scenarios": 3}, "model": {"pole_length": 0.5}}"#).unwrap();
        assert_eq!(cfg.scenario.scenarios, 3);
        assert_eq!(cfg.scenario.dt, 0.05);
        assert_eq!(cfg.model.pole_length, 0.5);
        assert_eq!(cfg.model.cart_mass, 1.0);
        assert!(serde_json::from_str::<BenchmarkConfig>(r#"{"horizn": 3}"#).is_err());
    }

    #[test]
    fn algorithm_list() {
        let algs = parse_algorithms(DEFAULT_ALGORITHMS).unwrap();
        assert_eq!(algs.len(), 10);
        assert_eq!(parse_algorithms("reference").unwrap(), vec![BenchAlgorithm::Reference]);
        assert!(parse_algorithms("rti,foo").is_err());
        assert!(parse_algorithms("").is_err());
    }

    #[test]
    fn pareto_marks_dominated_points() {
        let row = |name: &str, t: f64, s: f64| ResultRow {
            algorithm: name.into(),
            max_prep_ms: t,
            max_feedback_ms: 0.0,
            rel_subopt_pct: s,
            mean_g_norm_x1e3: 0.0,
            mean_lagrange_grad: 0.0,
            failed_scenarios: 0,
        };
        let pts = pareto_front(&[row("a", 1.0, 3.0), row("b", 2.0, 1.0), row("c", 2.5, 2.0), row("d", 1.0, 3.0)]);
        let flags: Vec<bool> = pts.iter().map(|p| p.pareto_optimal).collect();
        assert_eq!(flags, vec![true, true, false, true]);
    }
}

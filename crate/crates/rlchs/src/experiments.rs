//! Seeded experiment sweeps. Seeds fan out over a rayon pool and results
//! are collected in seed order, so output does not depend on thread count.

use std::time::Instant;

use rayon::prelude::*;
use rlchs_core::cqdrift::CqdriftPlan;
use rlchs_core::error::Error as CoreError;
use rlchs_core::lcu::LcuProblem;
use rlchs_core::lchs::{LchsSplit, ShiftPolicy};
use rlchs_core::linalg::StateVector;
use rlchs_core::models::Dynamics;
use rlchs_core::observable::{estimate_observable, urcc_estimate, urcc_segments, MEstimator, Observable, ObservableProblem};
use rlchs_core::pauli::PauliString;
use rlchs_core::quadrature::{choose_truncation, KernelParams};
use rlchs_core::resources::{resource_estimate, ResourceInputs, ResourceReport};
use rlchs_core::rng::derive_seed;
use rlchs_core::schedule::TimeDependentGenerator;
use rlchs_core::symmetry::{Protector, TracePoint};
use rlchs_core::trials::{evaluate_trace, exact_state, exact_states_at, max_trace_gap, state_trial, trace_trial};

use crate::config::{Estimator, ExperimentConfig, Protection};
use crate::scenario::Scenario;
use crate::AppError;

pub const BASELINE: &str = "rand-lchs";
pub const PROTECTED: &str = "sym-rand-lchs";
pub const EXACT: &str = "exact";

/// Runs `f` on a pool of `threads` workers (`None`: available parallelism).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, AppError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| AppError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Stream seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index)
}

/// One homogeneous solve compared against the dense oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub r: usize,
    pub seed: u64,
    pub method: &'static str,
    pub error: f64,
    pub trace_distance: f64,
    pub std_error_norm: f64,
    pub shots: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub r: usize,
    pub method: &'static str,
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub grid_nodes: usize,
    pub wall_seconds: f64,
}

impl Benchmark {
    pub fn mean(&self, r: usize, method: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.r == r && s.method == method).map(|s| s.mean)
    }
}

/// Sampler state shared by every seed of a sweep.
struct Setup {
    problem: LcuProblem,
    exact: StateVector,
    protector: Option<Protector>,
}

fn setup(cfg: &ExperimentConfig, scenario: &Scenario, protection: Protection) -> Result<Setup, AppError> {
    let params = KernelParams::new(cfg.beta)?;
    let problem = LcuProblem::new(&scenario.generator, None, &scenario.u0, &params, cfg.eps)?;
    let exact = exact_state(&scenario.generator, &scenario.u0, cfg.model.t_final)?;
    let strings: Vec<PauliString> = problem.split.terms().iter().map(|t| t.string).collect();
    let protector = scenario.protector(protection, cfg.window, &strings)?;
    Ok(Setup { problem, exact, protector })
}

fn methods(setup: &Setup) -> Vec<(&'static str, Option<&Protector>)> {
    let mut out = vec![(BASELINE, None)];
    if let Some(p) = &setup.protector {
        out.push((PROTECTED, Some(p)));
    }
    out
}

fn trials_at(setup: &Setup, segments: &[usize], shots: u64, master: u64, seed: u64) -> Result<Vec<TrialRecord>, AppError> {
    let stream = trial_seed(master, seed);
    let mut out = Vec::new();
    for &r in segments {
        for (method, protector) in methods(setup) {
            let clock = Instant::now();
            let t = state_trial(&setup.problem, &setup.exact, r, protector, shots, stream)?;
            out.push(TrialRecord {
                r,
                seed,
                method,
                error: t.error,
                trace_distance: t.trace_distance,
                std_error_norm: t.std_error_norm,
                shots,
                wall_seconds: clock.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(out)
}

/// Mean and population standard deviation per `(r, method)`, in the order
/// rows first appear.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, &'static str)> = Vec::new();
    for rec in records {
        if !keys.contains(&(rec.r, rec.method)) {
            keys.push((rec.r, rec.method));
        }
    }
    keys.into_iter()
        .map(|(r, method)| {
            let errs: Vec<f64> = records.iter().filter(|x| x.r == r && x.method == method).map(|x| x.error).collect();
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
            SummaryRow { r, method, mean, std: var.sqrt(), count: errs.len() }
        })
        .collect()
}

/// Final-state error against the dense oracle for every `(r, seed)` of the
/// schedule, baseline and (unless protection is off) protected.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<Benchmark, AppError> {
    let clock = Instant::now();
    let scenario = Scenario::new(cfg)?;
    let setup = setup(cfg, &scenario, cfg.protection)?;
    let per_seed: Vec<Vec<TrialRecord>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| trials_at(&setup, &cfg.segments, cfg.shots, cfg.master_seed, s))
        .collect::<Result<_, _>>()?;
    let mut records: Vec<TrialRecord> = per_seed.into_iter().flatten().collect();
    // Stable: seeds stay ascending and baseline precedes protected.
    records.sort_by_key(|x| x.r);
    let summary = summarize(&records);
    Ok(Benchmark { records, summary, grid_nodes: setup.problem.grid.len(), wall_seconds: clock.elapsed().as_secs_f64() })
}

/// One solve per seed at the largest configured segment count.
pub struct Simulation {
    pub records: Vec<TrialRecord>,
    pub exact: StateVector,
    /// Estimate of the first seed and first listed method.
    pub estimate: StateVector,
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Simulation, AppError> {
    let scenario = Scenario::new(cfg)?;
    let setup = setup(cfg, &scenario, cfg.protection)?;
    let r = *cfg.segments.last().expect("checked non-empty");
    let per_seed: Vec<Vec<TrialRecord>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| trials_at(&setup, &[r], cfg.shots, cfg.master_seed, s))
        .collect::<Result<_, _>>()?;
    let protector = setup.protector.as_ref();
    let first = state_trial(&setup.problem, &setup.exact, r, protector, cfg.shots, trial_seed(cfg.master_seed, 0))?;
    Ok(Simulation { records: per_seed.into_iter().flatten().collect(), exact: setup.exact.clone(), estimate: first.estimate })
}

/// One row of an observable trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub method: &'static str,
    pub r: Option<usize>,
    pub seed: Option<u64>,
    pub point: TracePoint,
}

/// Largest deviation of one randomized trace from the exact trace.
#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub r: usize,
    pub seed: u64,
    pub method: &'static str,
    pub max_gap: f64,
}

#[derive(Clone, Debug)]
pub struct Traces {
    /// Column names of `TracePoint::values`.
    pub columns: Vec<&'static str>,
    pub rows: Vec<TraceRow>,
    pub gaps: Vec<GapRow>,
}

impl Traces {
    pub fn exact(&self) -> impl Iterator<Item = &TracePoint> {
        self.rows.iter().filter(|r| r.method == EXACT).map(|r| &r.point)
    }

    /// Mean max gap over seeds for `(r, method)`.
    pub fn mean_gap(&self, r: usize, method: &str) -> Option<f64> {
        let g: Vec<f64> = self.gaps.iter().filter(|g| g.r == r && g.method == method).map(|g| g.max_gap).collect();
        (!g.is_empty()).then(|| g.iter().sum::<f64>() / g.len() as f64)
    }
}

/// Exact, baseline and protected traces of every observable and `⟨η⟩` at
/// the checkpoint times of each trace segment count.
pub fn run_traces(cfg: &ExperimentConfig) -> Result<Traces, AppError> {
    let scenario = Scenario::new(cfg)?;
    let setup = setup(cfg, &scenario, cfg.protection)?;
    let observables = scenario.dense_observables()?;
    let columns = scenario.observables.iter().map(|(k, _)| crate::output::observable_name(*k)).collect();
    let t_final = cfg.model.t_final;

    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    let exact_times: Vec<f64> = (0..=64).map(|m| t_final * m as f64 / 64.0).collect();
    let exact = exact_states_at(&scenario.generator, &scenario.u0, &exact_times)?;
    for p in evaluate_trace(&exact, &observables, &scenario.eta) {
        rows.push(TraceRow { method: EXACT, r: None, seed: None, point: p });
    }
    for &r in &cfg.trace_segments {
        let per_seed: Vec<Vec<(&'static str, Vec<TracePoint>)>> = (0..cfg.seeds)
            .into_par_iter()
            .map(|s| -> Result<_, AppError> {
                let stream = trial_seed(cfg.master_seed, s);
                let mut out = Vec::new();
                for (method, protector) in methods(&setup) {
                    let states = trace_trial(&setup.problem, r, protector, cfg.trace_shots, stream)?;
                    out.push((method, evaluate_trace(&states, &observables, &scenario.eta)));
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;
        let times: Vec<f64> = per_seed[0][0].1.iter().map(|p| p.t).collect();
        let reference = evaluate_trace(&exact_states_at(&scenario.generator, &scenario.u0, &times)?, &observables, &scenario.eta);
        for (s, methods) in per_seed.into_iter().enumerate() {
            for (method, trace) in methods {
                gaps.push(GapRow { r, seed: s as u64, method, max_gap: max_trace_gap(&trace, &reference) });
                rows.extend(trace.into_iter().map(|point| TraceRow { method, r: Some(r), seed: Some(s as u64), point }));
            }
        }
    }
    Ok(Traces { columns, rows, gaps })
}

/// One row of the observable-estimation CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRow {
    pub part: &'static str,
    pub samples: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub exact_reference: f64,
    pub mode: &'static str,
}

/// `⟨u(T)|O|u(T)⟩` through the configured estimator.
pub fn run_observable(cfg: &ExperimentConfig) -> Result<Vec<ObservableRow>, AppError> {
    let scenario = Scenario::new(cfg)?;
    let o = scenario.observable(cfg.observable)?;
    let exact_u = exact_state(&scenario.generator, &scenario.u0, cfg.model.t_final)?;
    let exact = Observable::new(o)?.expectation(&exact_u, &exact_u).re;
    let seed = trial_seed(cfg.master_seed, 0);
    let mode = cfg.estimator.label();
    if cfg.estimator == Estimator::Urcc {
        // Path sampling works on the Hamiltonian itself: u(T) = e^{−iHT} u₀.
        if cfg.model.dynamics != Dynamics::Schrodinger || !scenario.operator.is_hermitian() {
            return Err(AppError::Numerical(CoreError::Contract("urcc needs schrodinger dynamics with a Hermitian operator".into())));
        }
        let h = TimeDependentGenerator::constant(&scenario.operator, cfg.model.t_final)?;
        let r = urcc_segments(&h)?;
        let est = urcc_estimate(&h, &scenario.u0, o, cfg.samples, r, seed, f64::INFINITY)?;
        return Ok(vec![ObservableRow { part: "re", samples: cfg.samples, estimate: est.value, std_error: est.std_error, exact_reference: exact, mode }]);
    }
    let params = KernelParams::new(cfg.beta)?;
    let mut problem = ObservableProblem::new(&scenario.generator, &scenario.u0, o, &params, cfg.eps)?;
    let estimator = match cfg.estimator {
        Estimator::Exact => MEstimator::Exact,
        Estimator::Shot => MEstimator::Shot { r: None },
        _ => MEstimator::CqdriftMean { r: *cfg.segments.last().expect("checked non-empty") },
    };
    if matches!(estimator, MEstimator::Exact | MEstimator::Shot { r: None }) {
        problem = problem.with_exact_states(1e-12)?;
    }
    let est = estimate_observable(&problem, cfg.samples, estimator, seed)?;
    Ok(vec![
        ObservableRow { part: "re", samples: cfg.samples, estimate: est.value.re, std_error: est.std_error, exact_reference: exact, mode },
        ObservableRow { part: "im", samples: cfg.samples, estimate: est.value.im, std_error: est.std_error_im, exact_reference: 0.0, mode },
    ])
}

/// Closed-form costs for the configured model, observable and tolerances.
pub fn run_resources(cfg: &ExperimentConfig) -> Result<ResourceReport, AppError> {
    let scenario = Scenario::new(cfg)?;
    let params = KernelParams::new(cfg.beta)?;
    let split = LchsSplit::new(&scenario.generator, ShiftPolicy::Exact)?;
    let t = cfg.model.t_final;
    let k_max = choose_truncation(&params, 0.5 * cfg.eps * (-split.shift() * t).exp())?;
    let lambda = CqdriftPlan::from_split(&split, k_max, 0.0, t, 1, 0)?.lambda();
    let final_norm = exact_state(&scenario.generator, &scenario.u0, t)?.norm();
    let inputs = ResourceInputs {
        qubits: scenario.qubits(),
        t_final: t,
        norm_l: split.norm_l(),
        shift: split.shift(),
        lambda,
        eps: cfg.eps,
        delta: cfg.delta,
        beta: cfg.beta,
        amplification: scenario.u0.norm() / final_norm,
        norm_o: Observable::new(scenario.observable(cfg.observable)?)?.norm(),
        u0_norm: scenario.u0.norm(),
        source_rate: None,
    };
    Ok(resource_estimate(&inputs)?)
}

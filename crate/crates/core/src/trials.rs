//! Seeded trials behind the error-versus-segments benchmark and the
//! observable-trace experiment.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cqdrift::CqdriftPlan;
use crate::error::{bail, Result};
use crate::lcu::{combine_solution, run_shots, InnerMode, LcuProblem};
use crate::linalg::{expm, DenseOperator, StateVector};
use crate::rng::stream;
use crate::schedule::TimeDependentGenerator;
use crate::symmetry::{trace_point, Protector, TracePoint};

/// `‖a/‖a‖ − b/‖b‖‖`.
pub fn normalized_distance(a: &StateVector, b: &StateVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    a.scale_real(1.0 / na).distance(&b.scale_real(1.0 / nb))
}

/// Trace distance between the pure states `a/‖a‖` and `b/‖b‖`.
pub fn pure_trace_distance(a: &StateVector, b: &StateVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    let overlap = a.inner(b).norm() / (na * nb);
    (1.0 - overlap * overlap).max(0.0).sqrt()
}

/// Exact `e^{−G t} u₀` for a time-independent generator.
pub fn exact_state(g: &TimeDependentGenerator, u0: &StateVector, t: f64) -> Result<StateVector> {
    if !g.is_time_independent() {
        bail!(Contract, "exact_state needs a time-independent generator");
    }
    Ok(expm(&g.at(0.0).to_dense()?.scale_real(-t))?.apply(u0))
}

/// Outcome of one homogeneous solve.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrial {
    pub estimate: StateVector,
    /// Euclidean distance of normalized states.
    pub error: f64,
    pub trace_distance: f64,
    pub std_error_norm: f64,
}

/// Stratified homogeneous estimate with `shots` c-qDrift shots of `r`
/// segments, compared against `reference`. Shots of the same `seed` share
/// outer draws and step draws whether or not `protector` is given.
pub fn state_trial(
    problem: &LcuProblem,
    reference: &StateVector,
    r: usize,
    protector: Option<&Protector>,
    shots: u64,
    seed: u64,
) -> Result<StateTrial> {
    let mode = match protector {
        Some(protector) => InnerMode::Protected { r, protector },
        None => InnerMode::Cqdrift { r },
    };
    let acc = run_shots(problem, &mode, shots, 0, seed, true)?;
    let est = combine_solution(problem, &acc)?;
    Ok(StateTrial {
        error: normalized_distance(&est.state, reference),
        trace_distance: pure_trace_distance(&est.state, reference),
        std_error_norm: est.std_error_norm,
        estimate: est.state,
    })
}

/// Checkpoint times `m·T/r` used by [`trace_trial`]: at most 65 points.
pub fn checkpoint_stride(r: usize) -> usize {
    (r / 64).max(1)
}

/// Randomized estimates of `u(t)` at the segment boundaries `t_m` visited
/// every [`checkpoint_stride`] segments, from `shots` stratified shots.
///
/// The prefix of each trajectory doubles as the trajectory for the shorter
/// time; this is exact for time-independent generators, where segment `m`
/// ends at `m T / r`.
pub fn trace_trial(
    problem: &LcuProblem,
    r: usize,
    protector: Option<&Protector>,
    shots: u64,
    seed: u64,
) -> Result<Vec<(f64, StateVector)>> {
    if shots == 0 {
        bail!(Parameter, "need at least one shot");
    }
    let split = &problem.split;
    let t_final = split.t_final();
    let stride = checkpoint_stride(r);
    let dim = problem.dim();
    let u0_norm = problem.u0.norm();
    let u = if u0_norm > 0.0 { problem.u0.normalized() } else { problem.u0.clone() };
    let mut sums: Vec<(f64, StateVector)> = Vec::new();
    for index in 0..shots {
        let mut rng = stream(seed, index);
        let sample = problem.sample_outer(&mut rng, Some((index, shots)));
        let k = problem.grid.nodes[sample.j];
        let c = problem.grid.weights[sample.j];
        let unit = c / c.norm();
        let mut plan = CqdriftPlan::from_split(split, k, 0.0, t_final, r, 0)?;
        if let Some(p) = protector {
            plan = p.apply(&plan)?;
        }
        let steps = plan.sample_steps(&mut rng);
        let mut psi = u.clone();
        let mut slot = 0;
        plan.apply_with_checkpoints(&steps, psi.amplitudes_mut(), stride, |_, t, state| {
            let weight = u0_norm * (split.shift() * t).exp() * problem.grid.l1;
            let factor = unit * split.node_phase(k, t) * weight;
            if sums.len() <= slot {
                sums.push((t, StateVector::zeros(dim)));
            }
            let acc = &mut sums[slot].1;
            for (a, s) in acc.amplitudes_mut().iter_mut().zip(state) {
                *a += factor * s;
            }
            slot += 1;
        });
    }
    let inv = 1.0 / shots as f64;
    Ok(sums.into_iter().map(|(t, v)| (t, v.scale_real(inv))).collect())
}

/// Evaluates `observables` and `η` along estimated or exact states.
pub fn evaluate_trace(
    states: &[(f64, StateVector)],
    observables: &[DenseOperator],
    eta: &DenseOperator,
) -> Vec<TracePoint> {
    states.iter().map(|(t, psi)| trace_point(*t, psi, observables, eta)).collect()
}

/// Exact states at the given times (time-independent generator).
pub fn exact_states_at(g: &TimeDependentGenerator, u0: &StateVector, times: &[f64]) -> Result<Vec<(f64, StateVector)>> {
    if !g.is_time_independent() {
        bail!(Contract, "exact_states_at needs a time-independent generator");
    }
    let dense = g.at(0.0).to_dense()?;
    let mut out = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut psi = u0.clone();
    let mut cache: Option<(f64, DenseOperator)> = None;
    for &t in times {
        let dt = t - prev_t;
        if dt < 0.0 {
            bail!(Parameter, "times must be non-decreasing");
        }
        if dt > 0.0 {
            let same = cache.as_ref().is_some_and(|(h, _)| (h - dt).abs() <= 1e-14 * dt.max(1.0));
            if !same {
                cache = Some((dt, expm(&dense.scale_real(-dt))?));
            }
            psi = cache.as_ref().expect("set above").1.apply(&psi);
        }
        out.push((t, psi.clone()));
        prev_t = t;
    }
    Ok(out)
}

/// Largest `|estimate − exact|` over times and observables (η excluded).
pub fn max_trace_gap(estimate: &[TracePoint], exact: &[TracePoint]) -> f64 {
    estimate
        .iter()
        .zip(exact)
        .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Mean of `(baseline − protected) / baseline` over paired entries.
pub fn mean_relative_reduction(baseline: &[f64], protected: &[f64]) -> f64 {
    let pairs: Vec<f64> = baseline
        .iter()
        .zip(protected)
        .filter(|(b, _)| **b > 0.0)
        .map(|(b, p)| (b - p) / b)
        .collect();
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().sum::<f64>() / pairs.len() as f64
}

//! Ancilla-free randomized LCU over the LCHS grid.
//!
//! A homogeneous shot samples node `j ∝ |c_j|`, runs one inner evolution
//! `U_j` on the normalized initial state and multiplies by `c_j/|c_j|`. An
//! inhomogeneous shot first samples a time node `s ∝ c′`, then `j`, and
//! evolves the normalized source `b(s)` from `s` to `T`. Means of the
//! weighted shots estimate the two terms of the solution.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;

use crate::cqdrift::CqdriftPlan;
use crate::error::{bail, Result};
use crate::lchs::{LchsSplit, ShiftPolicy};
use crate::linalg::{DenseOperator, StateVector, C64};
use crate::quadrature::{build_time_grid, KernelParams, QuadratureGrid, TimeGrid};
use crate::rng::{search_cumulative, stream, uniform, StreamRng};
use crate::schedule::{Source, TimeDependentGenerator};
use crate::stats::VectorMoments;
use crate::symmetry::Protector;

/// Categorical distribution `p_i ∝ |w_i|` with inverse-CDF sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct Categorical {
    cumulative: Vec<f64>,
    total: f64,
}

impl Categorical {
    pub fn new(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .into_iter()
            .map(|w| {
                acc += w.abs();
                acc
            })
            .collect();
        Self { total: acc, cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty() || self.total == 0.0
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn probability(&self, i: usize) -> f64 {
        let lo = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        (self.cumulative[i] - lo) / self.total
    }

    /// Index for a uniform variate `u ∈ [0, 1)`.
    pub fn index(&self, u: f64) -> usize {
        search_cumulative(&self.cumulative, u * self.total)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        self.index(uniform(rng))
    }

    /// Systematic draw `s` of `count`: variate `(s + U)/count`.
    pub fn sample_stratified(&self, s: u64, count: u64, rng: &mut impl Rng) -> usize {
        self.index((s as f64 + uniform(rng)) / count as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShotKind {
    Homogeneous,
    Inhomogeneous,
}

/// Sampled outer indices with their unit phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterSample {
    pub j: usize,
    pub phase: C64,
    pub jprime: Option<usize>,
}

/// One phase-adjusted inner evolution and the scale its mean is multiplied by.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotResult {
    pub kind: ShotKind,
    pub sample: OuterSample,
    pub state: StateVector,
    pub weight: f64,
}

/// How inner unitaries are realized.
#[derive(Clone, Copy, Debug)]
pub enum InnerMode<'a> {
    /// Dense time-ordered propagator to tolerance `tol`.
    Exact { tol: f64 },
    /// Precomputed `U_j(0, T)` for each grid node (homogeneous shots only).
    Cached(&'a [DenseOperator]),
    /// One c-qDrift trajectory with `r` segments.
    Cqdrift { r: usize },
    /// As `Cqdrift`, with `protector` attached to every plan.
    Protected { r: usize, protector: &'a Protector },
}

/// Outer sampling for a fixed problem: split, grids and initial data.
#[derive(Clone, Debug)]
pub struct LcuProblem {
    pub split: LchsSplit,
    pub grid: QuadratureGrid,
    pub time_grid: TimeGrid,
    pub u0: StateVector,
    source_present: bool,
    nodes: Categorical,
    times: Categorical,
}

impl LcuProblem {
    /// Builds the split (exact shift), the grid at `eps` and, if a source is
    /// given, the time grid at `eps`.
    pub fn new(
        g: &TimeDependentGenerator,
        source: Option<&Source>,
        u0: &StateVector,
        params: &KernelParams,
        eps: f64,
    ) -> Result<Self> {
        let split = LchsSplit::new(g, ShiftPolicy::Exact)?;
        let grid = split.grid(params, eps)?;
        Self::with_grid(split, grid, source, u0, eps)
    }

    pub fn with_grid(
        split: LchsSplit,
        grid: QuadratureGrid,
        source: Option<&Source>,
        u0: &StateVector,
        eps: f64,
    ) -> Result<Self> {
        if u0.dim() != split.dim() {
            bail!(Dimension, "initial state has dimension {}, generator {}", u0.dim(), split.dim());
        }
        if grid.is_empty() {
            bail!(Parameter, "quadrature grid is empty");
        }
        let time_grid = match source {
            Some(b) if !b.is_empty() && split.t_final() > 0.0 => build_time_grid(&rate_proxy(&split)?, b, eps, split.shift())?,
            _ => TimeGrid { nodes: Vec::new(), weights: Vec::new(), states: Vec::new(), l1: 0.0 },
        };
        let nodes = Categorical::new(grid.weights.iter().map(|c| c.norm()));
        let times = Categorical::new(time_grid.weights.iter().map(|c| c.norm()));
        Ok(Self { split, grid, time_grid, u0: u0.clone(), source_present: source.is_some_and(|b| !b.is_empty()), nodes, times })
    }

    pub fn dim(&self) -> usize {
        self.u0.dim()
    }

    /// Total weight of homogeneous shots: `‖u₀‖ e^{σT} ‖c‖₁`.
    pub fn homogeneous_weight(&self) -> f64 {
        self.u0.norm() * (self.split.shift() * self.split.t_final()).exp() * self.grid.l1
    }

    /// Total weight of inhomogeneous shots: `‖c‖₁ ‖c′‖₁`.
    pub fn inhomogeneous_weight(&self) -> f64 {
        self.grid.l1 * self.time_grid.l1
    }

    pub fn has_source(&self) -> bool {
        self.source_present && !self.time_grid.is_empty()
    }

    pub fn node_distribution(&self) -> &Categorical {
        &self.nodes
    }

    /// Outer sample for a homogeneous shot; `strata = Some((s, S))` uses a systematic draw.
    pub fn sample_outer(&self, rng: &mut impl Rng, strata: Option<(u64, u64)>) -> OuterSample {
        let j = match strata {
            Some((s, count)) => self.nodes.sample_stratified(s, count, rng),
            None => self.nodes.sample(rng),
        };
        let k = self.grid.nodes[j];
        let c = self.grid.weights[j] * self.split.node_phase(k, self.split.t_final());
        OuterSample { j, phase: c / c.norm(), jprime: None }
    }

    /// Two-stage sample `(s, j)` for an inhomogeneous shot.
    pub fn sample_outer_inhomogeneous(&self, rng: &mut impl Rng, strata: Option<(u64, u64)>) -> OuterSample {
        let jp = match strata {
            Some((s, count)) => self.times.sample_stratified(s, count, rng),
            None => self.times.sample(rng),
        };
        let j = self.nodes.sample(rng);
        let s = self.time_grid.nodes[jp];
        let k = self.grid.nodes[j];
        let c = self.grid.weights[j] * self.split.node_phase(k, self.split.t_final() - s);
        let cp = self.time_grid.weights[jp];
        let phase = c / c.norm() * (cp / cp.norm());
        OuterSample { j, phase, jprime: Some(jp) }
    }

    fn evolve(&self, k: f64, t0: f64, v: &StateVector, mode: &InnerMode<'_>, j: usize, rng: &mut StreamRng) -> Result<StateVector> {
        let t1 = self.split.t_final();
        match mode {
            InnerMode::Exact { tol } => Ok(self.split.inner_unitary(k, t0, t1, *tol)?.apply(v)),
            InnerMode::Cached(us) => {
                if t0 != 0.0 {
                    bail!(Contract, "cached unitaries cover only the full interval");
                }
                match us.get(j) {
                    Some(u) => Ok(u.apply(v)),
                    None => bail!(Dimension, "no cached unitary for node {j}"),
                }
            }
            InnerMode::Cqdrift { r } | InnerMode::Protected { r, .. } => {
                let mut plan = CqdriftPlan::from_split(&self.split, k, t0, t1, *r, 0)?;
                if let InnerMode::Protected { protector, .. } = mode {
                    plan = protector.apply(&plan)?;
                }
                let mut psi = v.clone();
                plan.evolve_with(psi.amplitudes_mut(), rng);
                Ok(psi)
            }
        }
    }

    /// Homogeneous shot `index` of `count` under master `seed`.
    pub fn homogeneous_shot(&self, mode: &InnerMode<'_>, seed: u64, index: u64, stratified: Option<u64>) -> Result<ShotResult> {
        let mut rng = stream(seed, index);
        let sample = self.sample_outer(&mut rng, stratified.map(|count| (index, count)));
        let u = if self.u0.norm() > 0.0 { self.u0.normalized() } else { self.u0.clone() };
        let state = self.evolve(self.grid.nodes[sample.j], 0.0, &u, mode, sample.j, &mut rng)?;
        Ok(ShotResult { kind: ShotKind::Homogeneous, sample, state: state.scale(sample.phase), weight: self.homogeneous_weight() })
    }

    /// Inhomogeneous shot `index` under master `seed`; uses stream `2^63 + index`.
    pub fn inhomogeneous_shot(&self, mode: &InnerMode<'_>, seed: u64, index: u64, stratified: Option<u64>) -> Result<ShotResult> {
        if !self.has_source() {
            bail!(Contract, "problem has no source term");
        }
        let mut rng = stream(seed, (1u64 << 63) | index);
        let sample = self.sample_outer_inhomogeneous(&mut rng, stratified.map(|count| (index, count)));
        let jp = sample.jprime.expect("two-stage sample");
        let b = &self.time_grid.states[jp];
        let state = if b.norm() == 0.0 {
            StateVector::zeros(self.dim())
        } else {
            self.evolve(self.grid.nodes[sample.j], self.time_grid.nodes[jp], b, mode, sample.j, &mut rng)?
        };
        Ok(ShotResult { kind: ShotKind::Inhomogeneous, sample, state: state.scale(sample.phase), weight: self.inhomogeneous_weight() })
    }

    /// Dense `U_j(0, T)` for every node.
    pub fn exact_unitaries(&self, tol: f64) -> Result<Vec<DenseOperator>> {
        self.grid.nodes.iter().map(|&k| self.split.inner_unitary(k, 0.0, self.split.t_final(), tol)).collect()
    }

    /// Deterministic `‖u₀‖ Σ_j c_j e^{σT}e^{−ik_jσT} U_j û₀`.
    pub fn deterministic_homogeneous(&self, unitaries: &[DenseOperator]) -> StateVector {
        let mut out = StateVector::zeros(self.dim());
        for (j, u) in unitaries.iter().enumerate() {
            let c = self.grid.weights[j] * self.split.node_factor(self.grid.nodes[j], self.split.t_final());
            out.axpy(c, &u.apply(&self.u0));
        }
        out
    }

    /// Every node visited once with its probability as weight: the stratified
    /// limit of the homogeneous estimator.
    pub fn exhaustive_homogeneous(&self, unitaries: &[DenseOperator]) -> Result<StateVector> {
        let u = self.u0.normalized();
        let mut out = StateVector::zeros(self.dim());
        for j in 0..self.grid.len() {
            let k = self.grid.nodes[j];
            let c = self.grid.weights[j] * self.split.node_phase(k, self.split.t_final());
            let phase = c / c.norm();
            let state = self.evolve(k, 0.0, &u, &InnerMode::Cached(unitaries), j, &mut stream(0, 0))?;
            out.axpy(phase * self.nodes.probability(j) * self.homogeneous_weight(), &state);
        }
        Ok(out)
    }
}

/// Stand-in generator carrying the dissipative rate `‖L + σ‖`; the time
/// grid reads only its norm profile and dimensions.
fn rate_proxy(split: &LchsSplit) -> Result<TimeDependentGenerator> {
    use crate::pauli::PauliString;
    use crate::schedule::{Schedule, ScheduledTerm};
    let rate = split.norm_l();
    let term = ScheduledTerm { coeff: C64::new(rate, 0.0), string: PauliString::identity(split.qubits()), schedule: Schedule::Constant };
    TimeDependentGenerator::new(split.qubits(), alloc::vec![term], split.t_final())
}

/// Running shot statistics; mergeable across workers.
#[derive(Clone, Debug, Default)]
pub struct ShotAccumulator {
    pub homogeneous: VectorMoments,
    pub inhomogeneous: VectorMoments,
}

impl ShotAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { homogeneous: VectorMoments::new(dim), inhomogeneous: VectorMoments::new(dim) }
    }

    pub fn push(&mut self, shot: &ShotResult) {
        match shot.kind {
            ShotKind::Homogeneous => self.homogeneous.push(&shot.state, shot.weight),
            ShotKind::Inhomogeneous => self.inhomogeneous.push(&shot.state, shot.weight),
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self { homogeneous: self.homogeneous.merge(&other.homogeneous), inhomogeneous: self.inhomogeneous.merge(&other.inhomogeneous) }
    }
}

/// Combined estimate of `u(T)` with Monte-Carlo standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionEstimate {
    pub state: StateVector,
    /// Per-component `(Re, Im)` standard errors of `state`.
    pub std_errors: Vec<(f64, f64)>,
    pub std_error_norm: f64,
    pub homogeneous_shots: u64,
    pub inhomogeneous_shots: u64,
}

impl SolutionEstimate {
    /// `q̂ = (‖u₀‖ + ‖c′‖₁-scale source mass) / ‖v̂‖`.
    pub fn normalization(&self, u0_norm: f64, source_mass: f64) -> f64 {
        (u0_norm + source_mass) / self.state.norm()
    }
}

/// Sums the two pool means. Each pool must be non-empty when its term is present.
pub fn combine_solution(problem: &LcuProblem, acc: &ShotAccumulator) -> Result<SolutionEstimate> {
    let dim = problem.dim();
    let hom_needed = problem.u0.norm() > 0.0;
    let inhom_needed = problem.has_source();
    if hom_needed && acc.homogeneous.count() == 0 {
        bail!(Numerical, "no homogeneous shots to estimate from");
    }
    if inhom_needed && acc.inhomogeneous.count() == 0 {
        bail!(Numerical, "no inhomogeneous shots to estimate from");
    }
    if !hom_needed && !inhom_needed {
        bail!(Numerical, "nothing to estimate: zero initial state and no source");
    }
    let mut state = StateVector::zeros(dim);
    let mut errs = alloc::vec![(0.0, 0.0); dim];
    for (pool, needed) in [(&acc.homogeneous, hom_needed), (&acc.inhomogeneous, inhom_needed)] {
        if !needed {
            continue;
        }
        state = state.add(&pool.mean());
        for (e, (re, im)) in errs.iter_mut().zip(pool.std_errors()) {
            e.0 = (e.0 * e.0 + re * re).sqrt();
            e.1 = (e.1 * e.1 + im * im).sqrt();
        }
    }
    let norm = errs.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    Ok(SolutionEstimate {
        state,
        std_errors: errs,
        std_error_norm: norm,
        homogeneous_shots: acc.homogeneous.count(),
        inhomogeneous_shots: acc.inhomogeneous.count(),
    })
}

/// Sequential driver: `hom` homogeneous and `inhom` inhomogeneous shots.
pub fn run_shots(problem: &LcuProblem, mode: &InnerMode<'_>, hom: u64, inhom: u64, seed: u64, stratified: bool) -> Result<ShotAccumulator> {
    let mut acc = ShotAccumulator::new(problem.dim());
    for i in 0..hom {
        acc.push(&problem.homogeneous_shot(mode, seed, i, stratified.then_some(hom))?);
    }
    if problem.has_source() {
        for i in 0..inhom {
            acc.push(&problem.inhomogeneous_shot(mode, seed, i, stratified.then_some(inhom))?);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::prelude::rust_2021::*;
    use crate::evolution::{duhamel_solution, matrix_exponential};
    use crate::linalg::ONE;
    use crate::models::{build_tfim, TfimParams};
    use crate::pauli::PauliSum;
    use crate::stats::log_log_slope;

    #[test]
    fn categorical_frequencies_and_phase() {
        let grid = QuadratureGrid {
            k_max: 1.0,
            h1: 1.0,
            q: 1,
            nodes: vec![0.0, 0.0],
            weights: vec![C64::new(0.3, 0.0), C64::new(0.0, 0.7)],
            l1: 1.0,
        };
        let g = TimeDependentGenerator::new(1, vec![], 1.0).unwrap();
        let split = LchsSplit::new(&g, ShiftPolicy::Exact).unwrap();
        let p = LcuProblem::with_grid(split, grid, None, &StateVector::basis(2, 0), 1e-3).unwrap();
        let mut rng = stream(3, 0);
        let n = 10_000;
        let mut second = 0;
        for _ in 0..n {
            let s = p.sample_outer(&mut rng, None);
            if s.j == 1 {
                second += 1;
                assert!((s.phase - C64::new(0.0, 1.0)).norm() < 1e-15);
            }
        }
        let sd = (n as f64 * 0.21).sqrt();
        assert!((second as f64 - 7000.0).abs() < 3.0 * sd);
    }

    #[test]
    fn single_node_grid_keeps_state() {
        let g = TimeDependentGenerator::new(2, vec![], 1.0).unwrap();
        let p = LcuProblem::new(&g, None, &StateVector::basis(4, 1), &KernelParams::default(), 1e-2).unwrap();
        assert_eq!(p.grid.len(), 1);
        let shot = p.homogeneous_shot(&InnerMode::Cqdrift { r: 8 }, 0, 0, None).unwrap();
        assert!(shot.state.distance(&StateVector::basis(4, 1)) < 1e-15);
    }

    fn small_tfim_problem() -> LcuProblem {
        let a = build_tfim(&TfimParams { n: 3, j: 1.0, g: 0.5, gamma: 0.3 }).unwrap();
        let g = TimeDependentGenerator::constant(&a, 1.0).unwrap();
        let split = LchsSplit::new(&g, ShiftPolicy::Exact).unwrap();
        let grid = QuadratureGrid::with_geometry(&KernelParams::default(), 6.0, 4, 6);
        assert!(grid.len() <= 64);
        LcuProblem::with_grid(split, grid, None, &StateVector::from_real(&[0.5, 0.1, -0.3, 0.2, 0.0, 0.4, 0.6, -0.1]), 1e-3).unwrap()
    }

    #[test]
    fn exhaustive_sampling_is_unbiased() {
        let p = small_tfim_problem();
        let us = p.exact_unitaries(1e-12).unwrap();
        let det = p.deterministic_homogeneous(&us);
        let ex = p.exhaustive_homogeneous(&us).unwrap();
        assert!(det.distance(&ex) <= 1e-12 * det.norm().max(1.0));
    }

    #[test]
    fn success_probability_bound() {
        let p = small_tfim_problem();
        let us = p.exact_unitaries(1e-12).unwrap();
        let v = p.deterministic_homogeneous(&us);
        let target = v.normalized();
        let u = p.u0.normalized();
        let mut prob = 0.0;
        for (j, uj) in us.iter().enumerate() {
            prob += p.node_distribution().probability(j) * target.inner(&uj.apply(&u)).norm_sqr();
        }
        let scale = (p.split.shift()).exp() * p.grid.l1;
        assert!(prob + 1e-12 >= (v.norm() / p.u0.norm() / scale).powi(2));
    }

    #[test]
    fn standard_error_scales_as_inverse_sqrt() {
        let p = small_tfim_problem();
        let us = p.exact_unitaries(1e-12).unwrap();
        let sizes = [100u64, 1000, 10_000];
        let errs: Vec<f64> = sizes
            .iter()
            .map(|&s| {
                let acc = run_shots(&p, &InnerMode::Cached(&us), s, 0, 77, false).unwrap();
                combine_solution(&p, &acc).unwrap().std_error_norm
            })
            .collect();
        let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        let slope = log_log_slope(&xs, &errs);
        assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn cqdrift_shots_approach_propagator() {
        let a = build_tfim(&TfimParams { n: 3, j: 1.0, g: 0.5, gamma: 0.3 }).unwrap();
        let g = TimeDependentGenerator::constant(&a, 1.0).unwrap();
        let u0 = StateVector::uniform(8);
        let p = LcuProblem::new(&g, None, &u0, &KernelParams::default(), 1e-2).unwrap();
        let exact = matrix_exponential(&a.to_dense().unwrap(), -1.0).unwrap().apply(&u0);
        let acc = run_shots(&p, &InnerMode::Cqdrift { r: 64 }, 2000, 0, 5, true).unwrap();
        let est = combine_solution(&p, &acc).unwrap();
        let err = est.state.distance(&exact);
        assert!(err < 4.0 * est.std_error_norm + 0.1 * exact.norm(), "err {err} se {}", est.std_error_norm);
    }

    #[test]
    fn scalar_inhomogeneous_problem() {
        let g = TimeDependentGenerator::constant(&PauliSum::from_labels(&[(ONE, "I")]).unwrap(), 1.0).unwrap();
        let src = Source::constant(StateVector::from_real(&[1.0, 0.0]));
        let u0 = StateVector::zeros(2);
        let p = LcuProblem::new(&g, Some(&src), &u0, &KernelParams::default(), 1e-3).unwrap();
        let oracle = duhamel_solution(&g, Some(&src), &u0, 1.0, 1e-12).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert!((oracle.amplitudes()[0].re - exact).abs() < 1e-8);
        let acc = run_shots(&p, &InnerMode::Cqdrift { r: 4 }, 0, 10_000, 9, false).unwrap();
        let est = combine_solution(&p, &acc).unwrap();
        let (re_se, _) = est.std_errors[0];
        assert!((est.state.amplitudes()[0].re - exact).abs() < 3.0 * re_se + 1e-3, "{} ± {re_se}", est.state.amplitudes()[0].re);
    }

    #[test]
    fn zero_generator_source_gives_linear_growth() {
        let g = TimeDependentGenerator::new(1, vec![], 2.0).unwrap();
        let b = StateVector::from_real(&[0.6, -0.8]);
        let p = LcuProblem::new(&g, Some(&Source::constant(b.clone())), &StateVector::zeros(2), &KernelParams::default(), 1e-3).unwrap();
        let acc = run_shots(&p, &InnerMode::Exact { tol: 1e-10 }, 0, 200, 1, false).unwrap();
        let est = combine_solution(&p, &acc).unwrap();
        assert!(est.state.distance(&b.scale_real(2.0)) < 1e-6);
    }

    #[test]
    fn empty_pools_are_errors() {
        let p = small_tfim_problem();
        assert!(combine_solution(&p, &ShotAccumulator::new(8)).is_err());
    }
}

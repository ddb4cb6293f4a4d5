//! Continuous qDrift: randomized product of Pauli rotations approximating
//! `𝒯exp(−i∫_{t0}^{t1} Σ_i β_i(t) P_i dt)` for real coefficients `β_i`.
//!
//! The interval is cut into `r` segments of equal norm mass `Λ/r`. Each
//! segment samples a time from the total-norm density restricted to it, then
//! a term with probability `∝ |β_i(t)|`, and applies `exp(−i sgn(β_i) Λ/r P_i)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::lchs::LchsSplit;
use crate::linalg::{hermitian_eigen, DenseOperator, StateVector, C64};
use crate::pauli::{PauliString, PauliSum};
use crate::rng::{search_cumulative, stream, uniform};
use crate::schedule::Schedule;

/// Cells of the cumulative time table for time-dependent plans.
pub const TIME_TABLE_CELLS: usize = 1024;

/// `r = ⌈4λ²/ε⌉`, at least one.
pub fn required_segments(lambda: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        bail!(Parameter, "eps must be positive, got {eps}");
    }
    let r = (4.0 * lambda * lambda / eps).ceil();
    if !r.is_finite() || r > 1e12 {
        bail!(Parameter, "segment count {r} is out of range");
    }
    Ok((r as usize).max(1))
}

/// Hermitian Pauli term with real scheduled coefficient `Σ c_m s_m(t)`.
#[derive(Clone, Debug)]
pub struct PlanTerm {
    pub string: PauliString,
    pub parts: Vec<(f64, Schedule)>,
}

impl PlanTerm {
    pub fn value(&self, t: f64) -> f64 {
        self.parts.iter().map(|(c, s)| c * s.value(t)).sum()
    }

    fn is_constant(&self) -> bool {
        self.parts.iter().all(|(_, s)| s.is_constant())
    }
}

/// Variance-reduction strategy applied on top of plain sampling.
#[derive(Clone, Debug, PartialEq)]
pub enum Protection {
    None,
    /// Each step on term `i` is followed by the partner rotation on
    /// `sign_i · P'_i`; both halves carry angle `Λ/(2r)`.
    Paired { partners: Vec<(PauliString, f64)> },
    /// Like `Paired`, but each half uses the unscaled angle `β_i(t)·Δ/(2r)`.
    PairedLiteral { partners: Vec<(PauliString, f64)> },
    /// Same samples, reordered inside windows of `window` steps so that
    /// terms of class `+1` and `−1` alternate.
    Alternate { classes: Vec<i8>, window: usize },
}

/// One applied rotation: `exp(−i angle P_term)` at sampled `time`, followed
/// by `exp(−i partner_angle P'_term)` in paired modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub term: usize,
    pub time: f64,
    pub angle: f64,
    pub partner_angle: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub final_state: StateVector,
}

#[derive(Clone, Debug)]
enum Sampler {
    /// Time-independent: categorical over terms, uniform time per segment.
    Constant { cumulative: Vec<f64>, values: Vec<f64> },
    /// Cumulative norm mass on a uniform time table.
    Table { cumulative: Vec<f64> },
}

/// Everything one randomized trajectory needs.
#[derive(Clone, Debug)]
pub struct CqdriftPlan {
    n: usize,
    terms: Vec<PlanTerm>,
    identity: Vec<(f64, Schedule)>,
    identity_phase: f64,
    t0: f64,
    t1: f64,
    r: usize,
    seed: u64,
    lambda: f64,
    term_norms: Vec<f64>,
    sampler: Sampler,
    protection: Protection,
}

fn identity_integral(parts: &[(f64, Schedule)], t0: f64, t1: f64) -> f64 {
    if parts.is_empty() || t1 == t0 {
        return 0.0;
    }
    let (x, w) = crate::quadrature::gauss_legendre(8);
    let panels = if parts.iter().all(|(_, s)| s.is_constant()) { 1 } else { 64 };
    let h = (t1 - t0) / panels as f64;
    let mut acc = 0.0;
    for m in 0..panels {
        let mid = t0 + (m as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let t = mid + 0.5 * h * xi;
            acc += 0.5 * h * wi * parts.iter().map(|(c, s)| c * s.value(t)).sum::<f64>();
        }
    }
    acc
}

impl CqdriftPlan {
    /// Plan for `Σ_i β_i(t) P_i + φ(t) I` on `[t0, t1]` with `r` segments.
    pub fn new(
        n: usize,
        terms: Vec<PlanTerm>,
        identity: &[(f64, Schedule)],
        t0: f64,
        t1: f64,
        r: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
            bail!(Parameter, "invalid interval [{t0}, {t1}]");
        }
        if r == 0 {
            bail!(Parameter, "segment count must be at least one");
        }
        let mut kept = Vec::with_capacity(terms.len());
        for t in terms {
            if t.string.qubits() != n {
                bail!(Dimension, "term {} has {} qubits, expected {n}", t.string, t.string.qubits());
            }
            if t.parts.iter().any(|(c, _)| !c.is_finite()) {
                bail!(Parameter, "non-finite coefficient on {}", t.string);
            }
            if t.string.is_identity() {
                bail!(Contract, "identity terms must be passed as phases");
            }
            if t.parts.iter().any(|(c, _)| *c != 0.0) {
                kept.push(t);
            }
        }
        let terms = kept;
        let span = t1 - t0;
        let (sampler, term_norms) = if terms.iter().all(PlanTerm::is_constant) {
            let values: Vec<f64> = terms.iter().map(|t| t.value(t0)).collect();
            let mut cumulative = Vec::with_capacity(values.len());
            let mut acc = 0.0;
            for v in &values {
                acc += v.abs();
                cumulative.push(acc);
            }
            let norms = values.iter().map(|v| v.abs() * span).collect();
            (Sampler::Constant { cumulative, values }, norms)
        } else {
            let cells = TIME_TABLE_CELLS;
            let h = span / cells as f64;
            let mut norms = alloc::vec![0.0; terms.len()];
            let mut prev: Vec<f64> = terms.iter().map(|t| t.value(t0).abs()).collect();
            let mut cumulative = Vec::with_capacity(cells + 1);
            cumulative.push(0.0);
            let mut acc = 0.0;
            for m in 1..=cells {
                let t = t0 + m as f64 * h;
                let mut cell = 0.0;
                for (i, term) in terms.iter().enumerate() {
                    let v = term.value(t).abs();
                    let mass = 0.5 * h * (prev[i] + v);
                    norms[i] += mass;
                    cell += mass;
                    prev[i] = v;
                }
                acc += cell;
                cumulative.push(acc);
            }
            (Sampler::Table { cumulative }, norms)
        };
        let lambda = term_norms.iter().sum();
        Ok(Self {
            n,
            terms,
            identity: identity.to_vec(),
            identity_phase: identity_integral(identity, t0, t1),
            t0,
            t1,
            r,
            seed,
            lambda,
            term_norms,
            sampler,
            protection: Protection::None,
        })
    }

    /// Plan for a constant Hermitian Pauli sum over `[0, t_final]`.
    pub fn from_hermitian(h: &PauliSum, t_final: f64, r: usize, seed: u64) -> Result<Self> {
        let mut terms = Vec::new();
        let mut identity = Vec::new();
        for w in h.terms() {
            if w.coeff.im.abs() > 1e-12 * w.coeff.norm().max(1.0) {
                bail!(Contract, "generator term {} has complex coefficient {}; not Hermitian", w.string, w.coeff);
            }
            if w.string.is_identity() {
                identity.push((w.coeff.re, Schedule::Constant));
            } else {
                terms.push(PlanTerm { string: w.string, parts: alloc::vec![(w.coeff.re, Schedule::Constant)] });
            }
        }
        Self::new(h.qubits(), terms, &identity, 0.0, t_final, r, seed)
    }

    /// Plan for the inner generator `kL(t) + H(t)` of an LCHS split on `[t0, t1]`.
    pub fn from_split(split: &LchsSplit, k: f64, t0: f64, t1: f64, r: usize, seed: u64) -> Result<Self> {
        let terms = split
            .terms()
            .iter()
            .map(|t| PlanTerm { string: t.string, parts: t.at_k(k) })
            .collect();
        let identity: Vec<(f64, Schedule)> = split
            .identity_parts()
            .iter()
            .map(|p| (k * p.dissipative + p.coherent, p.schedule.clone()))
            .collect();
        Self::new(split.qubits(), terms, &identity, t0, t1, r, seed)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn terms(&self) -> &[PlanTerm] {
        &self.terms
    }

    /// `Λ = Σ_i ∫ |β_i(t)| dt`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Per-term `∫ |β_i(t)| dt`; sums to `Λ`.
    pub fn term_norms(&self) -> &[f64] {
        &self.term_norms
    }

    pub fn segments(&self) -> usize {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    /// `∫ φ(t) dt` of the identity part, applied as an exact phase.
    pub fn identity_phase(&self) -> f64 {
        self.identity_phase
    }

    pub fn protection(&self) -> &Protection {
        &self.protection
    }

    pub fn with_segments(&self, r: usize) -> Result<Self> {
        if r == 0 {
            bail!(Parameter, "segment count must be at least one");
        }
        Ok(Self { r, ..self.clone() })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_protection(&self, protection: Protection) -> Result<Self> {
        let len = self.terms.len();
        match &protection {
            Protection::None => {}
            Protection::Paired { partners } | Protection::PairedLiteral { partners } => {
                if partners.len() != len {
                    bail!(Dimension, "{} partners for {len} terms", partners.len());
                }
                if partners.iter().any(|(p, s)| p.qubits() != self.n || s.abs() != 1.0) {
                    bail!(Contract, "partners must be signed Pauli strings on {} qubits", self.n);
                }
            }
            Protection::Alternate { classes, window } => {
                if classes.len() != len {
                    bail!(Dimension, "{} classes for {len} terms", classes.len());
                }
                if *window == 0 {
                    bail!(Parameter, "reorder window must be positive");
                }
            }
        }
        Ok(Self { protection, ..self.clone() })
    }

    /// Time with cumulative norm mass `y` in `[0, Λ]`.
    fn time_at_mass(&self, y: f64, u: f64, segment: usize) -> f64 {
        match &self.sampler {
            Sampler::Constant { .. } => {
                let h = (self.t1 - self.t0) / self.r as f64;
                self.t0 + (segment as f64 + u) * h
            }
            Sampler::Table { cumulative } => {
                let cell = cumulative.partition_point(|&c| c <= y).clamp(1, cumulative.len() - 1);
                let (lo, hi) = (cumulative[cell - 1], cumulative[cell]);
                let frac = if hi > lo { ((y - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
                let h = (self.t1 - self.t0) / (cumulative.len() - 1) as f64;
                self.t0 + (cell as f64 - 1.0 + frac) * h
            }
        }
    }

    /// Term index at time `t` with probability `∝ |β_i(t)|`, and its signed value.
    fn term_at(&self, t: f64, rng: &mut impl Rng) -> (usize, f64) {
        match &self.sampler {
            Sampler::Constant { cumulative, values } => {
                let total = cumulative[cumulative.len() - 1];
                let i = search_cumulative(cumulative, uniform(rng) * total);
                (i, values[i])
            }
            Sampler::Table { .. } => {
                let values: Vec<f64> = self.terms.iter().map(|term| term.value(t)).collect();
                let total: f64 = values.iter().map(|v| v.abs()).sum();
                let u = uniform(rng);
                if total == 0.0 {
                    let i = search_cumulative(&cumulate(&self.term_norms), u * self.lambda);
                    return (i, values[i]);
                }
                let mut acc = 0.0;
                let target = u * total;
                for (i, v) in values.iter().enumerate() {
                    acc += v.abs();
                    if target < acc {
                        return (i, *v);
                    }
                }
                let last = values.iter().rposition(|v| *v != 0.0).unwrap_or(0);
                (last, values[last])
            }
        }
    }

    /// Unsegmented draw from the joint density `|β_i(t)|/Λ` on terms × time.
    pub fn sample_step(&self, rng: &mut impl Rng) -> (usize, f64) {
        let y = uniform(rng) * self.lambda;
        let t = match &self.sampler {
            Sampler::Constant { .. } => self.t0 + (y / self.lambda) * (self.t1 - self.t0),
            Sampler::Table { .. } => self.time_at_mass(y, 0.0, 0),
        };
        let (i, _) = self.term_at(t, rng);
        (i, t)
    }

    /// `(term, time, β_term(time))` drawn from the norm density restricted to segment `seg`.
    pub(crate) fn draw_in_segment(&self, seg: usize, rng: &mut impl Rng) -> (usize, f64, f64) {
        let u = uniform(rng);
        let t = self.time_at_mass((seg as f64 + u) / self.r as f64 * self.lambda, u, seg);
        let (i, value) = self.term_at(t, rng);
        (i, t, value)
    }

    /// Total norm `Σ_i |β_i(t)|`.
    pub fn rate_at(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.value(t).abs()).sum()
    }

    /// Draws the `r` rotations of one trajectory.
    pub fn sample_steps(&self, rng: &mut impl Rng) -> Vec<Step> {
        if self.terms.is_empty() || self.lambda == 0.0 {
            return Vec::new();
        }
        let r = self.r as f64;
        let theta = self.lambda / r;
        let mut steps = Vec::with_capacity(self.r);
        for seg in 0..self.r {
            let (i, t, value) = self.draw_in_segment(seg, rng);
            let sign = if value < 0.0 { -1.0 } else { 1.0 };
            let step = match &self.protection {
                Protection::None | Protection::Alternate { .. } => Step { term: i, time: t, angle: sign * theta, partner_angle: 0.0 },
                Protection::Paired { partners } => {
                    let half = 0.5 * sign * theta;
                    Step { term: i, time: t, angle: half, partner_angle: partners[i].1 * half }
                }
                Protection::PairedLiteral { partners } => {
                    let half = 0.5 * value * (self.t1 - self.t0) / r;
                    Step { term: i, time: t, angle: half, partner_angle: partners[i].1 * half }
                }
            };
            steps.push(step);
        }
        if let Protection::Alternate { classes, window } = &self.protection {
            for chunk in steps.chunks_mut(*window) {
                alternate_in_place(chunk, classes);
            }
        }
        steps
    }

    /// Applies recorded steps (and the identity phase) to `psi`.
    pub fn apply_steps(&self, steps: &[Step], psi: &mut [C64]) {
        let partners = match &self.protection {
            Protection::Paired { partners } | Protection::PairedLiteral { partners } => Some(partners),
            _ => None,
        };
        for s in steps {
            self.terms[s.term].string.rotate(s.angle, psi);
            if let Some(p) = partners {
                p[s.term].0.rotate(s.partner_angle, psi);
            }
        }
        if self.identity_phase != 0.0 {
            let ph = C64::from_polar(1.0, -self.identity_phase);
            psi.iter_mut().for_each(|a| *a *= ph);
        }
    }

    /// Time at which segment `m` ends (`m = 0` is the start of the interval).
    pub fn segment_time(&self, m: usize) -> f64 {
        if m >= self.r {
            return self.t1;
        }
        match &self.sampler {
            Sampler::Constant { .. } => self.t0 + m as f64 * (self.t1 - self.t0) / self.r as f64,
            Sampler::Table { .. } => self.time_at_mass(m as f64 / self.r as f64 * self.lambda, 0.0, m),
        }
    }

    /// Applies `steps` like [`apply_steps`](Self::apply_steps), calling
    /// `visit(m, t_m, state)` at segment boundaries `m = 0, stride, 2·stride, …`
    /// (and at `r`). The visited state includes the identity phase up to `t_m`.
    pub fn apply_with_checkpoints(
        &self,
        steps: &[Step],
        psi: &mut [C64],
        stride: usize,
        mut visit: impl FnMut(usize, f64, &[C64]),
    ) {
        let stride = stride.max(1);
        let partners = match &self.protection {
            Protection::Paired { partners } | Protection::PairedLiteral { partners } => Some(partners),
            _ => None,
        };
        let mut scratch = psi.to_vec();
        let mut emit = |m: usize, psi: &[C64], scratch: &mut Vec<C64>| {
            let t = self.segment_time(m);
            let ph = C64::from_polar(1.0, -identity_integral(&self.identity, self.t0, t));
            for (o, a) in scratch.iter_mut().zip(psi) {
                *o = a * ph;
            }
            visit(m, t, scratch);
        };
        emit(0, psi, &mut scratch);
        for (idx, s) in steps.iter().enumerate() {
            self.terms[s.term].string.rotate(s.angle, psi);
            if let Some(p) = partners {
                p[s.term].0.rotate(s.partner_angle, psi);
            }
            let m = idx + 1;
            if m % stride == 0 || m == steps.len() {
                emit(m, psi, &mut scratch);
            }
        }
        if steps.is_empty() {
            emit(self.r, psi, &mut scratch);
        }
        if self.identity_phase != 0.0 {
            let ph = C64::from_polar(1.0, -self.identity_phase);
            psi.iter_mut().for_each(|a| *a *= ph);
        }
    }

    /// Samples and applies one trajectory in place using `rng`.
    pub fn evolve_with(&self, psi: &mut [C64], rng: &mut impl Rng) {
        let steps = self.sample_steps(rng);
        self.apply_steps(&steps, psi);
    }

    /// One trajectory from `u0` using stream `index` of the plan seed.
    pub fn evolve(&self, u0: &StateVector, index: u64) -> Result<StateVector> {
        self.check_dim(u0)?;
        let mut psi = u0.clone();
        self.evolve_with(psi.amplitudes_mut(), &mut stream(self.seed, index));
        Ok(psi)
    }

    fn check_dim(&self, u0: &StateVector) -> Result<()> {
        if u0.dim() != self.dim() {
            bail!(Dimension, "state has dimension {}, plan {}", u0.dim(), self.dim());
        }
        Ok(())
    }
}

fn cumulate(xs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xs.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Stable reorder placing `+1` and `−1` classes alternately; neutral and
/// leftover steps keep their relative order at the end.
fn alternate_in_place(chunk: &mut [Step], classes: &[i8]) {
    let mut up: Vec<Step> = Vec::new();
    let mut down: Vec<Step> = Vec::new();
    let mut rest: Vec<Step> = Vec::new();
    for s in chunk.iter() {
        match classes[s.term] {
            c if c > 0 => up.push(*s),
            c if c < 0 => down.push(*s),
            _ => rest.push(*s),
        }
    }
    let mut out = Vec::with_capacity(chunk.len());
    let (mut a, mut b) = (up.into_iter(), down.into_iter());
    loop {
        match (a.next(), b.next()) {
            (None, None) => break,
            (x, y) => {
                out.extend(x);
                out.extend(y);
            }
        }
    }
    out.extend(rest);
    chunk.copy_from_slice(&out);
}

/// Runs one recorded trajectory with the plan's seed (stream 0).
pub fn run_trajectory(plan: &CqdriftPlan, u0: &StateVector) -> Result<Trajectory> {
    plan.check_dim(u0)?;
    let mut rng = stream(plan.seed(), 0);
    let steps = plan.sample_steps(&mut rng);
    let mut psi = u0.clone();
    plan.apply_steps(&steps, psi.amplitudes_mut());
    Ok(Trajectory { steps, final_state: psi })
}

/// Empirical `E[V ρ V†]` over `trials` independent trajectories.
pub fn channel_average(plan: &CqdriftPlan, rho0: &DenseOperator, trials: usize) -> Result<DenseOperator> {
    if trials == 0 {
        bail!(Parameter, "trials must be at least one");
    }
    if rho0.dim() != plan.dim() {
        bail!(Dimension, "density matrix has dimension {}, plan {}", rho0.dim(), plan.dim());
    }
    let (vals, vecs) = hermitian_eigen(rho0);
    let dim = plan.dim();
    let columns: Vec<(f64, StateVector)> = vals
        .iter()
        .enumerate()
        .filter(|(_, &p)| p.abs() > 1e-15)
        .map(|(c, &p)| (p, StateVector::from_amplitudes((0..dim).map(|r| vecs[(r, c)]).collect())))
        .collect();
    let mut acc = DenseOperator::zeros(dim);
    for trial in 0..trials {
        let steps = plan.sample_steps(&mut stream(plan.seed(), trial as u64));
        for (p, v) in &columns {
            let mut psi = v.clone();
            plan.apply_steps(&steps, psi.amplitudes_mut());
            acc.axpy(C64::new(*p / trials as f64, 0.0), &psi.projector());
        }
    }
    Ok(acc)
}

/// Largest trace distance between the averaged channel and `exact` over the
/// computational basis states and the maximally mixed state.
pub fn channel_error(plan: &CqdriftPlan, exact: &DenseOperator, trials: usize) -> Result<f64> {
    if trials == 0 {
        bail!(Parameter, "trials must be at least one");
    }
    let dim = plan.dim();
    if exact.dim() != dim {
        bail!(Dimension, "reference has dimension {}, plan {}", exact.dim(), dim);
    }
    let mut averaged = alloc::vec![DenseOperator::zeros(dim); dim];
    let w = C64::new(1.0 / trials as f64, 0.0);
    for trial in 0..trials {
        let steps = plan.sample_steps(&mut stream(plan.seed(), trial as u64));
        for (b, avg) in averaged.iter_mut().enumerate() {
            let mut psi = StateVector::basis(dim, b);
            plan.apply_steps(&steps, psi.amplitudes_mut());
            avg.axpy(w, &psi.projector());
        }
    }
    let mut worst: f64 = 0.0;
    let mut mixed_diff = DenseOperator::zeros(dim);
    for (b, avg) in averaged.iter().enumerate() {
        let target = exact.apply(&StateVector::basis(dim, b)).projector();
        let diff = avg.sub(&target);
        worst = worst.max(0.5 * diff.hermitian_trace_norm());
        mixed_diff.axpy(C64::new(1.0 / dim as f64, 0.0), &diff);
    }
    Ok(worst.max(0.5 * mixed_diff.hermitian_trace_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::prelude::rust_2021::*;
    use crate::evolution::{matrix_exponential, time_ordered_propagator};
    use crate::linalg::I;
    use crate::models::{build_tfim, TfimParams};
    use crate::schedule::{ScheduledTerm, TimeDependentGenerator};
    use crate::stats::log_log_slope;
    use proptest::prelude::*;

    fn constant_term(label: &str, c: f64) -> PlanTerm {
        PlanTerm { string: PauliString::parse(label).unwrap(), parts: vec![(c, Schedule::Constant)] }
    }

    #[test]
    fn segment_counts() {
        assert_eq!(required_segments(1.0, 1.0).unwrap(), 4);
        assert_eq!(required_segments(2.0, 0.1).unwrap(), 160);
        assert_eq!(required_segments(0.1, 1.0).unwrap(), 1);
        assert!(required_segments(1.0, 0.0).is_err());
    }

    #[test]
    fn categorical_frequencies() {
        let plan = CqdriftPlan::new(1, vec![constant_term("X", 3.0), constant_term("Z", -1.0)], &[], 0.0, 1.0, 1, 0).unwrap();
        let mut rng = stream(11, 0);
        let n = 10_000;
        let hits = (0..n).filter(|_| plan.sample_step(&mut rng).0 == 0).count() as f64;
        let sd = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((hits - 0.75 * n as f64).abs() < 3.0 * sd, "hits {hits}");
        assert!((plan.lambda() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn linear_schedule_time_mean() {
        let term = PlanTerm { string: PauliString::parse("X").unwrap(), parts: vec![(1.0, Schedule::Polynomial(vec![0.0, 1.0]))] };
        let plan = CqdriftPlan::new(1, vec![term], &[], 0.0, 1.0, 1, 0).unwrap();
        let mut rng = stream(5, 1);
        let n = 10_000;
        let ts: Vec<f64> = (0..n).map(|_| plan.sample_step(&mut rng).1).collect();
        let mean = ts.iter().sum::<f64>() / n as f64;
        // density 2t has variance 1/18
        let sd = (1.0 / 18.0 / n as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 3.0 * sd, "mean {mean}");
        assert!((plan.lambda() - 0.5).abs() < 1e-6);
        assert!((plan.term_norms().iter().sum::<f64>() - plan.lambda()).abs() < 1e-10);
    }

    #[test]
    fn zero_generator_leaves_state() {
        let plan = CqdriftPlan::new(2, vec![], &[], 0.0, 1.0, 8, 0).unwrap();
        let u0 = StateVector::from_real(&[0.5, 0.5, 0.5, 0.5]);
        let tr = run_trajectory(&plan, &u0).unwrap();
        assert!(tr.steps.is_empty());
        assert_eq!(tr.final_state, u0);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let a = PauliSum::from_labels(&[(C64::new(1.0, 0.5), "X")]).unwrap();
        assert!(matches!(CqdriftPlan::from_hermitian(&a, 1.0, 4, 0), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn single_term_is_exact() {
        let h = PauliSum::from_labels(&[(C64::new(0.7, 0.0), "XY"), (C64::new(0.3, 0.0), "II")]).unwrap();
        let exact = matrix_exponential(&h.to_dense().unwrap(), 0.0).unwrap();
        let exact = exact.matmul(&expm_hermitian(&h, 1.3));
        for r in [1, 3, 17] {
            let plan = CqdriftPlan::from_hermitian(&h, 1.3, r, 9).unwrap();
            assert!(channel_error(&plan, &exact, 3).unwrap() < 1e-10);
            let tr = run_trajectory(&plan, &StateVector::basis(4, 2)).unwrap();
            assert_eq!(tr.steps.len(), r);
            assert!(tr.final_state.distance(&exact.apply(&StateVector::basis(4, 2))) < 1e-12);
        }
    }

    fn expm_hermitian(h: &PauliSum, t: f64) -> DenseOperator {
        crate::linalg::expm(&h.to_dense().unwrap().scale(-I * t)).unwrap()
    }

    #[test]
    fn trajectories_are_deterministic_and_unitary() {
        let h = build_tfim(&TfimParams { n: 3, j: 1.0, g: 0.5, gamma: 0.0 }).unwrap();
        let plan = CqdriftPlan::from_hermitian(&h, 1.0, 64, 42).unwrap();
        let u0 = StateVector::uniform(8);
        let a = run_trajectory(&plan, &u0).unwrap();
        let b = run_trajectory(&plan, &u0).unwrap();
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.final_state, b.final_state);
        let mut psi = u0.clone();
        for s in &a.steps {
            plan.terms()[s.term].string.rotate(s.angle, psi.amplitudes_mut());
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tfim_hermitian_part_meets_bound() {
        let h = build_tfim(&TfimParams { n: 3, j: 1.0, g: 0.5, gamma: 0.0 }).unwrap();
        let exact = expm_hermitian(&h, 1.0);
        let plan = CqdriftPlan::from_hermitian(&h, 1.0, 256, 3).unwrap();
        let err = channel_error(&plan, &exact, 200).unwrap();
        let bound = 4.0 * plan.lambda().powi(2) / 256.0;
        assert!(err <= bound, "err {err} bound {bound}");
    }

    fn two_term_plan(r: usize) -> CqdriftPlan {
        let h = PauliSum::from_labels(&[(C64::new(1.2, 0.0), "X"), (C64::new(0.9, 0.0), "Z")]).unwrap();
        CqdriftPlan::from_hermitian(&h, 1.0, r, 17).unwrap()
    }

    #[test]
    fn channel_error_decays_like_inverse_r() {
        // Exact averaging over the two-outcome step distribution removes
        // sampling noise, so the measured error is the channel bias itself.
        let h = PauliSum::from_labels(&[(C64::new(1.2, 0.0), "X"), (C64::new(0.9, 0.0), "Z")]).unwrap();
        let exact = expm_hermitian(&h, 1.0);
        let rs = [16usize, 32, 64, 128, 256, 512, 1024];
        let mut errs = Vec::new();
        for &r in &rs {
            let plan = two_term_plan(r);
            let err = exact_channel_error(&plan, &exact);
            assert!(err <= 4.0 * plan.lambda().powi(2) / r as f64);
            errs.push(err);
        }
        let xs: Vec<f64> = rs.iter().map(|&r| r as f64).collect();
        let slope = log_log_slope(&xs, &errs);
        assert!((slope + 1.0).abs() <= 0.3, "slope {slope}");
    }

    /// Channel error of a constant plan computed by composing the exact
    /// one-segment channel `r` times (superoperator on vectorized ρ).
    fn exact_channel_error(plan: &CqdriftPlan, exact: &DenseOperator) -> f64 {
        let dim = plan.dim();
        let theta = plan.lambda() / plan.segments() as f64;
        let mut seg = DenseOperator::zeros(dim * dim);
        for (i, norm) in plan.term_norms().iter().enumerate() {
            let p = norm / plan.lambda();
            let sign = plan.terms()[i].value(0.0).signum();
            let u = crate::linalg::expm(&plan.terms()[i].string.to_dense().unwrap().scale(-I * sign * theta)).unwrap();
            seg.axpy(C64::new(p, 0.0), &u.kron(&u.conj()));
        }
        let mut chan = DenseOperator::identity(dim * dim);
        for _ in 0..plan.segments() {
            chan = seg.matmul(&chan);
        }
        let mut worst: f64 = 0.0;
        for b in 0..dim {
            let rho = StateVector::basis(dim, b).projector();
            let vec_in = StateVector::from_amplitudes(rho.as_slice().to_vec());
            let out = chan.apply(&vec_in);
            let out = DenseOperator::from_fn(dim, |r, c| out.amplitudes()[r * dim + c]);
            let target = exact.matmul(&rho).matmul(&exact.adjoint());
            worst = worst.max(0.5 * out.sub(&target).hermitian_trace_norm());
        }
        worst
    }

    #[test]
    fn sampled_channel_matches_exact_composition() {
        let h = PauliSum::from_labels(&[(C64::new(1.2, 0.0), "X"), (C64::new(0.9, 0.0), "Z")]).unwrap();
        let exact = expm_hermitian(&h, 1.0);
        let plan = two_term_plan(8);
        let sampled = channel_error(&plan, &exact, 4000).unwrap();
        let bias = exact_channel_error(&plan, &exact);
        assert!((sampled - bias).abs() < 0.03, "sampled {sampled} bias {bias}");
    }

    #[test]
    fn segment_generator_is_unbiased() {
        // ‖β(t)‖ varies in time; average sampled generator over 10⁴ steps.
        let x = PlanTerm { string: PauliString::parse("XI").unwrap(), parts: vec![(1.0, Schedule::Polynomial(vec![0.5, 1.0]))] };
        let z = PlanTerm { string: PauliString::parse("ZZ").unwrap(), parts: vec![(-0.8, Schedule::Constant)] };
        let r = 4;
        let plan = CqdriftPlan::new(2, vec![x, z], &[], 0.0, 1.0, r, 0).unwrap();
        let draws = 10_000u64;
        let mut acc = [crate::stats::Welford::default(); 2];
        for d in 0..draws {
            for s in plan.sample_steps(&mut stream(21, d)) {
                acc[0].push(if s.term == 0 { s.angle } else { 0.0 });
                acc[1].push(if s.term == 1 { s.angle } else { 0.0 });
            }
        }
        // Per-step expected generator: (1/r)∫β_i(t)dt.
        let expected = [(0.5 + 0.5) / r as f64, -0.8 / r as f64];
        for k in 0..2 {
            let dev = (acc[k].mean - expected[k]).abs();
            assert!(dev < 3.0 * acc[k].std_error(), "term {k}: {} vs {}", acc[k].mean, expected[k]);
        }
    }

    #[test]
    fn time_dependent_plan_tracks_propagator() {
        let g = TimeDependentGenerator::new(
            1,
            vec![
                ScheduledTerm { coeff: C64::new(0.0, 1.0), string: PauliString::parse("X").unwrap(), schedule: Schedule::Polynomial(vec![0.2, 1.0]) },
                ScheduledTerm { coeff: C64::new(0.0, 0.6), string: PauliString::parse("Z").unwrap(), schedule: Schedule::Constant },
            ],
            1.0,
        )
        .unwrap();
        let exact = time_ordered_propagator(&g, 0.0, 1.0, 1e-12).unwrap();
        let terms = vec![
            PlanTerm { string: PauliString::parse("X").unwrap(), parts: vec![(1.0, Schedule::Polynomial(vec![0.2, 1.0]))] },
            PlanTerm { string: PauliString::parse("Z").unwrap(), parts: vec![(0.6, Schedule::Constant)] },
        ];
        let plan = CqdriftPlan::new(1, terms, &[], 0.0, 1.0, 400, 8).unwrap();
        let err = channel_error(&plan, &exact, 400).unwrap();
        assert!(err <= 4.0 * plan.lambda().powi(2) / 400.0, "err {err}");
    }

    #[test]
    fn paired_identity_partner_is_a_full_step() {
        let h = PauliSum::from_labels(&[(C64::new(1.0, 0.0), "XI"), (C64::new(-0.5, 0.0), "ZZ")]).unwrap();
        let base = CqdriftPlan::from_hermitian(&h, 1.0, 32, 4).unwrap();
        let partners = base.terms().iter().map(|t| (t.string, 1.0)).collect();
        let paired = base.with_protection(Protection::Paired { partners }).unwrap();
        let u0 = StateVector::uniform(4);
        for idx in 0..5 {
            let a = base.evolve(&u0, idx).unwrap();
            let b = paired.evolve(&u0, idx).unwrap();
            assert!(a.distance(&b) < 1e-12);
        }
    }

    #[test]
    fn alternate_reorder_keeps_multiset() {
        let h = PauliSum::from_labels(&[(C64::new(1.0, 0.0), "XI"), (C64::new(-0.5, 0.0), "ZZ"), (C64::new(0.7, 0.0), "IY")]).unwrap();
        let base = CqdriftPlan::from_hermitian(&h, 1.0, 40, 4).unwrap();
        let alt = base.with_protection(Protection::Alternate { classes: vec![1, -1, 0], window: 6 }).unwrap();
        let a = base.sample_steps(&mut stream(1, 1));
        let b = alt.sample_steps(&mut stream(1, 1));
        let key = |s: &Step| (s.term, s.angle.to_bits(), s.time.to_bits());
        for (ca, cb) in a.chunks(6).zip(b.chunks(6)) {
            let mut ka: Vec<_> = ca.iter().map(key).collect();
            let mut kb: Vec<_> = cb.iter().map(key).collect();
            ka.sort();
            kb.sort();
            assert_eq!(ka, kb);
        }
    }

    proptest! {
        #[test]
        fn norm_is_preserved(seed in 0u64..1000, r in 1usize..40) {
            let h = PauliSum::from_labels(&[(C64::new(0.9, 0.0), "XY"), (C64::new(-0.4, 0.0), "ZI"), (C64::new(0.3, 0.0), "YY")]).unwrap();
            let plan = CqdriftPlan::from_hermitian(&h, 0.8, r, seed).unwrap();
            let u0 = StateVector::from_real(&[0.1, -0.7, 0.3, 0.2]);
            let out = plan.evolve(&u0, 0).unwrap();
            prop_assert!((out.norm() - u0.norm()).abs() < 1e-12);
        }
    }
}

//! Observable-driven estimation of `⟨u(T)|O|u(T)⟩` by sampling index pairs
//! of the double sum `Σ_{l,j} c̄_l c_j m_{l,j}`, and the URCC path sampler.
//!
//! `m_{l,j} = ⟨φ_l|O|φ_j⟩` with `φ_j = U_j û₀` is complex in general, so each
//! pair sample carries a complex `m̂`. With `X^R = W_R sgn(Re c̄c) m̂` and
//! `X^I = W_I sgn(Im c̄c) m̂` the estimate `Ô = X̄^R + i X̄^I` has real part
//! equal to the target; its imaginary part should vanish and is reported as
//! a diagnostic.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;

use crate::cqdrift::CqdriftPlan;
use crate::error::{bail, Result};
use crate::lchs::{LchsSplit, ShiftPolicy};
use crate::lcu::Categorical;
use crate::linalg::{hermitian_eigen, DenseOperator, StateVector, C64, ZERO};
use crate::pauli::{PauliString, PauliSum};
use crate::quadrature::{KernelParams, QuadratureGrid};
use crate::rng::{stream, uniform};
use crate::schedule::TimeDependentGenerator;
use crate::stats::Welford;

/// Above this many pairs the tables are replaced by factorized sampling.
pub const PAIR_TABLE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

#[derive(Clone, Debug)]
enum PairSampler {
    Table { re: Categorical, im: Categorical },
    /// Draw `l, j ∝ |c|` independently, accept with `|part(c̄_l c_j)|/(|c_l||c_j|)`.
    Factorized { nodes: Categorical },
}

/// Pair weights `W_R = Σ|Re(c̄_l c_j)|`, `W_I = Σ|Im(c̄_l c_j)|` with samplers.
#[derive(Clone, Debug)]
pub struct PairWeights {
    pub w_re: f64,
    pub w_im: f64,
    coeffs: Vec<C64>,
    sampler: PairSampler,
}

impl PairWeights {
    pub fn new(coeffs: &[C64]) -> Result<Self> {
        let m = coeffs.len();
        if m == 0 {
            bail!(Parameter, "pair weights need a non-empty grid");
        }
        let pair = |l: usize, j: usize| coeffs[l].conj() * coeffs[j];
        let (w_re, w_im, sampler) = if m.saturating_mul(m) <= PAIR_TABLE_CAP {
            let re = Categorical::new((0..m * m).map(|x| pair(x / m, x % m).re));
            let im = Categorical::new((0..m * m).map(|x| pair(x / m, x % m).im));
            (re.total(), im.total(), PairSampler::Table { re, im })
        } else {
            let (mut wr, mut wi) = (0.0, 0.0);
            for l in 0..m {
                for j in 0..m {
                    let p = pair(l, j);
                    wr += p.re.abs();
                    wi += p.im.abs();
                }
            }
            (wr, wi, PairSampler::Factorized { nodes: Categorical::new(coeffs.iter().map(|c| c.norm())) })
        };
        Ok(Self { w_re, w_im, coeffs: coeffs.to_vec(), sampler })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn weight(&self, part: Part) -> f64 {
        match part {
            Part::Re => self.w_re,
            Part::Im => self.w_im,
        }
    }

    /// `W = max(W_R, W_I)`.
    pub fn w_max(&self) -> f64 {
        self.w_re.max(self.w_im)
    }

    pub fn is_factorized(&self) -> bool {
        matches!(self.sampler, PairSampler::Factorized { .. })
    }

    fn product(&self, l: usize, j: usize, part: Part) -> f64 {
        let p = self.coeffs[l].conj() * self.coeffs[j];
        match part {
            Part::Re => p.re,
            Part::Im => p.im,
        }
    }

    /// `(l, j, sign)` with probability `|part(c̄_l c_j)| / W_part`.
    pub fn sample(&self, part: Part, rng: &mut impl Rng) -> (usize, usize, f64) {
        let m = self.coeffs.len();
        match &self.sampler {
            PairSampler::Table { re, im } => {
                let x = match part {
                    Part::Re => re.sample(rng),
                    Part::Im => im.sample(rng),
                };
                let (l, j) = (x / m, x % m);
                (l, j, self.product(l, j, part).signum())
            }
            PairSampler::Factorized { nodes } => loop {
                let l = nodes.sample(rng);
                let j = nodes.sample(rng);
                let v = self.product(l, j, part);
                let bound = self.coeffs[l].norm() * self.coeffs[j].norm();
                if bound > 0.0 && uniform(rng) * bound < v.abs() {
                    return (l, j, v.signum());
                }
            },
        }
    }
}

/// Realization of `m̂_{l,j}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MEstimator {
    /// Dense inner unitaries; `m̂ = m` exactly.
    Exact,
    /// Two independent c-qDrift trajectories with `r` segments.
    CqdriftMean { r: usize },
    /// Simulated Hadamard tests (one for Re, one for Im), each a single
    /// bounded measurement; inner states exact (`None`) or c-qDrift (`Some(r)`).
    Shot { r: Option<usize> },
}

/// Bounded spectral data of a Hermitian observable.
#[derive(Clone, Debug)]
pub struct Observable {
    pub sum: PauliSum,
    dense: DenseOperator,
    eigenvalues: Vec<f64>,
    eigenvectors: DenseOperator,
    norm: f64,
}

impl Observable {
    pub fn new(sum: &PauliSum) -> Result<Self> {
        if !sum.is_hermitian() {
            bail!(Contract, "observable {} is not Hermitian", sum.describe());
        }
        let dense = sum.to_dense()?;
        let (eigenvalues, eigenvectors) = hermitian_eigen(&dense);
        let norm = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self { sum: sum.clone(), dense, eigenvalues, eigenvectors, norm })
    }

    /// Spectral norm `‖O‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn expectation(&self, a: &StateVector, b: &StateVector) -> C64 {
        a.inner(&self.dense.apply(b))
    }

    /// Amplitudes of `v` in the eigenbasis of `O`.
    fn eigen_amplitudes(&self, v: &StateVector) -> Vec<C64> {
        let d = self.eigenvalues.len();
        (0..d)
            .map(|k| (0..d).fold(ZERO, |acc, r| acc + self.eigenvectors[(r, k)].conj() * v.amplitudes()[r]))
            .collect()
    }

    /// One simulated Hadamard test on `(|0⟩a + |1⟩b)/√2`: ancilla measured
    /// in the X basis (`Part::Re`) or Y basis (`Part::Im`), system in the
    /// eigenbasis of `O`. Returns `±o_k`; its mean is `Re/Im ⟨a|O|b⟩`.
    pub fn hadamard_shot(&self, a: &StateVector, b: &StateVector, part: Part, rng: &mut impl Rng) -> f64 {
        let ea = self.eigen_amplitudes(a);
        let eb = self.eigen_amplitudes(b);
        let rot = match part {
            Part::Re => C64::new(1.0, 0.0),
            Part::Im => C64::new(0.0, -1.0),
        };
        // Branch amplitudes (a ± rot·b)/2 for ancilla outcome ±1.
        let mut probs = Vec::with_capacity(2 * ea.len());
        for (x, y) in ea.iter().zip(&eb) {
            probs.push(((x + rot * y) * 0.5).norm_sqr());
            probs.push(((x - rot * y) * 0.5).norm_sqr());
        }
        let cat = Categorical::new(probs);
        let idx = cat.sample(rng);
        let sign = if idx.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.eigenvalues[idx / 2]
    }
}

/// Inputs of the observable estimator: split, grid, normalized initial state and observable.
#[derive(Clone, Debug)]
pub struct ObservableProblem {
    pub split: LchsSplit,
    pub grid: QuadratureGrid,
    pub coeffs: Vec<C64>,
    pub pairs: PairWeights,
    pub u0: StateVector,
    pub u0_norm: f64,
    pub observable: Observable,
    exact_states: Option<Vec<StateVector>>,
}

impl ObservableProblem {
    pub fn new(g: &TimeDependentGenerator, u0: &StateVector, o: &PauliSum, params: &KernelParams, eps: f64) -> Result<Self> {
        let split = LchsSplit::new(g, ShiftPolicy::Exact)?;
        let grid = split.grid(params, eps)?;
        Self::with_grid(split, grid, u0, o)
    }

    pub fn with_grid(split: LchsSplit, grid: QuadratureGrid, u0: &StateVector, o: &PauliSum) -> Result<Self> {
        if u0.dim() != split.dim() || o.qubits() != split.qubits() {
            bail!(Dimension, "state, observable and generator dimensions differ");
        }
        let u0_norm = u0.norm();
        if u0_norm == 0.0 {
            bail!(Parameter, "initial state is zero");
        }
        let coeffs = split.effective_weights(&grid);
        let pairs = PairWeights::new(&coeffs)?;
        Ok(Self { split, grid, coeffs, pairs, u0: u0.normalized(), u0_norm, observable: Observable::new(o)?, exact_states: None })
    }

    /// Caches `φ_j = U_j û₀` for exact and exact-shot modes.
    pub fn with_exact_states(mut self, tol: f64) -> Result<Self> {
        let t = self.split.t_final();
        let states = self
            .grid
            .nodes
            .iter()
            .map(|&k| Ok(self.split.inner_unitary(k, 0.0, t, tol)?.apply(&self.u0)))
            .collect::<Result<Vec<_>>>()?;
        self.exact_states = Some(states);
        Ok(self)
    }

    fn exact_state(&self, j: usize) -> Result<&StateVector> {
        match &self.exact_states {
            Some(s) => Ok(&s[j]),
            None => bail!(Contract, "exact inner states not prepared; call with_exact_states"),
        }
    }

    fn trajectory(&self, j: usize, r: usize, rng: &mut impl Rng) -> Result<StateVector> {
        let plan = CqdriftPlan::from_split(&self.split, self.grid.nodes[j], 0.0, self.split.t_final(), r, 0)?;
        let mut psi = self.u0.clone();
        plan.evolve_with(psi.amplitudes_mut(), rng);
        Ok(psi)
    }

    /// `m̂_{l,j}` for normalized `û₀` under the chosen realization.
    pub fn estimate_m(&self, l: usize, j: usize, mode: MEstimator, rng: &mut impl Rng) -> Result<C64> {
        match mode {
            MEstimator::Exact => Ok(self.observable.expectation(self.exact_state(l)?, self.exact_state(j)?)),
            MEstimator::CqdriftMean { r } => {
                let a = self.trajectory(l, r, rng)?;
                let b = self.trajectory(j, r, rng)?;
                Ok(self.observable.expectation(&a, &b))
            }
            MEstimator::Shot { r } => {
                let (a, b) = match r {
                    None => (self.exact_state(l)?.clone(), self.exact_state(j)?.clone()),
                    Some(r) => (self.trajectory(l, r, rng)?, self.trajectory(j, r, rng)?),
                };
                let re = self.observable.hadamard_shot(&a, &b, Part::Re, rng);
                let im = self.observable.hadamard_shot(&a, &b, Part::Im, rng);
                Ok(C64::new(re, im))
            }
        }
    }

    /// `Σ_{l,j} c̄_l c_j m_{l,j} ‖u₀‖²` from the exact states.
    pub fn deterministic_value(&self) -> Result<C64> {
        let mut v = StateVector::zeros(self.u0.dim());
        for (j, c) in self.coeffs.iter().enumerate() {
            v.axpy(*c, self.exact_state(j)?);
        }
        Ok(self.observable.expectation(&v, &v) * (self.u0_norm * self.u0_norm))
    }

    /// Every pair visited once with its probability as weight (exact mode).
    pub fn exhaustive_value(&self) -> Result<C64> {
        let m = self.coeffs.len();
        let mut parts = [ZERO; 2];
        for (p, part) in [Part::Re, Part::Im].into_iter().enumerate() {
            let w = self.pairs.weight(part);
            if w == 0.0 {
                continue;
            }
            for l in 0..m {
                for j in 0..m {
                    let v = self.pairs.product(l, j, part);
                    let prob = v.abs() / w;
                    let mhat = self.observable.expectation(self.exact_state(l)?, self.exact_state(j)?);
                    parts[p] += mhat * (prob * w * v.signum());
                }
            }
        }
        Ok((parts[0] + C64::new(0.0, 1.0) * parts[1]) * (self.u0_norm * self.u0_norm))
    }
}

/// Result of [`estimate_observable`].
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableEstimate {
    /// `Ô = X̄^R + i X̄^I`, scaled by `‖u₀‖²`.
    pub value: C64,
    /// Standard error of `Re Ô`.
    pub std_error: f64,
    /// Standard error of `Im Ô`.
    pub std_error_im: f64,
    pub samples: u64,
}

/// Randomized estimate of `⟨u(T)|O|u(T)⟩` with `samples` draws per part.
pub fn estimate_observable(problem: &ObservableProblem, samples: u64, mode: MEstimator, seed: u64) -> Result<ObservableEstimate> {
    if samples == 0 {
        bail!(Parameter, "sample count must be positive");
    }
    // Real estimate: Re X̄^R − Im X̄^I; imaginary diagnostic: Im X̄^R + Re X̄^I.
    let (mut re_r, mut im_r, mut re_i, mut im_i) = (Welford::default(), Welford::default(), Welford::default(), Welford::default());
    for (p, part) in [Part::Re, Part::Im].into_iter().enumerate() {
        let w = problem.pairs.weight(part);
        if w == 0.0 {
            continue;
        }
        for s in 0..samples {
            let mut rng = stream(seed, ((p as u64) << 62) | s);
            let (l, j, sign) = problem.pairs.sample(part, &mut rng);
            let m = problem.estimate_m(l, j, mode, &mut rng)? * (w * sign);
            match part {
                Part::Re => {
                    re_r.push(m.re);
                    im_r.push(m.im);
                }
                Part::Im => {
                    re_i.push(m.re);
                    im_i.push(m.im);
                }
            }
        }
    }
    let scale = problem.u0_norm * problem.u0_norm;
    let value = C64::new(re_r.mean - im_i.mean, im_r.mean + re_i.mean) * scale;
    let se = (re_r.std_error().powi(2) + im_i.std_error().powi(2)).sqrt() * scale;
    let se_im = (im_r.std_error().powi(2) + re_i.std_error().powi(2)).sqrt() * scale;
    Ok(ObservableEstimate { value, std_error: se, std_error_im: se_im, samples })
}

/// `S = ⌈(2W‖O‖)² log(2/δ) / (2ε²)⌉`.
pub fn required_samples(w: f64, norm_o: f64, eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        bail!(Parameter, "need eps > 0 and delta in (0, 1), got {eps}, {delta}");
    }
    let s = ((2.0 * w * norm_o).powi(2) * (2.0 / delta).ln() / (2.0 * eps * eps)).ceil();
    Ok((s as u64).max(1))
}

/// Hoeffding half-width `2W‖O‖ sqrt(log(2/δ)/(2S))` for one part.
pub fn hoeffding_envelope(w: f64, norm_o: f64, samples: u64, delta: f64) -> f64 {
    2.0 * w * norm_o * ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// Poisson path on one segment: ordered times with Pauli indices and signs.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonPath {
    /// Envelope rate used for thinning.
    pub rate: f64,
    pub times: Vec<f64>,
    pub paulis: Vec<usize>,
    pub signs: Vec<f64>,
}

impl PoissonPath {
    /// `(−i)^ℓ Π sgn`, the scalar carried by the path.
    pub fn phase(&self) -> C64 {
        let sign: f64 = self.signs.iter().product();
        let turns = [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)];
        turns[self.times.len() % 4] * sign
    }

    /// Applies `P_{p_ℓ} ⋯ P_{p_1}` (time order) and the phase to `psi`.
    pub fn apply(&self, strings: &[PauliString], psi: &StateVector) -> StateVector {
        let mut v = psi.clone();
        for &p in &self.paulis {
            v = strings[p].apply(&v);
        }
        v.scale(self.phase())
    }
}

fn hermitian_plan(g: &TimeDependentGenerator, t0: f64, t1: f64, r: usize) -> Result<CqdriftPlan> {
    use crate::cqdrift::PlanTerm;
    let mut terms: Vec<PlanTerm> = Vec::new();
    let mut identity = Vec::new();
    for term in g.terms() {
        if term.coeff.im != 0.0 {
            bail!(Contract, "path sampling needs real Pauli coefficients; {} has {}", term.string, term.coeff);
        }
        if term.string.is_identity() {
            identity.push((term.coeff.re, term.schedule.clone()));
        } else {
            terms.push(PlanTerm { string: term.string, parts: alloc::vec![(term.coeff.re, term.schedule.clone())] });
        }
    }
    CqdriftPlan::new(g.qubits(), terms, &identity, t0, t1, r, 0)
}

/// Raw Poisson path on `[t0, t1]` for `H(t) = Σ α_p(t) P_p` (real coefficients):
/// times by thinning against the maximal total rate, Paulis `∝ |α_p(t)|`.
/// Then `𝒯e^{−i∫H} = e^{Λ} E[(−i)^ℓ Π sgn·P]` with `Λ = ∫ Σ|α_p|`.
pub fn urcc_sample_path(g: &TimeDependentGenerator, t0: f64, t1: f64, rng: &mut impl Rng) -> Result<PoissonPath> {
    let plan = hermitian_plan(g, t0, t1, 1)?;
    if plan.identity_phase() != 0.0 {
        bail!(Contract, "identity terms are phases, not path events");
    }
    let envelope = (0..=256)
        .map(|i| plan.rate_at(t0 + (t1 - t0) * i as f64 / 256.0))
        .fold(0.0, f64::max)
        * 1.05;
    let mut path = PoissonPath { rate: envelope, times: Vec::new(), paulis: Vec::new(), signs: Vec::new() };
    if envelope == 0.0 {
        return Ok(path);
    }
    let mut t = t0;
    loop {
        t += -(1.0 - uniform(rng)).ln() / envelope;
        if t >= t1 {
            break;
        }
        let rate = plan.rate_at(t);
        if uniform(rng) * envelope < rate {
            let values: Vec<f64> = plan.terms().iter().map(|term| term.value(t)).collect();
            let cat = Categorical::new(values.iter().copied());
            let p = cat.sample(rng);
            path.times.push(t);
            path.paulis.push(p);
            path.signs.push(values[p].signum());
        }
    }
    Ok(path)
}

/// Estimate of `⟨u(T)|O|u(T)⟩` for `u(T) = 𝒯e^{−i∫H}u₀` from path-sampled vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct UrccEstimate {
    pub value: f64,
    pub std_error: f64,
    pub variance: f64,
    /// Normalization `C = Π_seg C_seg`; each sample is bounded by `C²‖O‖‖u₀‖²`.
    pub normalization: f64,
    /// True when the sample variance exceeds `budget`.
    pub over_budget: bool,
}

/// Per-segment normalization `√(1+x²) + e^x − 1 − x`.
pub fn urcc_segment_normalization(x: f64) -> f64 {
    (1.0 + x * x).sqrt() + x.exp_m1() - x
}

/// One path-realized vector: per segment, with probability `√(1+x²)/C_seg`
/// a rotation `e^{−i atan(x) sgn P}` (orders 0 and 1 combined), otherwise an
/// order-`ℓ ≥ 2` product with weight `x^ℓ/ℓ!`; the result is scaled by `C`.
fn urcc_vector(plan: &CqdriftPlan, u0: &StateVector, rng: &mut impl Rng) -> StateVector {
    let r = plan.segments();
    let x = plan.lambda() / r as f64;
    let c_seg = urcc_segment_normalization(x);
    let rot_p = (1.0 + x * x).sqrt() / c_seg;
    let mut psi = u0.clone();
    let mut phase = C64::new(1.0, 0.0);
    for seg in 0..r {
        if x == 0.0 {
            break;
        }
        if uniform(rng) < rot_p {
            let (i, _, v) = plan.draw_in_segment(seg, rng);
            plan.terms()[i].string.rotate(v.signum() * x.atan(), psi.amplitudes_mut());
            continue;
        }
        // Order ℓ ≥ 2 with probability ∝ x^ℓ/ℓ!.
        let target = uniform(rng) * (x.exp_m1() - x);
        let mut term = x;
        let mut acc = 0.0;
        let mut order = 1;
        loop {
            order += 1;
            term *= x / order as f64;
            acc += term;
            if target < acc || term < 1e-300 {
                break;
            }
        }
        let mut events: Vec<(f64, usize, f64)> = (0..order)
            .map(|_| {
                let (i, t, v) = plan.draw_in_segment(seg, rng);
                (t, i, v.signum())
            })
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, i, s) in events {
            psi = plan.terms()[i].string.apply(&psi);
            phase *= C64::new(0.0, -s);
        }
    }
    let c_total = c_seg.powi(r as i32);
    let id = C64::from_polar(1.0, -plan.identity_phase());
    psi.scale(phase * id * c_total)
}

/// Unbiased estimate of `⟨u(T)|O|u(T)⟩` from `samples` pairs of independent
/// path vectors with `r` segments. `budget` flags excessive variance.
pub fn urcc_estimate(
    g: &TimeDependentGenerator,
    u0: &StateVector,
    o: &PauliSum,
    samples: u64,
    r: usize,
    seed: u64,
    budget: f64,
) -> Result<UrccEstimate> {
    if samples == 0 || r == 0 {
        bail!(Parameter, "samples and segments must be positive");
    }
    if u0.dim() != g.dim() || o.qubits() != g.qubits() {
        bail!(Dimension, "state, observable and generator dimensions differ");
    }
    let obs = Observable::new(o)?;
    let plan = hermitian_plan(g, 0.0, g.t_final(), r)?;
    let mut acc = Welford::default();
    for s in 0..samples {
        let mut rng = stream(seed, s);
        let a = urcc_vector(&plan, u0, &mut rng);
        let b = urcc_vector(&plan, u0, &mut rng);
        acc.push(obs.expectation(&a, &b).re);
    }
    let normalization = urcc_segment_normalization(plan.lambda() / r as f64).powi(r as i32);
    let variance = acc.variance();
    Ok(UrccEstimate { value: acc.mean, std_error: acc.std_error(), variance, normalization, over_budget: variance > budget })
}

/// `r = ⌈‖α‖²_{1,1}⌉` for URCC, at least one.
pub fn urcc_segments(g: &TimeDependentGenerator) -> Result<usize> {
    let plan = hermitian_plan(g, 0.0, g.t_final(), 1)?;
    Ok((plan.lambda().powi(2).ceil() as usize).max(1))
}

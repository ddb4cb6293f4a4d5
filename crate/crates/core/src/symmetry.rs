//! Pseudo-Hermiticity: parity checks, conserved intertwiners `η` with
//! `η A = e^{iφ} A† η`, and symmetry-protected c-qDrift plans.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cqdrift::{CqdriftPlan, Protection};
use crate::error::{bail, Result};
use crate::evolution::time_ordered_propagator;
use crate::linalg::{DenseOperator, StateVector, C64};
use crate::models::{is_occupied, HnParams};
use crate::pauli::{check_cap, PauliString};
use crate::schedule::TimeDependentGenerator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityKind {
    Trivial,
    /// `∏ X_i`.
    SpinFlip,
    /// Qubit `j ↦ n + 1 − j`.
    Reflection,
}

/// Linear parity operator on `qubits` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParitySpec {
    pub kind: ParityKind,
    pub qubits: usize,
}

impl ParitySpec {
    pub fn new(kind: ParityKind, qubits: usize) -> Self {
        Self { kind, qubits }
    }

    /// Basis permutation realizing the parity.
    pub fn image(&self, b: usize) -> usize {
        let n = self.qubits;
        match self.kind {
            ParityKind::Trivial => b,
            ParityKind::SpinFlip => b ^ ((1usize << n) - 1),
            ParityKind::Reflection => (0..n).fold(0, |acc, q| acc | (((b >> q) & 1) << (n - 1 - q))),
        }
    }

    pub fn monomial(&self) -> Monomial {
        let dim = 1usize << self.qubits;
        Monomial { perm: (0..dim).map(|b| self.image(b)).collect(), phases: alloc::vec![C64::new(1.0, 0.0); dim] }
    }

    pub fn dense(&self) -> Result<DenseOperator> {
        check_cap(self.qubits)?;
        Ok(self.monomial().to_dense())
    }
}

/// Operator with one nonzero per column: `M e_c = phases[c] e_{perm[c]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    perm: Vec<usize>,
    phases: Vec<C64>,
}

impl Monomial {
    /// `None` unless every column has exactly one entry above `tol` and the
    /// pattern is a permutation.
    pub fn from_dense(d: &DenseOperator, tol: f64) -> Option<Self> {
        let dim = d.dim();
        let mut perm = Vec::with_capacity(dim);
        let mut phases = Vec::with_capacity(dim);
        let mut seen = alloc::vec![false; dim];
        for c in 0..dim {
            let mut hit = None;
            for r in 0..dim {
                if d[(r, c)].norm() > tol {
                    if hit.is_some() {
                        return None;
                    }
                    hit = Some(r);
                }
            }
            let r = hit?;
            if seen[r] {
                return None;
            }
            seen[r] = true;
            perm.push(r);
            phases.push(d[(r, c)]);
        }
        Some(Self { perm, phases })
    }

    /// Diagonal `exp(−iπ/4 Σ Z_j)`: maps `X ↦ Y ↦ −X` on every qubit.
    pub fn quarter_turn(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let phases = (0..dim)
            .map(|b| {
                let ones = (b as u64).count_ones() as f64;
                let z_sum = qubits as f64 - 2.0 * ones;
                C64::from_polar(1.0, -core::f64::consts::FRAC_PI_4 * z_sum)
            })
            .collect();
        Self { perm: (0..dim).collect(), phases }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn to_dense(&self) -> DenseOperator {
        let mut d = DenseOperator::zeros(self.dim());
        for (c, (&r, &ph)) in self.perm.iter().zip(&self.phases).enumerate() {
            d[(r, c)] = ph;
        }
        d
    }

    /// `M P M⁻¹ = coeff · P'`, or an error when the image is not a Pauli string.
    pub fn conjugate(&self, p: &PauliString, tol: f64) -> Result<(C64, PauliString)> {
        let dim = self.dim();
        if p.qubits() >= usize::BITS as usize || 1usize << p.qubits() != dim {
            bail!(Dimension, "string on {} qubits, operator of dimension {dim}", p.qubits());
        }
        if self.phases.iter().any(|ph| ph.norm() <= tol) {
            bail!(Contract, "operator is not invertible");
        }
        let mut inv = alloc::vec![0usize; dim];
        for (c, &r) in self.perm.iter().enumerate() {
            inv[r] = c;
        }
        let x = p.x_mask() as usize;
        // Column b of M P M⁻¹ has a single entry, at row `row(b)` with value `value(b)`.
        let entry = |b: usize| {
            let c = inv[b];
            let moved = c ^ x;
            let v = self.phases[moved] * p.phase(c as u64) / self.phases[c];
            (self.perm[moved], v)
        };
        let (row0, v0) = entry(0);
        let x_new = row0;
        let mut z_new = 0usize;
        let n = p.qubits();
        for q in 0..n {
            let (_, v) = entry(1 << q);
            if (v / v0).re < 0.0 {
                z_new |= 1 << q;
            }
        }
        let image = PauliString::from_masks(n, x_new as u64, z_new as u64)?;
        let coeff = v0 / image.phase(0);
        for b in 0..dim {
            let (row, v) = entry(b);
            if row != b ^ x_new || (v - coeff * image.phase(b as u64)).norm() > tol * (1.0 + coeff.norm()) {
                bail!(Contract, "conjugate of {p} is not a single Pauli string");
            }
        }
        Ok((coeff, image))
    }
}

/// `‖𝒫 conj(A) 𝒫⁻¹ − A‖ / ‖A‖` in the spectral norm (`𝒯` is complex conjugation).
pub fn pt_check(a: &crate::pauli::PauliSum, p: &ParitySpec) -> Result<f64> {
    if a.qubits() != p.qubits {
        bail!(Dimension, "operator on {} qubits, parity on {}", a.qubits(), p.qubits);
    }
    let dense = a.to_dense()?;
    let par = p.dense()?;
    let image = par.matmul(&dense.conj()).matmul(&par.adjoint());
    let norm = dense.spectral_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(image.sub(&dense).spectral_norm() / norm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntertwinerKind {
    /// `η_k` of the recursive tower.
    Recursive { order: usize },
    /// `η = S†S` from a similarity gauge `S`.
    Gauge,
}

/// Operator `η` with `η A = e^{iφ} A† η`.
#[derive(Clone, Debug)]
pub struct Intertwiner {
    pub eta: DenseOperator,
    pub kind: IntertwinerKind,
    pub phi: f64,
}

impl Intertwiner {
    /// `‖η A − e^{iφ} A† η‖` in the spectral norm.
    pub fn residual(&self, a: &DenseOperator) -> f64 {
        intertwining_residual(&self.eta, a, self.phi)
    }
}

fn intertwining_residual(eta: &DenseOperator, a: &DenseOperator, phi: f64) -> f64 {
    let lhs = eta.matmul(a);
    let rhs = a.adjoint().matmul(eta).scale(C64::from_polar(1.0, phi));
    lhs.sub(&rhs).spectral_norm()
}

/// `η_1 = 𝒫`, `η_{k+1} = e^{iφ/2} η_k A`.
///
/// Requires `𝒫 A = e^{iφ} A† 𝒫` to relative accuracy `1e−6`; the result is
/// checked against `‖η_k A − e^{iφ} A† η_k‖ ≤ 1e−8 ‖A‖^k`.
pub fn recursive_eta(a: &DenseOperator, p: &ParitySpec, phi: f64, k: usize) -> Result<Intertwiner> {
    if k == 0 {
        bail!(Parameter, "tower order starts at 1");
    }
    let par = p.dense()?;
    if par.dim() != a.dim() {
        bail!(Dimension, "operator of dimension {}, parity of dimension {}", a.dim(), par.dim());
    }
    let norm = a.spectral_norm();
    let pre = intertwining_residual(&par, a, phi);
    if pre > 1e-6 * norm.max(1.0) {
        bail!(Contract, "parity does not intertwine the operator (residual {pre:.3e})");
    }
    let step = C64::from_polar(1.0, 0.5 * phi);
    let mut eta = par;
    for _ in 1..k {
        eta = eta.matmul(a).scale(step);
    }
    let out = Intertwiner { eta, kind: IntertwinerKind::Recursive { order: k }, phi };
    let post = out.residual(a);
    let bound = 1e-8 * norm.max(1.0).powi(k as i32);
    if post > bound {
        bail!(Numerical, "order-{k} intertwiner residual {post:.3e} exceeds {bound:.3e}");
    }
    Ok(out)
}

/// Gauge data for the Hatano–Nelson chain.
#[derive(Clone, Debug)]
pub struct HnGauge {
    /// `κ = ½ ln((J − γ)/(J + γ))`.
    pub kappa: f64,
    /// Symmetrized hopping `√((J + γ)(J − γ))`.
    pub hopping: f64,
    /// Diagonal `S = exp(κ Σ_j j n_j)`.
    pub gauge: DenseOperator,
    pub intertwiner: Intertwiner,
}

/// `S` and `η = S†S = exp(2κ Σ_j j n_j)`; `S A S⁻¹` is Hermitian.
pub fn hn_intertwiner(p: &HnParams) -> Result<HnGauge> {
    if !(p.j.is_finite() && p.gamma.is_finite()) {
        bail!(Parameter, "model parameters must be finite");
    }
    if p.gamma.abs() >= p.j.abs() {
        bail!(Parameter, "gauge intertwiner requires |gamma| < |J|, got gamma = {}, J = {}", p.gamma, p.j);
    }
    check_cap(p.l)?;
    let kappa = 0.5 * ((p.j - p.gamma) / (p.j + p.gamma)).ln();
    let hopping = ((p.j + p.gamma) * (p.j - p.gamma)).sqrt();
    let dim = 1usize << p.l;
    let weight = |b: usize| -> f64 {
        (1..=p.l).filter(|&j| is_occupied(p.l, j, b as u64)).map(|j| j as f64).sum()
    };
    let s: Vec<C64> = (0..dim).map(|b| C64::new((kappa * weight(b)).exp(), 0.0)).collect();
    let eta: Vec<C64> = s.iter().map(|v| *v * *v).collect();
    Ok(HnGauge {
        kappa,
        hopping,
        gauge: DenseOperator::diagonal(&s),
        intertwiner: Intertwiner { eta: DenseOperator::diagonal(&eta), kind: IntertwinerKind::Gauge, phi: 0.0 },
    })
}

/// Result of [`conserved_drift`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drift {
    pub value: f64,
    /// `false` when `⟨η⟩(0) = 0` and `value` is the absolute drift.
    pub relative: bool,
}

/// Number of sample times used by [`conserved_drift`] and [`observable_traces`].
pub const TRACE_POINTS: usize = 64;

fn expectation(op: &DenseOperator, psi: &StateVector) -> C64 {
    psi.inner(&op.apply(psi))
}

fn trajectory_states(
    g: &TimeDependentGenerator,
    u0: &StateVector,
    t_final: f64,
    points: usize,
    tol: f64,
) -> Result<Vec<(f64, StateVector)>> {
    if u0.dim() != g.dim() {
        bail!(Dimension, "state has dimension {}, generator {}", u0.dim(), g.dim());
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        bail!(Parameter, "final time must be finite and non-negative");
    }
    let points = points.max(2);
    let dt = t_final / (points - 1) as f64;
    let constant = if g.is_time_independent() { Some(time_ordered_propagator(g, 0.0, dt, tol)?) } else { None };
    let mut out = Vec::with_capacity(points);
    let mut psi = u0.clone();
    out.push((0.0, psi.clone()));
    for m in 1..points {
        let (a, b) = ((m - 1) as f64 * dt, m as f64 * dt);
        psi = match &constant {
            Some(u) => u.apply(&psi),
            None => time_ordered_propagator(g, a, b, tol)?.apply(&psi),
        };
        out.push((b, psi.clone()));
    }
    Ok(out)
}

/// Largest change of `⟨ψ(t)|η|ψ(t)⟩` along the exact solution of
/// `du/dt = −G u` on `[0, T]`, relative to its initial value.
pub fn conserved_drift(
    eta: &DenseOperator,
    g: &TimeDependentGenerator,
    u0: &StateVector,
    t_final: f64,
    tol: f64,
) -> Result<Drift> {
    if eta.dim() != g.dim() {
        bail!(Dimension, "eta has dimension {}, generator {}", eta.dim(), g.dim());
    }
    let states = trajectory_states(g, u0, t_final, TRACE_POINTS, tol)?;
    let initial = expectation(eta, u0);
    let worst = states.iter().map(|(_, psi)| (expectation(eta, psi) - initial).norm()).fold(0.0, f64::max);
    if initial.norm() == 0.0 {
        return Ok(Drift { value: worst, relative: false });
    }
    Ok(Drift { value: worst / initial.norm(), relative: true })
}

/// One row of an observable trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    /// `Re⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩` per observable.
    pub values: Vec<f64>,
    /// `Re⟨ψ|η|ψ⟩` on the unnormalized state.
    pub eta: f64,
    pub norm: f64,
}

/// Evaluates a state against observables and the conserved form.
pub fn trace_point(t: f64, psi: &StateVector, observables: &[DenseOperator], eta: &DenseOperator) -> TracePoint {
    let norm_sqr = psi.norm_sqr();
    let values = observables
        .iter()
        .map(|o| if norm_sqr > 0.0 { expectation(o, psi).re / norm_sqr } else { 0.0 })
        .collect();
    TracePoint { t, values, eta: expectation(eta, psi).re, norm: norm_sqr.sqrt() }
}

/// Exact traces of `observables` and `η` at `points ≥ 64` equally spaced
/// times on `[0, T]`.
pub fn observable_traces(
    g: &TimeDependentGenerator,
    u0: &StateVector,
    t_final: f64,
    points: usize,
    observables: &[DenseOperator],
    eta: &DenseOperator,
    tol: f64,
) -> Result<Vec<TracePoint>> {
    if observables.iter().chain(core::iter::once(eta)).any(|o| o.dim() != g.dim()) {
        bail!(Dimension, "observable dimension differs from generator dimension {}", g.dim());
    }
    let states = trajectory_states(g, u0, t_final, points.max(TRACE_POINTS), tol)?;
    Ok(states.iter().map(|(t, psi)| trace_point(*t, psi, observables, eta)).collect())
}

/// Strategy for [`protected_plan`].
#[derive(Clone, Debug, PartialEq)]
pub enum ProtectionMode {
    None,
    /// Each step is followed by its conjugate `η b η⁻¹` at half angle each.
    Paired,
    /// `Paired` with the unrescaled angle `β(t) Δ / (2r)`.
    PairedLiteral,
    /// Reorders steps inside windows so that terms raising and lowering
    /// `⟨η⟩` alternate, classified once against `state`.
    Alternate { window: usize, state: StateVector },
}

const MONOMIAL_TOL: f64 = 1e-12;

/// Per-string protection data, reusable across plans over the same strings.
#[derive(Clone, Debug)]
pub struct Protector {
    mode: ProtectionMode,
    partners: BTreeMap<(u64, u64), (PauliString, f64)>,
    classes: BTreeMap<(u64, u64), i8>,
}

fn key(p: &PauliString) -> (u64, u64) {
    (p.x_mask(), p.z_mask())
}

/// Sign of `⟨u|i(ηP − Pη)|u⟩`, zero when it vanishes to rounding.
fn raising_class(eta: &DenseOperator, p: &PauliString, state: &StateVector) -> i8 {
    let pu = p.apply(state);
    let value = (C64::new(0.0, 1.0) * (state.inner(&eta.apply(&pu)) - pu.inner(&eta.apply(state)))).re;
    let scale = eta.max_abs() * state.norm_sqr();
    if value.abs() <= 1e-12 * scale.max(1e-300) {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    }
}

impl Protector {
    /// Precomputes partners or classes for `strings`. `eta` must be
    /// invertible; paired modes also require `η P η⁻¹ = ±P'` for each string.
    pub fn new(eta: &DenseOperator, mode: ProtectionMode, strings: &[PauliString]) -> Result<Self> {
        if let Some(p) = strings.iter().find(|p| p.qubits() >= usize::BITS as usize || 1usize << p.qubits() != eta.dim()) {
            bail!(Dimension, "string {p} does not act on dimension {}", eta.dim());
        }
        let mut partners = BTreeMap::new();
        let mut classes = BTreeMap::new();
        match &mode {
            ProtectionMode::None => {}
            ProtectionMode::Paired | ProtectionMode::PairedLiteral => {
                let Some(mono) = Monomial::from_dense(eta, MONOMIAL_TOL) else {
                    bail!(Contract, "paired protection needs a monomial (permutation times phase) operator")
                };
                for p in strings {
                    let (coeff, image) = mono.conjugate(p, 1e-10)?;
                    if coeff.im.abs() > 1e-10 || (coeff.re.abs() - 1.0).abs() > 1e-10 {
                        bail!(Contract, "conjugate of {p} is {coeff} times a string, not a signed Hermitian string");
                    }
                    partners.insert(key(p), (image, coeff.re.signum()));
                }
            }
            ProtectionMode::Alternate { window, state } => {
                if *window == 0 {
                    bail!(Parameter, "reorder window must be positive");
                }
                if state.dim() != eta.dim() {
                    bail!(Dimension, "state has dimension {}, eta {}", state.dim(), eta.dim());
                }
                if crate::linalg::solve(eta, &DenseOperator::identity(eta.dim())).is_err() {
                    bail!(Contract, "eta is not invertible");
                }
                for p in strings {
                    classes.insert(key(p), raising_class(eta, p, state));
                }
            }
        }
        Ok(Self { mode, partners, classes })
    }

    pub fn mode(&self) -> &ProtectionMode {
        &self.mode
    }

    fn partner(&self, p: &PauliString) -> Result<(PauliString, f64)> {
        match self.partners.get(&key(p)) {
            Some(v) => Ok(*v),
            None => bail!(Contract, "no partner prepared for {p}"),
        }
    }

    /// Returns `plan` with this protection attached.
    pub fn apply(&self, plan: &CqdriftPlan) -> Result<CqdriftPlan> {
        let protection = match &self.mode {
            ProtectionMode::None => Protection::None,
            ProtectionMode::Paired => {
                let partners = plan.terms().iter().map(|t| self.partner(&t.string)).collect::<Result<_>>()?;
                Protection::Paired { partners }
            }
            ProtectionMode::PairedLiteral => {
                let partners = plan.terms().iter().map(|t| self.partner(&t.string)).collect::<Result<_>>()?;
                Protection::PairedLiteral { partners }
            }
            ProtectionMode::Alternate { window, .. } => {
                let (t0, _) = plan.interval();
                let classes = plan
                    .terms()
                    .iter()
                    .map(|t| {
                        let Some(&c) = self.classes.get(&key(&t.string)) else {
                            bail!(Contract, "no class prepared for {}", t.string)
                        };
                        Ok(if t.value(t0) < 0.0 { -c } else { c })
                    })
                    .collect::<Result<_>>()?;
                Protection::Alternate { classes, window: *window }
            }
        };
        plan.with_protection(protection)
    }
}

/// One-off form of [`Protector::apply`].
pub fn protected_plan(plan: &CqdriftPlan, eta: &DenseOperator, mode: ProtectionMode) -> Result<CqdriftPlan> {
    if eta.dim() != plan.dim() {
        bail!(Dimension, "eta has dimension {}, plan {}", eta.dim(), plan.dim());
    }
    let strings: Vec<PauliString> = plan.terms().iter().map(|t| t.string).collect();
    Protector::new(eta, mode, &strings)?.apply(plan)
}

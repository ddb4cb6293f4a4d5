//! Splitting `A(t) = L(t) + iH(t)` into the inner generators `k L(t) + H(t)`
//! and the deterministic LCHS reconstruction.
//!
//! The kernel identity needs `L ⪰ 0`. A constant shift `σ ≥ max(0, −λ_min L)`
//! is applied exactly: `𝒯e^{−∫A} = e^{σΔ} Σ_j c_j e^{−i k_j σ Δ} U_j` with
//! `U_j = 𝒯e^{−i∫(k_j L + H)}`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::evolution::time_ordered_propagator;
use crate::linalg::{hermitian_eigen, DenseOperator, C64};
use crate::pauli::{PauliString, PauliSum, WeightedPauli};
use crate::quadrature::{build_grid, KernelParams, QuadratureGrid};
use crate::schedule::{Schedule, ScheduledTerm, TimeDependentGenerator};

/// Largest system for which the shift is found by dense diagonalization.
pub const EXACT_SHIFT_QUBITS: usize = 8;

/// How the shift `σ` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShiftPolicy {
    /// Dense `λ_min(L(t))` on sample times (falls back to `Bound` above [`EXACT_SHIFT_QUBITS`]).
    Exact,
    /// Coefficient bound `λ_min(L) ≥ ℓ_I − ‖ℓ‖₁`.
    Bound,
    /// User-supplied shift; must still make `L + σ ⪰ 0`.
    Fixed(f64),
}

/// One scheduled contribution `(k·dissipative + coherent)·s(t)` to an inner coefficient.
#[derive(Clone, Debug)]
pub struct InnerPart {
    pub dissipative: f64,
    pub coherent: f64,
    pub schedule: Schedule,
}

impl InnerPart {
    fn value(&self, k: f64, t: f64) -> f64 {
        (k * self.dissipative + self.coherent) * self.schedule.value(t)
    }
}

/// A Pauli string of `kL(t) + H(t)` with its scheduled parts.
#[derive(Clone, Debug)]
pub struct InnerTerm {
    pub string: PauliString,
    pub parts: Vec<InnerPart>,
}

impl InnerTerm {
    /// Real coefficient of the string in `kL(t) + H(t)`.
    pub fn coeff(&self, k: f64, t: f64) -> f64 {
        self.parts.iter().map(|p| p.value(k, t)).sum()
    }

    /// Parts of this term at fixed `k`, as `(coefficient, schedule)` pairs.
    pub fn at_k(&self, k: f64) -> Vec<(f64, Schedule)> {
        self.parts
            .iter()
            .map(|p| (k * p.dissipative + p.coherent, p.schedule.clone()))
            .filter(|(c, _)| *c != 0.0)
            .collect()
    }
}

/// `A(t) = L(t) + iH(t)` grouped by Pauli string, plus the shift.
#[derive(Clone, Debug)]
pub struct LchsSplit {
    n: usize,
    t_final: f64,
    terms: Vec<InnerTerm>,
    identity: Vec<InnerPart>,
    shift: f64,
    norm_l: f64,
}

fn sample_times(g: &TimeDependentGenerator) -> Vec<f64> {
    if g.is_time_independent() {
        alloc::vec![0.0]
    } else {
        (0..=32).map(|i| g.t_final() * i as f64 / 32.0).collect()
    }
}

impl LchsSplit {
    pub fn new(g: &TimeDependentGenerator, policy: ShiftPolicy) -> Result<Self> {
        let mut terms: Vec<InnerTerm> = Vec::new();
        let mut identity = Vec::new();
        for ScheduledTerm { coeff, string, schedule } in g.terms() {
            let part = InnerPart { dissipative: coeff.re, coherent: coeff.im, schedule: schedule.clone() };
            if string.is_identity() {
                identity.push(part);
            } else if let Some(t) = terms.iter_mut().find(|t| t.string == *string) {
                t.parts.push(part);
            } else {
                terms.push(InnerTerm { string: *string, parts: alloc::vec![part] });
            }
        }
        let mut split = Self { n: g.qubits(), t_final: g.t_final(), terms, identity, shift: 0.0, norm_l: 0.0 };
        let times = sample_times(g);
        let (shift, norm_l) = match policy {
            ShiftPolicy::Exact if split.n <= EXACT_SHIFT_QUBITS => split.spectral_shift(&times)?,
            ShiftPolicy::Exact | ShiftPolicy::Bound => split.bound_shift(&times),
            ShiftPolicy::Fixed(s) => {
                let (needed, _) = split.bound_shift(&times);
                if !(s.is_finite() && s >= 0.0) {
                    bail!(Parameter, "shift must be finite and non-negative, got {s}");
                }
                let (_, hi) = split.bound_range(&times);
                if split.n <= EXACT_SHIFT_QUBITS {
                    let (exact, _) = split.spectral_shift(&times)?;
                    if s + 1e-12 < exact {
                        bail!(Parameter, "shift {s} leaves L + shift indefinite (needs {exact})");
                    }
                } else if s < needed {
                    bail!(Parameter, "shift {s} is below the certified bound {needed}");
                }
                (s, hi + s)
            }
        };
        split.shift = shift;
        split.norm_l = norm_l;
        Ok(split)
    }

    fn dissipative_at(&self, t: f64) -> PauliSum {
        let mut out: Vec<WeightedPauli> = self
            .terms
            .iter()
            .map(|term| WeightedPauli::real(term.parts.iter().map(|p| p.dissipative * p.schedule.value(t)).sum(), term.string))
            .collect();
        let id: f64 = self.identity.iter().map(|p| p.dissipative * p.schedule.value(t)).sum();
        out.push(WeightedPauli::real(id, PauliString::identity(self.n)));
        PauliSum::new(self.n, out).expect("strings share the qubit count")
    }

    /// `(min_t ℓ_I − ‖ℓ‖₁, max_t ℓ_I + ‖ℓ‖₁)` over the sample times.
    fn bound_range(&self, times: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in times {
            let l = self.dissipative_at(t);
            let (id, rest) = l.terms().iter().fold((0.0, 0.0), |(id, rest), w| {
                if w.string.is_identity() {
                    (id + w.coeff.re, rest)
                } else {
                    (id, rest + w.coeff.norm())
                }
            });
            lo = lo.min(id - rest);
            hi = hi.max(id + rest);
        }
        (lo, hi)
    }

    fn bound_shift(&self, times: &[f64]) -> (f64, f64) {
        let (lo, hi) = self.bound_range(times);
        let shift = (-lo).max(0.0);
        (shift, (hi + shift).max(0.0))
    }

    fn spectral_shift(&self, times: &[f64]) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in times {
            let (vals, _) = hermitian_eigen(&self.dissipative_at(t).to_dense()?);
            lo = lo.min(vals[0]);
            hi = hi.max(vals[vals.len() - 1]);
        }
        // A little slack keeps L + σ ⪰ 0 against eigenvalue round-off and
        // interpolation between the sample times.
        let slack = if times.len() > 1 { 1e-3 * (hi - lo).abs() } else { 0.0 };
        let shift = (-lo + slack).max(0.0);
        let shift = if shift < 1e-13 { 0.0 } else { shift };
        Ok((shift, (hi + shift).max(0.0)))
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn terms(&self) -> &[InnerTerm] {
        &self.terms
    }

    /// Identity parts, applied as exact phases rather than sampled.
    pub fn identity_parts(&self) -> &[InnerPart] {
        &self.identity
    }

    /// Shift `σ` making `L + σ ⪰ 0`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Bound on `sup_t ‖L(t) + σ‖` used for the panel width.
    pub fn norm_l(&self) -> f64 {
        self.norm_l
    }

    /// Scalar factor multiplying node `k` over an interval of length `dt`:
    /// `e^{σ dt} e^{−i k σ dt}`.
    pub fn node_factor(&self, k: f64, dt: f64) -> C64 {
        C64::from_polar((self.shift * dt).exp(), -k * self.shift * dt)
    }

    /// Phase part `e^{−i k σ dt}` of [`Self::node_factor`].
    pub fn node_phase(&self, k: f64, dt: f64) -> C64 {
        C64::from_polar(1.0, -k * self.shift * dt)
    }

    /// Quadrature grid whose discretization error, after the `e^{σT}`
    /// amplification, stays within `eps`.
    pub fn grid(&self, params: &KernelParams, eps: f64) -> Result<QuadratureGrid> {
        if !(eps > 0.0 && eps < 1.0) {
            bail!(Parameter, "eps must lie in (0, 1), got {eps}");
        }
        if self.t_final == 0.0 || self.norm_l == 0.0 {
            return Ok(QuadratureGrid::trivial());
        }
        build_grid(params, eps * (-self.shift * self.t_final).exp(), self.t_final, self.norm_l)
    }

    /// `kL(t) + H(t)` written as an ODE generator `i(kL + H)`, identity included.
    pub fn inner_generator(&self, k: f64) -> Result<TimeDependentGenerator> {
        let mut out = Vec::new();
        for term in &self.terms {
            for (c, s) in term.at_k(k) {
                out.push(ScheduledTerm { coeff: C64::new(0.0, c), string: term.string, schedule: s });
            }
        }
        for p in &self.identity {
            let c = k * p.dissipative + p.coherent;
            if c != 0.0 {
                out.push(ScheduledTerm { coeff: C64::new(0.0, c), string: PauliString::identity(self.n), schedule: p.schedule.clone() });
            }
        }
        TimeDependentGenerator::new(self.n, out, self.t_final)
    }

    /// Exact inner unitary `𝒯exp(−i∫_{t0}^{t1} (kL + H))`.
    pub fn inner_unitary(&self, k: f64, t0: f64, t1: f64, tol: f64) -> Result<DenseOperator> {
        time_ordered_propagator(&self.inner_generator(k)?, t0, t1, tol)
    }

    /// Deterministic `Σ_j c_j e^{σT} e^{−ik_jσT} U_j(0, T)`.
    pub fn reconstruct(&self, grid: &QuadratureGrid, tol: f64) -> Result<DenseOperator> {
        let mut out = DenseOperator::zeros(self.dim());
        for (&k, &c) in grid.nodes.iter().zip(&grid.weights) {
            let u = self.inner_unitary(k, 0.0, self.t_final, tol)?;
            out.axpy(c * self.node_factor(k, self.t_final), &u);
        }
        Ok(out)
    }

    /// Effective LCU weights for the full interval, shift factors included.
    pub fn effective_weights(&self, grid: &QuadratureGrid) -> Vec<C64> {
        grid.nodes.iter().zip(&grid.weights).map(|(&k, &c)| c * self.node_factor(k, self.t_final)).collect()
    }
}

//! Time-dependent generators `A(t) = Σ_l α_l s_l(t) P_l` and source terms
//! `b(t) = Σ_m s_m(t) v_m`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;


use crate::error::{bail, Result};
use crate::linalg::{StateVector, C64};
use crate::pauli::{PauliString, PauliSum, WeightedPauli};

/// Real scalar envelope multiplying a coefficient.
#[derive(Clone)]
pub enum Schedule {
    Constant,
    /// `Σ_k a_k t^k`.
    Polynomial(Vec<f64>),
    /// `exp(rate · t)`.
    Exponential { rate: f64 },
    /// `offset + amplitude · sin(omega · t + phase)`.
    Sinusoid { offset: f64, amplitude: f64, omega: f64, phase: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Schedule {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::Polynomial(a) => a.iter().rev().fold(0.0, |acc, &c| acc * t + c),
            Self::Exponential { rate } => (rate * t).exp(),
            Self::Sinusoid { offset, amplitude, omega, phase } => offset + amplitude * (omega * t + phase).sin(),
            Self::Custom(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant => true,
            Self::Polynomial(a) => a.iter().skip(1).all(|&c| c == 0.0),
            Self::Exponential { rate } => *rate == 0.0,
            Self::Sinusoid { amplitude, omega, .. } => *amplitude == 0.0 || *omega == 0.0,
            Self::Custom(_) => false,
        }
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => write!(f, "Constant"),
            Self::Polynomial(a) => write!(f, "Polynomial({a:?})"),
            Self::Exponential { rate } => write!(f, "Exponential({rate})"),
            Self::Sinusoid { offset, amplitude, omega, phase } => {
                write!(f, "Sinusoid({offset}, {amplitude}, {omega}, {phase})")
            }
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScheduledTerm {
    pub coeff: C64,
    pub string: PauliString,
    pub schedule: Schedule,
}

impl ScheduledTerm {
    pub fn coeff_at(&self, t: f64) -> C64 {
        self.coeff * self.schedule.value(t)
    }
}

/// `A(t) = Σ_l coeff_l · schedule_l(t) · P_l` on `[0, T]`.
#[derive(Clone, Debug)]
pub struct TimeDependentGenerator {
    n: usize,
    terms: Vec<ScheduledTerm>,
    t_final: f64,
}

impl TimeDependentGenerator {
    pub fn new(n: usize, terms: Vec<ScheduledTerm>, t_final: f64) -> Result<Self> {
        if !(t_final >= 0.0 && t_final.is_finite()) {
            bail!(Parameter, "total time must be finite and non-negative, got {t_final}");
        }
        for t in &terms {
            if t.string.qubits() != n {
                bail!(Dimension, "term {} has {} qubits, expected {n}", t.string, t.string.qubits());
            }
        }
        let g = Self { n, terms, t_final };
        for k in 0..=16 {
            let t = t_final * k as f64 / 16.0;
            if g.terms.iter().any(|term| !term.schedule.value(t).is_finite()) {
                bail!(Parameter, "schedule is not finite at t = {t}");
            }
        }
        Ok(g)
    }

    /// Constant-in-time generator.
    pub fn constant(a: &PauliSum, t_final: f64) -> Result<Self> {
        let terms = a
            .terms()
            .iter()
            .map(|t| ScheduledTerm { coeff: t.coeff, string: t.string, schedule: Schedule::Constant })
            .collect();
        Self::new(a.qubits(), terms, t_final)
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

    pub fn terms(&self) -> &[ScheduledTerm] {
        &self.terms
    }

    pub fn with_t_final(&self, t_final: f64) -> Result<Self> {
        Self::new(self.n, self.terms.clone(), t_final)
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.schedule.is_constant())
    }

    pub fn at(&self, t: f64) -> PauliSum {
        let terms = self.terms.iter().map(|term| WeightedPauli::new(term.coeff_at(t), term.string)).collect();
        PauliSum::new(self.n, terms).expect("validated at construction")
    }

    /// Multiplies every coefficient by `s` (e.g. `i` to switch conventions).
    pub fn scale(&self, s: C64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| ScheduledTerm { coeff: t.coeff * s, string: t.string, schedule: t.schedule.clone() })
            .collect();
        Self { n: self.n, terms, t_final: self.t_final }
    }

    /// Coefficient-norm profile `t ↦ ‖α(t)‖₁`.
    pub fn l1_at(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.coeff_at(t).norm()).sum()
    }
}

/// Inhomogeneous term `b(t) = Σ_m s_m(t) v_m`.
#[derive(Clone, Debug)]
pub struct Source {
    components: Vec<(StateVector, Schedule)>,
}

impl Source {
    pub fn new(components: Vec<(StateVector, Schedule)>) -> Result<Self> {
        if let Some((first, _)) = components.first() {
            if components.iter().any(|(v, _)| v.dim() != first.dim()) {
                bail!(Dimension, "source components have different dimensions");
            }
        }
        Ok(Self { components })
    }

    pub fn constant(v: StateVector) -> Self {
        Self { components: alloc::vec![(v, Schedule::Constant)] }
    }

    pub fn dim(&self) -> Option<usize> {
        self.components.first().map(|(v, _)| v.dim())
    }

    pub fn at(&self, t: f64, dim: usize) -> StateVector {
        let mut out = StateVector::zeros(dim);
        for (v, s) in &self.components {
            out.axpy(C64::new(s.value(t), 0.0), v);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

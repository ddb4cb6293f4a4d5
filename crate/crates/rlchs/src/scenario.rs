//! Model, initial state, symmetry and observables derived from a config.

use rlchs_core::linalg::{DenseOperator, StateVector};
use rlchs_core::models::{build_hn, build_tfim, global_spin, magnetization, total_current, HnParams, TfimParams};
use rlchs_core::pauli::{PauliString, PauliSum};
use rlchs_core::schedule::TimeDependentGenerator;
use rlchs_core::symmetry::{hn_intertwiner, recursive_eta, Monomial, ParityKind, ParitySpec, ProtectionMode, Protector};

use crate::config::{ExperimentConfig, InitialState, ModelKind, ObservableKind, Protection};
use crate::AppError;

/// Everything an experiment needs about the physical problem.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub kind: ModelKind,
    pub operator: PauliSum,
    pub generator: TimeDependentGenerator,
    pub u0: StateVector,
    /// Unitary monomial symmetry of every inner Hamiltonian `kL + H`.
    pub symmetry: DenseOperator,
    /// Conserved quadratic form `η` with `ηA = A†η`.
    pub eta: DenseOperator,
    /// Trace observables in CSV column order; `current` only for HN.
    pub observables: Vec<(ObservableKind, PauliSum)>,
    pub hn: Option<HnParams>,
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, AppError> {
        let m = &cfg.model;
        let n = m.sites;
        if n > 12 {
            return Err(AppError::Usage(format!("sites = {n} exceeds the 12-site limit of the dense oracle")));
        }
        let dim = 1usize << n;
        let u0 = match m.initial {
            InitialState::Zero => StateVector::basis(dim, 0),
            InitialState::Neel => StateVector::basis(dim, (0..n).filter(|q| q % 2 == 1).map(|q| 1usize << (n - 1 - q)).sum()),
            InitialState::Basis(b) if b < dim => StateVector::basis(dim, b),
            InitialState::Basis(b) => return Err(AppError::Usage(format!("initial basis index {b} outside 0..{dim}"))),
        };
        let mut observables = vec![(ObservableKind::Magnetization, magnetization(n)), (ObservableKind::GlobalSpin, global_spin(n))];
        let (operator, symmetry, eta, hn) = match m.kind {
            ModelKind::Tfim => {
                let a = build_tfim(&TfimParams { n, j: m.coupling, g: m.field, gamma: m.gamma })?;
                let symmetry = ParitySpec::new(ParityKind::Reflection, n).dense()?;
                let eta = recursive_eta(&a.to_dense()?, &ParitySpec::new(ParityKind::SpinFlip, n), 0.0, 2)?.eta;
                (a, symmetry, eta, None)
            }
            ModelKind::Hn => {
                let p = HnParams { l: n, j: m.coupling, gamma: m.gamma, v: m.potential };
                let a = build_hn(&p)?;
                let eta = hn_intertwiner(&p)?.intertwiner.eta;
                observables.push((ObservableKind::Current, total_current(&p)));
                (a, Monomial::quarter_turn(n).to_dense(), eta, Some(p))
            }
        };
        let generator = TimeDependentGenerator::constant(&m.dynamics.generator(&operator), m.t_final)?;
        Ok(Self { kind: m.kind, operator, generator, u0, symmetry, eta, observables, hn })
    }

    pub fn qubits(&self) -> usize {
        self.operator.qubits()
    }

    pub fn observable(&self, kind: ObservableKind) -> Result<&PauliSum, AppError> {
        self.observables
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, o)| o)
            .ok_or_else(|| AppError::Usage("observable not available for this model".into()))
    }

    pub fn dense_observables(&self) -> Result<Vec<DenseOperator>, AppError> {
        Ok(self.observables.iter().map(|(_, o)| o.to_dense()).collect::<Result<_, _>>()?)
    }

    /// Protector over the inner Pauli strings `strings`, or `None` for the
    /// unprotected sampler.
    pub fn protector(&self, mode: Protection, window: usize, strings: &[PauliString]) -> Result<Option<Protector>, AppError> {
        let built = match mode {
            Protection::None => return Ok(None),
            Protection::Paired => Protector::new(&self.symmetry, ProtectionMode::Paired, strings)?,
            Protection::PairedLiteral => Protector::new(&self.symmetry, ProtectionMode::PairedLiteral, strings)?,
            Protection::Alternate => {
                Protector::new(&self.eta, ProtectionMode::Alternate { window, state: self.u0.clone() }, strings)?
            }
        };
        Ok(Some(built))
    }
}

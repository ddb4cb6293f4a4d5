//! Fast invariant suite behind `rlchs validate`.

use rlchs_core::cqdrift::{channel_error, required_segments, CqdriftPlan};
use rlchs_core::evolution::matrix_exponential;
use rlchs_core::lcu::LcuProblem;
use rlchs_core::lchs::{LchsSplit, ShiftPolicy};
use rlchs_core::linalg::{StateVector, I, ONE};
use rlchs_core::models::{build_hn, build_tfim, Dynamics, HnParams, TfimParams};
use rlchs_core::pauli::PauliSum;
use rlchs_core::quadrature::{build_grid, integrate_normalization, normalization_constant, KernelParams, QuadratureGrid};
use rlchs_core::schedule::TimeDependentGenerator;
use rlchs_core::symmetry::{conserved_drift, hn_intertwiner, pt_check, recursive_eta, ParityKind, ParitySpec};

/// Outcome of one invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = rlchs_core::error::Result<(bool, String)>;

fn tfim_operator(n: usize, gamma: f64) -> rlchs_core::error::Result<PauliSum> {
    build_tfim(&TfimParams { n, j: 1.0, g: 0.5, gamma })
}

fn kernel_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for beta in [0.3, 0.5, 0.8] {
        worst = worst.max((normalization_constant(beta)? - integrate_normalization(beta)?).abs());
    }
    Ok((worst <= 1e-8, format!("max |C_beta - integral| = {worst:.2e}")))
}

fn sum_rule() -> Outcome {
    let p = KernelParams::default();
    let mut worst: f64 = 0.0;
    for eps in [1e-2, 1e-3] {
        let g = build_grid(&p, eps, 1.0, 1.0)?;
        worst = worst.max((g.weight_sum() - ONE).norm() / eps);
    }
    Ok((worst <= 1.0, format!("max |sum c - 1| / eps = {worst:.3}")))
}

fn reconstruction() -> Outcome {
    let a = tfim_operator(3, 0.3)?;
    let g = TimeDependentGenerator::constant(&Dynamics::Schrodinger.generator(&a), 1.0)?;
    let split = LchsSplit::new(&g, ShiftPolicy::Exact)?;
    let grid = split.grid(&KernelParams::default(), 1e-2)?;
    let err = split.reconstruct(&grid, 1e-12)?.sub(&matrix_exponential(&g.at(0.0).to_dense()?, -1.0)?).spectral_norm();
    Ok((err <= 1e-2, format!("||sum c U - e^(-AT)|| = {err:.2e} over {} nodes", grid.len())))
}

fn exhaustive_lcu() -> Outcome {
    let a = tfim_operator(3, 0.3)?;
    let g = TimeDependentGenerator::constant(&a, 1.0)?;
    let split = LchsSplit::new(&g, ShiftPolicy::Exact)?;
    let grid = QuadratureGrid::with_geometry(&KernelParams::default(), 6.0, 4, 6);
    let p = LcuProblem::with_grid(split, grid, None, &StateVector::uniform(8), 1e-3)?;
    let us = p.exact_unitaries(1e-12)?;
    let diff = p.deterministic_homogeneous(&us).distance(&p.exhaustive_homogeneous(&us)?);
    Ok((diff <= 1e-12, format!("exhaustive vs deterministic = {diff:.2e}")))
}

fn cqdrift_bound() -> Outcome {
    let h = PauliSum::from_labels(&[(ONE, "X"), (ONE * 0.5, "Z")])?;
    let plan = CqdriftPlan::from_hermitian(&h, 1.0, 64, 3)?;
    let exact = matrix_exponential(&h.scale(I).to_dense()?, -1.0)?;
    let err = channel_error(&plan, &exact, 200)?;
    let bound = 4.0 * plan.lambda().powi(2) / 64.0;
    Ok((err <= bound, format!("trace distance {err:.3e} <= {bound:.3e}")))
}

fn symmetry() -> Outcome {
    let a = tfim_operator(4, 0.3)?;
    let pt = pt_check(&a, &ParitySpec::new(ParityKind::SpinFlip, 4))?;
    let eta = recursive_eta(&a.to_dense()?, &ParitySpec::new(ParityKind::SpinFlip, 4), 0.0, 2)?;
    let p = HnParams { l: 4, j: 1.0, gamma: 0.3, v: 0.5 };
    let gauge = hn_intertwiner(&p)?;
    let hn = build_hn(&p)?.to_dense()?;
    let ok = pt <= 1e-12
        && (gauge.kappa + 0.30952).abs() <= 1e-5
        && (gauge.hopping - 0.95394).abs() <= 1e-5
        && gauge.intertwiner.residual(&hn) <= 1e-10
        && eta.residual(&a.to_dense()?) <= 1e-8 * a.to_dense()?.spectral_norm().max(1.0).powi(2);
    Ok((ok, format!("PT {pt:.1e}, kappa {:.5}, hopping {:.5}", gauge.kappa, gauge.hopping)))
}

fn conservation() -> Outcome {
    let a = tfim_operator(4, 0.3)?;
    let g = TimeDependentGenerator::constant(&Dynamics::Schrodinger.generator(&a), 2.0)?;
    let eta = recursive_eta(&a.to_dense()?, &ParitySpec::new(ParityKind::SpinFlip, 4), 0.0, 2)?.eta;
    let d = conserved_drift(&eta, &g, &StateVector::basis(16, 0), 2.0, 1e-12)?;
    Ok((d.value <= 1e-8, format!("eta drift {:.2e}", d.value)))
}

fn resources() -> Outcome {
    let r = required_segments(1.0, 0.01)?;
    Ok((r == 400, format!("r(lambda = 1, eps = 0.01) = {r}")))
}

/// Runs every check; a check that errors counts as failed.
pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Outcome); 8] = [
        ("kernel normalization", kernel_identity),
        ("grid sum rule", sum_rule),
        ("deterministic reconstruction", reconstruction),
        ("exhaustive outer sampling", exhaustive_lcu),
        ("c-qdrift channel bound", cqdrift_bound),
        ("symmetry machinery", symmetry),
        ("eta conservation", conservation),
        ("segment count", resources),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check { name, passed: false, detail: e.to_string() },
        })
        .collect()
}

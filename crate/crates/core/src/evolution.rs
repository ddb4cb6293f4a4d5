//! Exact-evolution oracles for `du/dt = -A(t) u + b(t)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use crate::error::{bail, Result};
use crate::linalg::{expm, DenseOperator, StateVector, C64};
use crate::ode::{integrate, OdeOptions};
use crate::pauli::check_cap;
use crate::schedule::{Source, TimeDependentGenerator};

/// `l = (a + a†)/2` and `h = (a − a†)/(2i)`, so that `a = l + i h`.
pub fn split_hermitian(a: &DenseOperator) -> (DenseOperator, DenseOperator) {
    let adj = a.adjoint();
    let l = a.add(&adj).scale_real(0.5);
    let h = a.sub(&adj).scale(C64::new(0.0, -0.5));
    (l, h)
}

/// `exp(a · t)`.
pub fn matrix_exponential(a: &DenseOperator, t: f64) -> Result<DenseOperator> {
    expm(&a.scale_real(t))
}

const MAX_LEVELS: usize = 14;

fn midpoint_product(g: &TimeDependentGenerator, t0: f64, t1: f64, steps: usize) -> Result<DenseOperator> {
    let dt = (t1 - t0) / steps as f64;
    let mut u = DenseOperator::identity(g.dim());
    for k in 0..steps {
        let mid = t0 + (k as f64 + 0.5) * dt;
        let step = expm(&g.at(mid).to_dense()?.scale_real(-dt))?;
        u = step.matmul(&u);
    }
    Ok(u)
}

/// Time-ordered propagator `𝒯 exp(-∫_{t0}^{t1} A(t) dt)`.
///
/// Runs the exponential-midpoint product at 1, 2, 4, … steps and extrapolates
/// in even powers of the step (Romberg tableau) until successive diagonal
/// entries agree to `tol` relative to the propagator size.
pub fn time_ordered_propagator(g: &TimeDependentGenerator, t0: f64, t1: f64, tol: f64) -> Result<DenseOperator> {
    if t1 < t0 {
        bail!(Parameter, "propagator needs t0 <= t1, got {t0} > {t1}");
    }
    check_cap(g.qubits())?;
    if t1 == t0 {
        return Ok(DenseOperator::identity(g.dim()));
    }
    if g.is_time_independent() {
        return matrix_exponential(&g.at(t0).to_dense()?, -(t1 - t0));
    }
    let mut prev_row: Vec<DenseOperator> = Vec::new();
    let mut best: Option<DenseOperator> = None;
    for level in 0..=MAX_LEVELS {
        let mut row = Vec::with_capacity(level + 1);
        row.push(midpoint_product(g, t0, t1, 1 << level)?);
        for j in 1..=level.min(6) {
            let factor = 4f64.powi(j as i32);
            let lo = &prev_row[j - 1];
            let hi = &row[j - 1];
            row.push(hi.add(&hi.sub(lo).scale_real(1.0 / (factor - 1.0))));
        }
        let current = row.last().expect("non-empty").clone();
        if let Some(prev) = &best {
            let size = current.frobenius_norm().max(1.0);
            if current.sub(prev).frobenius_norm() <= tol * size {
                return Ok(current);
            }
        }
        best = Some(current);
        prev_row = row;
    }
    bail!(Numerical, "time-ordered propagator did not reach tolerance {tol:e} within {} steps", 1 << MAX_LEVELS)
}

/// Reference solution of `du/dt = -A(t) u + b(t)`, `u(0) = u0`, at time `t_final`.
pub fn duhamel_solution(
    g: &TimeDependentGenerator,
    b: Option<&Source>,
    u0: &StateVector,
    t_final: f64,
    tol: f64,
) -> Result<StateVector> {
    let dim = g.dim();
    if u0.dim() != dim {
        bail!(Dimension, "initial state has dimension {}, generator {}", u0.dim(), dim);
    }
    if let Some(src) = b {
        if src.dim().is_some_and(|d| d != dim) {
            bail!(Dimension, "source dimension does not match generator dimension {dim}");
        }
    }
    let rhs = |t: f64, y: &[C64], out: &mut [C64]| {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for term in g.terms() {
            term.string.apply_add(-term.coeff_at(t), y, out);
        }
        if let Some(src) = b {
            for (o, v) in out.iter_mut().zip(src.at(t, dim).amplitudes()) {
                *o += v;
            }
        }
    };
    let y = integrate(rhs, 0.0, t_final, u0.amplitudes(), OdeOptions::with_tol(tol))?;
    Ok(StateVector::from_amplitudes(y))
}

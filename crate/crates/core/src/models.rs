//! Benchmark generators: the transverse-field Ising chain with an imaginary
//! longitudinal field and the interacting Hatano–Nelson chain.
//!
//! Both builders return the physical operator `A`. How it enters the ODE is
//! chosen by [`Dynamics`]: either literally (`du/dt = -A u`) or as a
//! Schrödinger equation (`i du/dt = A u`, i.e. ODE generator `iA`).

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::linalg::C64;
use crate::pauli::{PauliString, PauliSum, WeightedPauli};

/// How a physical operator becomes the generator of `du/dt = -G u`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Dynamics {
    /// `G = i A`; pseudo-Hermitian observables are conserved in this form.
    #[default]
    Schrodinger,
    /// `G = A`.
    Dissipative,
}

impl Dynamics {
    pub fn generator(&self, a: &PauliSum) -> PauliSum {
        match self {
            Self::Schrodinger => a.scale(C64::new(0.0, 1.0)),
            Self::Dissipative => a.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TfimParams {
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub gamma: f64,
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        bail!(Parameter, "model parameters must be finite");
    }
    Ok(())
}

fn site(n: usize, q: usize, ch: char) -> PauliString {
    PauliString::on_sites(n, &[(q, ch)]).expect("site in range")
}

fn bond(n: usize, q: usize, a: char, b: char) -> PauliString {
    PauliString::on_sites(n, &[(q, a), (q + 1, b)]).expect("bond in range")
}

/// `A = -J Σ Z_i Z_{i+1} - g Σ X_i + iγ Σ Z_i` on an open chain.
pub fn build_tfim(p: &TfimParams) -> Result<PauliSum> {
    if p.n < 2 {
        bail!(Parameter, "TFIM needs at least 2 sites, got {}", p.n);
    }
    check_finite(&[p.j, p.g, p.gamma])?;
    let n = p.n;
    let mut terms = Vec::new();
    for i in 1..n {
        if p.j != 0.0 {
            terms.push(WeightedPauli::real(-p.j, bond(n, i, 'Z', 'Z')));
        }
    }
    for i in 1..=n {
        if p.g != 0.0 {
            terms.push(WeightedPauli::real(-p.g, site(n, i, 'X')));
        }
    }
    for i in 1..=n {
        if p.gamma != 0.0 {
            terms.push(WeightedPauli::new(C64::new(0.0, p.gamma), site(n, i, 'Z')));
        }
    }
    PauliSum::new(n, terms)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HnParams {
    pub l: usize,
    pub j: f64,
    pub gamma: f64,
    pub v: f64,
}

/// Hopping on bond `(j, j+1)` with forward amplitude `amp_fwd` (site `j` to
/// `j+1`) and backward amplitude `amp_bwd`.
///
/// Writing `amp_fwd = J + γ` and `amp_bwd = J − γ`, the result is
/// `(J/2)(X X + Y Y) − (iγ/2)(Y X − X Y)` on the bond.
pub fn jordan_wigner_hop(j: usize, amp_fwd: f64, amp_bwd: f64, l: usize) -> Result<PauliSum> {
    if j == 0 || j >= l {
        bail!(Parameter, "bond {j} outside 1..{l}");
    }
    check_finite(&[amp_fwd, amp_bwd])?;
    let sym = 0.5 * (amp_fwd + amp_bwd);
    let asym = 0.5 * (amp_fwd - amp_bwd);
    let mut terms = Vec::new();
    if sym != 0.0 {
        terms.push(WeightedPauli::real(sym / 2.0, bond(l, j, 'X', 'X')));
        terms.push(WeightedPauli::real(sym / 2.0, bond(l, j, 'Y', 'Y')));
    }
    if asym != 0.0 {
        terms.push(WeightedPauli::new(C64::new(0.0, -asym / 2.0), bond(l, j, 'Y', 'X')));
        terms.push(WeightedPauli::new(C64::new(0.0, asym / 2.0), bond(l, j, 'X', 'Y')));
    }
    PauliSum::new(l, terms)
}

/// Occupation `n_j = (1 + Z_j)/2`: site `j` is occupied when its qubit is `|0⟩`.
pub fn occupation(l: usize, j: usize) -> PauliSum {
    PauliSum::new(l, alloc::vec![
        WeightedPauli::real(0.5, PauliString::identity(l)),
        WeightedPauli::real(0.5, site(l, j, 'Z')),
    ])
    .expect("valid")
}

/// Bit mask of the computational-basis index that encodes site `j`.
pub fn site_bit(l: usize, j: usize) -> u64 {
    1u64 << (l - j)
}

/// Whether site `j` is occupied in basis state `b`.
pub fn is_occupied(l: usize, j: usize, b: u64) -> bool {
    b & site_bit(l, j) == 0
}

/// Interacting Hatano–Nelson chain, hopping plus `V Σ n_j n_{j+1}`.
pub fn build_hn(p: &HnParams) -> Result<PauliSum> {
    if p.l < 2 {
        bail!(Parameter, "Hatano-Nelson chain needs at least 2 sites, got {}", p.l);
    }
    check_finite(&[p.j, p.gamma, p.v])?;
    let l = p.l;
    let mut terms = Vec::new();
    for j in 1..l {
        terms.extend_from_slice(jordan_wigner_hop(j, p.j + p.gamma, p.j - p.gamma, l)?.terms());
    }
    if p.v != 0.0 {
        let quarter = p.v / 4.0;
        let mut diag = PauliSum::zero(l);
        for j in 1..l {
            diag = diag.add(&PauliSum::new(l, alloc::vec![
                WeightedPauli::real(quarter, PauliString::identity(l)),
                WeightedPauli::real(quarter, site(l, j, 'Z')),
                WeightedPauli::real(quarter, site(l, j + 1, 'Z')),
                WeightedPauli::real(quarter, bond(l, j, 'Z', 'Z')),
            ])?)?;
        }
        terms.extend_from_slice(diag.simplify(0.0).terms());
    }
    PauliSum::new(l, terms)
}

/// Average magnetization `Σ Z_i / n`.
pub fn magnetization(n: usize) -> PauliSum {
    let terms = (1..=n).map(|i| WeightedPauli::real(1.0 / n as f64, site(n, i, 'Z'))).collect();
    PauliSum::new(n, terms).expect("valid")
}

/// Global spin-flip parity `∏ X_i`.
pub fn global_spin(n: usize) -> PauliSum {
    let s = PauliString::from_masks(n, (1u64 << n) - 1, 0).expect("valid");
    PauliSum::new(n, alloc::vec![WeightedPauli::real(1.0, s)]).expect("valid")
}

/// Total particle number `Σ n_j`.
pub fn particle_number(l: usize) -> PauliSum {
    let mut s = PauliSum::zero(l);
    for j in 1..=l {
        s = s.add(&occupation(l, j)).expect("same size");
    }
    s.simplify(0.0)
}

/// Total bond current `Σ_j 2 Im(ψ_j^* A_{j,j+1} ψ_{j+1})`, generalized to
/// many-body states as `Σ_j (a/2)(Y_j X_{j+1} − X_j Y_{j+1})` with
/// `a = J − γ` the backward single-particle amplitude.
pub fn total_current(p: &HnParams) -> PauliSum {
    let l = p.l;
    let a = p.j - p.gamma;
    let mut terms = Vec::new();
    for j in 1..l {
        terms.push(WeightedPauli::real(a / 2.0, bond(l, j, 'Y', 'X')));
        terms.push(WeightedPauli::real(-a / 2.0, bond(l, j, 'X', 'Y')));
    }
    PauliSum::new(l, terms).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::prelude::rust_2021::*;
    use crate::linalg::ONE;

    #[test]
    fn tfim_examples() {
        let a = build_tfim(&TfimParams { n: 2, j: 1.0, g: 0.0, gamma: 0.0 }).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.terms()[0].string.to_string(), "ZZ");
        assert_eq!(a.terms()[0].coeff, -ONE);
        let a = build_tfim(&TfimParams { n: 5, j: 1.0, g: 0.5, gamma: 0.3 }).unwrap();
        assert_eq!(a.len(), 14);
        assert!((a.l1_norm() - 8.0).abs() < 1e-14);
        assert!(build_tfim(&TfimParams { n: 1, j: 1.0, g: 0.5, gamma: 0.3 }).is_err());
    }

    #[test]
    fn tfim_norm_bounds() {
        for n in [2usize, 3, 4] {
            let p = TfimParams { n, j: 1.0, g: 0.5, gamma: 0.3 };
            let a = build_tfim(&p).unwrap().to_dense().unwrap();
            let bound = p.gamma * n as f64 + p.j * (n - 1) as f64 + p.g * n as f64;
            assert!(a.spectral_norm() <= bound + 1e-12);
        }
        let herm = build_tfim(&TfimParams { n: 3, j: 1.0, g: 0.7, gamma: 0.0 }).unwrap().to_dense().unwrap();
        assert!(herm.hermiticity_residual() <= 1e-14);
    }

    #[test]
    fn hop_examples() {
        let h = jordan_wigner_hop(1, 1.0, 1.0, 2).unwrap();
        assert_eq!(h.len(), 2);
        assert!(h.terms().iter().all(|t| t.coeff == C64::new(0.5, 0.0)));
        let h = jordan_wigner_hop(1, 1.0, -1.0, 2).unwrap();
        let yx = h.terms().iter().find(|t| t.string.to_string() == "YX").unwrap();
        let xy = h.terms().iter().find(|t| t.string.to_string() == "XY").unwrap();
        assert_eq!(yx.coeff, C64::new(0.0, -0.5));
        assert_eq!(xy.coeff, C64::new(0.0, 0.5));
        assert!(jordan_wigner_hop(2, 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn hop_single_particle_block() {
        let (j, gamma) = (1.0, 0.3);
        let m = jordan_wigner_hop(1, j + gamma, j - gamma, 2).unwrap().to_dense().unwrap();
        // Basis index of "particle on site k" for two sites.
        let s1 = (0..4u64).find(|&b| is_occupied(2, 1, b) && !is_occupied(2, 2, b)).unwrap() as usize;
        let s2 = (0..4u64).find(|&b| !is_occupied(2, 1, b) && is_occupied(2, 2, b)).unwrap() as usize;
        let block = [[m[(s1, s1)], m[(s1, s2)]], [m[(s2, s1)], m[(s2, s2)]]];
        assert!(block[0][0].norm() < 1e-15 && block[1][1].norm() < 1e-15);
        assert!((block[0][1] - C64::new(j - gamma, 0.0)).norm() < 1e-15);
        assert!((block[1][0] - C64::new(j + gamma, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hn_properties() {
        let herm = build_hn(&HnParams { l: 2, j: 1.0, gamma: 0.0, v: 0.0 }).unwrap().to_dense().unwrap();
        assert!(herm.hermiticity_residual() < 1e-15);
        let a = build_hn(&HnParams { l: 2, j: 1.0, gamma: 0.3, v: 0.0 }).unwrap().to_dense().unwrap();
        assert!((a.sub(&a.adjoint()).spectral_norm() - 0.6).abs() < 1e-12);
        let p = HnParams { l: 5, j: 1.0, gamma: 0.3, v: 0.5 };
        let a = build_hn(&p).unwrap().to_dense().unwrap();
        let num = particle_number(5).to_dense().unwrap();
        assert!(a.matmul(&num).sub(&num.matmul(&a)).max_abs() < 1e-12);
        // Interaction is diagonal with V per adjacent occupied pair.
        let b = 0u64; // all sites occupied
        let diag = build_hn(&p).unwrap().to_dense().unwrap()[(b as usize, b as usize)];
        assert!((diag.re - 0.5 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn current_matches_amplitude_formula() {
        let p = HnParams { l: 3, j: 1.0, gamma: 0.3, v: 0.0 };
        let a = build_hn(&p).unwrap().to_dense().unwrap();
        let cur = total_current(&p).to_dense().unwrap();
        let idx: Vec<usize> = (1..=3)
            .map(|s| (0..8u64).find(|&b| (1..=3).all(|k| is_occupied(3, k, b) == (k == s))).unwrap() as usize)
            .collect();
        let amps = [C64::new(0.3, 0.1), C64::new(-0.5, 0.4), C64::new(0.2, -0.6)];
        let mut psi = alloc::vec![C64::new(0.0, 0.0); 8];
        for (k, &i) in idx.iter().enumerate() {
            psi[i] = amps[k];
        }
        let psi = crate::linalg::StateVector::from_amplitudes(psi);
        let expect: f64 = (0..2).map(|k| 2.0 * (amps[k].conj() * a[(idx[k], idx[k + 1])] * amps[k + 1]).im).sum();
        let got = psi.inner(&cur.apply(&psi));
        assert!((got.re - expect).abs() < 1e-14 && got.im.abs() < 1e-14);
        assert!(cur.hermiticity_residual() < 1e-15);
    }
}

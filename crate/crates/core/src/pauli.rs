//! Pauli strings and weighted sums of them.
//!
//! Qubit 1 is the most significant bit of a computational-basis index, so the
//! letter at position `q` (1-based) acts on bit `n - q`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;


use crate::error::{bail, Error, Result};
use crate::linalg::{DenseOperator, StateVector, C64, DENSE_QUBIT_CAP, ZERO};

/// Tensor product of single-qubit Paulis, stored as X and Z bit masks
/// (a `Y` sets both bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

/// Power of `i` as an index in `0..4`.
fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, x: 0, z: 0 }
    }

    /// Builds a string from bit masks over basis indices.
    pub fn from_masks(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > 63 {
            bail!(Dimension, "at most 63 qubits are supported, got {n}");
        }
        let full = (1u64 << n) - 1;
        if x & !full != 0 || z & !full != 0 {
            bail!(Dimension, "mask exceeds {n} qubits");
        }
        Ok(Self { n, x, z })
    }

    /// Parses letters such as `"XIZY"`; the first letter is qubit 1.
    pub fn parse(letters: &str) -> Result<Self> {
        let n = letters.chars().count();
        if n > 63 {
            bail!(Dimension, "at most 63 qubits are supported, got {n}");
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, ch) in letters.chars().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit
                }
                'Z' => z |= bit,
                other => bail!(Parameter, "invalid Pauli letter {other:?}"),
            }
        }
        Ok(Self { n, x, z })
    }

    /// String with `letter` on the given 1-based qubits and identity elsewhere.
    pub fn on_sites(n: usize, sites: &[(usize, char)]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &(q, ch) in sites {
            if q == 0 || q > n {
                bail!(Dimension, "qubit {q} outside 1..={n}");
            }
            let bit = 1u64 << (n - q);
            s.x &= !bit;
            s.z &= !bit;
            match ch {
                'I' => {}
                'X' => s.x |= bit,
                'Y' => {
                    s.x |= bit;
                    s.z |= bit
                }
                'Z' => s.z |= bit,
                other => bail!(Parameter, "invalid Pauli letter {other:?}"),
            }
        }
        Ok(s)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Letter acting on the 1-based qubit `q`.
    pub fn letter(&self, q: usize) -> char {
        let bit = 1u64 << (self.n - q);
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Phase picked up by basis state `b`: `P|b⟩ = phase(b) |b ⊕ x⟩`.
    #[inline]
    pub fn phase(&self, b: u64) -> C64 {
        let sign = if (b & self.z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        i_pow(self.y_count()) * sign
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Product `self · other = phase · string`.
    pub fn mul(&self, other: &Self) -> (C64, Self) {
        // Write each string as i^{y} X^x Z^z; moving Z^{z1} past X^{x2} costs (-1)^{z1·x2}.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones();
        let y_new = (x & z).count_ones();
        // i^k X^x Z^z = i^k i^{-y_new} (i^{y_new} X^x Z^z)
        let phase = i_pow((k + 4 * 64 - y_new) % 4);
        (phase, Self { n: self.n, x, z })
    }

    /// Applies the string to a state: `out = P ψ`.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let a = psi.amplitudes();
        let mut out = alloc::vec![ZERO; a.len()];
        for (b, amp) in a.iter().enumerate() {
            let b = b as u64;
            out[(b ^ self.x) as usize] = self.phase(b) * amp;
        }
        StateVector::from_amplitudes(out)
    }

    /// Accumulates `out += coeff · P ψ`.
    pub fn apply_add(&self, coeff: C64, psi: &[C64], out: &mut [C64]) {
        for (b, amp) in psi.iter().enumerate() {
            let b = b as u64;
            out[(b ^ self.x) as usize] += coeff * self.phase(b) * amp;
        }
    }

    /// In-place `ψ ← exp(-iθP) ψ = cos θ ψ - i sin θ Pψ`.
    pub fn rotate(&self, theta: f64, psi: &mut [C64]) {
        let (s, c) = theta.sin_cos();
        let ms = C64::new(0.0, -s);
        if self.x == 0 {
            let plus = C64::new(c, 0.0) + ms * self.phase(0).re;
            let minus = C64::new(c, 0.0) - ms * self.phase(0).re;
            for (b, amp) in psi.iter_mut().enumerate() {
                let even = (b as u64 & self.z).count_ones().is_multiple_of(2);
                *amp *= if even { plus } else { minus };
            }
            return;
        }
        let top = 1u64 << (63 - self.x.leading_zeros());
        for b in 0..psi.len() as u64 {
            if b & top != 0 {
                continue;
            }
            let partner = b ^ self.x;
            let (ib, ip) = (b as usize, partner as usize);
            let (vb, vp) = (psi[ib], psi[ip]);
            psi[ib] = vb * c + ms * self.phase(partner) * vp;
            psi[ip] = vp * c + ms * self.phase(b) * vb;
        }
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        check_cap(self.n)?;
        let dim = 1usize << self.n;
        let mut m = DenseOperator::zeros(dim);
        for b in 0..dim as u64 {
            m[((b ^ self.x) as usize, b as usize)] = self.phase(b);
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 1..=self.n {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

pub(crate) fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_QUBIT_CAP {
        return Err(Error::SizeLimit(alloc::format!(
            "{n} qubits exceeds the dense cap of {DENSE_QUBIT_CAP}"
        )));
    }
    Ok(())
}

/// Dense matrix of a Pauli string (see [`PauliString::to_dense`]).
pub fn pauli_to_dense(p: &PauliString) -> Result<DenseOperator> {
    p.to_dense()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedPauli {
    pub coeff: C64,
    pub string: PauliString,
}

impl WeightedPauli {
    pub fn new(coeff: C64, string: PauliString) -> Self {
        Self { coeff, string }
    }

    pub fn real(coeff: f64, string: PauliString) -> Self {
        Self { coeff: C64::new(coeff, 0.0), string }
    }
}

/// Linear combination of Pauli strings on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<WeightedPauli>,
    l1: f64,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new(), l1: 0.0 }
    }

    pub fn new(n: usize, terms: Vec<WeightedPauli>) -> Result<Self> {
        for t in &terms {
            if t.string.qubits() != n {
                bail!(Dimension, "term {} has {} qubits, expected {n}", t.string, t.string.qubits());
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                bail!(Parameter, "non-finite coefficient on {}", t.string);
            }
        }
        let l1 = terms.iter().map(|t| t.coeff.norm()).sum();
        Ok(Self { n, terms, l1 })
    }

    /// Parses `(coeff, letters)` pairs.
    pub fn from_labels(terms: &[(C64, &str)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(c, s)| PauliString::parse(s).map(|p| WeightedPauli::new(*c, p)))
            .collect::<Result<Vec<_>>>()?;
        let n = parsed.first().map_or(0, |t| t.string.qubits());
        Self::new(n, parsed)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn terms(&self) -> &[WeightedPauli] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient ℓ1 norm `Σ|α_l|`, an upper bound on the spectral norm.
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    /// Upper bound on the spectral norm of the assembled matrix.
    pub fn spectral_bound(&self) -> f64 {
        self.l1
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self.terms.iter().map(|t| WeightedPauli::new(t.coeff * s, t.string)).collect();
        Self { n: self.n, terms, l1: self.l1 * s.norm() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            bail!(Dimension, "adding sums on {} and {} qubits", self.n, other.n);
        }
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(self.n, terms)
    }

    /// Merges repeated strings and drops coefficients with modulus ≤ `tol`.
    pub fn simplify(&self, tol: f64) -> Self {
        let mut acc: BTreeMap<PauliString, C64> = BTreeMap::new();
        let mut order = Vec::new();
        for t in &self.terms {
            let e = acc.entry(t.string).or_insert_with(|| {
                order.push(t.string);
                ZERO
            });
            *e += t.coeff;
        }
        let terms: Vec<_> = order
            .into_iter()
            .filter_map(|s| {
                let c = acc[&s];
                (c.norm() > tol).then_some(WeightedPauli::new(c, s))
            })
            .collect();
        let l1 = terms.iter().map(|t| t.coeff.norm()).sum();
        Self { n: self.n, terms, l1 }
    }

    pub fn adjoint(&self) -> Self {
        let terms = self.terms.iter().map(|t| WeightedPauli::new(t.coeff.conj(), t.string)).collect();
        Self { n: self.n, terms, l1: self.l1 }
    }

    /// `(A + A†)/2` and `(A - A†)/(2i)`: both have real coefficients.
    pub fn split_hermitian(&self) -> (Self, Self) {
        let l = self.terms.iter().map(|t| WeightedPauli::real(t.coeff.re, t.string)).collect();
        let h = self.terms.iter().map(|t| WeightedPauli::real(t.coeff.im, t.string)).collect();
        (
            Self::new(self.n, l).expect("same shape").simplify(0.0),
            Self::new(self.n, h).expect("same shape").simplify(0.0),
        )
    }

    pub fn is_hermitian(&self) -> bool {
        self.simplify(0.0).terms.iter().all(|t| t.coeff.im == 0.0)
    }

    /// `A ψ` without materializing `A`.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let mut out = alloc::vec![ZERO; psi.dim()];
        for t in &self.terms {
            t.string.apply_add(t.coeff, psi.amplitudes(), &mut out);
        }
        StateVector::from_amplitudes(out)
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        check_cap(self.n)?;
        let dim = 1usize << self.n;
        let mut m = DenseOperator::zeros(dim);
        for t in &self.terms {
            for b in 0..dim as u64 {
                m[((b ^ t.string.x_mask()) as usize, b as usize)] += t.coeff * t.string.phase(b);
            }
        }
        Ok(m)
    }

    /// Compact human-readable form, e.g. `"1*ZZ + (0+0.3i)*ZI"`.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            if t.coeff.im == 0.0 {
                s.push_str(&alloc::format!("{}*{}", t.coeff.re, t.string));
            } else {
                s.push_str(&alloc::format!("({}{:+}i)*{}", t.coeff.re, t.coeff.im, t.string));
            }
        }
        s
    }
}

/// Dense matrix of a Pauli sum (see [`PauliSum::to_dense`]).
pub fn assemble_dense(s: &PauliSum) -> Result<DenseOperator> {
    s.to_dense()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::prelude::rust_2021::*;
    use crate::linalg::ONE;
    use proptest::prelude::*;

    fn single(ch: char) -> [[C64; 2]; 2] {
        let (o, z, i) = (ONE, ZERO, C64::new(0.0, 1.0));
        match ch {
            'I' => [[o, z], [z, o]],
            'X' => [[z, o], [o, z]],
            'Y' => [[z, -i], [i, z]],
            _ => [[o, z], [z, -o]],
        }
    }

    /// Kronecker product by explicit index arithmetic, independent of the mask logic.
    fn brute_force(letters: &str) -> DenseOperator {
        let ls: Vec<char> = letters.chars().collect();
        let n = ls.len();
        DenseOperator::from_fn(1 << n, |r, c| {
            let mut v = ONE;
            for (q, ch) in ls.iter().enumerate() {
                let shift = n - 1 - q;
                v *= single(*ch)[(r >> shift) & 1][(c >> shift) & 1];
            }
            v
        })
    }

    #[test]
    fn dense_matches_brute_force() {
        for s in ["I", "Z", "XZ", "YX", "ZYI", "XYZY"] {
            let p = PauliString::parse(s).unwrap();
            assert_eq!(p.to_dense().unwrap(), brute_force(s), "{s}");
            assert_eq!(p.to_string(), s);
        }
    }

    #[test]
    fn assemble_small_sum() {
        let s = PauliSum::from_labels(&[(ONE, "Z"), (ONE, "X")]).unwrap();
        let m = assemble_dense(&s).unwrap();
        let expect = DenseOperator::from_rows(&[&[ONE, ONE], &[ONE, -ONE]]).unwrap();
        assert_eq!(m, expect);
        assert_eq!(assemble_dense(&PauliSum::zero(2)).unwrap(), DenseOperator::zeros(4));
    }

    #[test]
    fn cap_is_enforced() {
        let p = PauliString::identity(DENSE_QUBIT_CAP + 1);
        assert!(matches!(p.to_dense(), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn mixed_lengths_rejected() {
        let terms = [(ONE, "Z"), (ONE, "XX")];
        assert!(matches!(PauliSum::from_labels(&terms), Err(Error::Dimension(_))));
    }

    fn letters(n: usize) -> impl Strategy<Value = String> {
        proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n)
            .prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn product_matches_dense(a in letters(3), b in letters(3)) {
            let (pa, pb) = (PauliString::parse(&a).unwrap(), PauliString::parse(&b).unwrap());
            let (ph, pc) = pa.mul(&pb);
            let lhs = brute_force(&a).matmul(&brute_force(&b));
            prop_assert!(lhs.sub(&pc.to_dense().unwrap().scale(ph)).max_abs() < 1e-14);
            let comm = lhs.sub(&brute_force(&b).matmul(&brute_force(&a))).max_abs() < 1e-14;
            prop_assert_eq!(comm, pa.commutes_with(&pb));
        }

        #[test]
        fn rotation_matches_dense(s in letters(3), theta in -3.0f64..3.0, seed in 0u64..1000) {
            let p = PauliString::parse(&s).unwrap();
            let amps: Vec<C64> = (0..8).map(|k| C64::new(((seed + k) as f64).sin(), ((3 * seed + k) as f64).cos())).collect();
            let mut psi = amps.clone();
            p.rotate(theta, &mut psi);
            let dense = p.to_dense().unwrap();
            let v = StateVector::from_amplitudes(amps);
            let expect = v.scale_real(theta.cos()).sub(&dense.apply(&v).scale(C64::new(0.0, theta.sin())));
            prop_assert!(StateVector::from_amplitudes(psi).distance(&expect) < 1e-13);
        }

        #[test]
        fn norm_bounded_by_l1(
            strings in proptest::collection::vec(letters(4), 1..6),
            coeffs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 6),
        ) {
            let terms: Vec<_> = strings.iter().zip(&coeffs)
                .map(|(s, (re, im))| WeightedPauli::new(C64::new(*re, *im), PauliString::parse(s).unwrap()))
                .collect();
            let sum = PauliSum::new(4, terms).unwrap();
            let dense = sum.to_dense().unwrap();
            prop_assert!(dense.spectral_norm() <= sum.l1_norm() * (1.0 + 1e-12) + 1e-12);
            let psi = StateVector::uniform(16);
            prop_assert!(sum.apply(&psi).distance(&dense.apply(&psi)) < 1e-12);
        }
    }
}

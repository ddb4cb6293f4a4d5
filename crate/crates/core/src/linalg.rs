//! Dense complex matrices and state vectors, with the handful of
//! factorizations the oracles need (Hermitian eigensolver, LU solve,
//! Padé matrix exponential).

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{bail, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest qubit count for which dense matrices are materialized.
pub const DENSE_QUBIT_CAP: usize = 14;

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<C64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            bail!(Dimension, "matrix rows must all have length {dim}");
        }
        Ok(Self { dim, data: rows.iter().flat_map(|r| r.iter().copied()).collect() })
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * dim + i] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |r, c| self.data[c * n + r].conj())
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |r, c| self.data[c * n + r])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add_identity(&self, s: C64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += s;
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        debug_assert_eq!(n, other.dim);
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            let orow = &mut out[r * n..(r + 1) * n];
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        debug_assert_eq!(self.dim, v.dim());
        let n = self.dim;
        let amps = (0..n)
            .map(|r| self.row(r).iter().zip(v.amplitudes()).fold(ZERO, |acc, (a, x)| acc + a * x))
            .collect();
        StateVector::from_amplitudes(amps)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |r, c| self[(r / b, c / b)] * other[(r % b, c % b)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|c| (0..n).map(|r| self.data[r * n + c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - self†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += (self.data[r * n + c] - self.data[c * n + r].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn spectral_norm(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        let gram = if self.hermiticity_residual() <= 1e-13 * self.max_abs().max(1e-300) {
            let (vals, _) = hermitian_eigen(self);
            return vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        } else {
            self.adjoint().matmul(self)
        };
        let (vals, _) = hermitian_eigen(&gram);
        vals.iter().copied().fold(0.0, f64::max).max(0.0).sqrt()
    }

    /// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
    pub fn hermitian_trace_norm(&self) -> f64 {
        let (vals, _) = hermitian_eigen(self);
        vals.iter().map(|v| v.abs()).sum()
    }
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for DenseOperator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

/// Unnormalized complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self { amps: vec![ZERO; dim] }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = ONE;
        v
    }

    /// Uniform superposition over all basis states (the `|+…+⟩` state).
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self { amps: vec![C64::new(a, 0.0); dim] }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self { amps: values.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unit vector in the same direction; a zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale_real(1.0 / n)
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps.iter().zip(&other.amps).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { amps: self.amps.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { amps: self.amps.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect() }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &Self) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += s * b;
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    /// `|self⟩⟨self|` as a dense matrix.
    pub fn projector(&self) -> DenseOperator {
        let n = self.dim();
        DenseOperator::from_fn(n, |r, c| self.amps[r] * self.amps[c].conj())
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the unitary whose columns are
/// the matching eigenvectors. Only the Hermitian part of the input is used.
pub fn hermitian_eigen(a: &DenseOperator) -> (Vec<f64>, DenseOperator) {
    let n = a.dim();
    let mut m = DenseOperator::from_fn(n, |r, c| (a[(r, c)] + a[(c, r)].conj()) * 0.5);
    let mut v = DenseOperator::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = m[(p, q)];
                let babs = b.norm();
                if babs <= 1e-300 || babs <= 1e-18 * scale {
                    continue;
                }
                let phase = b / babs;
                let theta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * babs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let pc = phase.conj();
                // Columns: A <- A J with J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]].
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c - akq * pc * s;
                    m[(k, q)] = akp * s + akq * pc * c;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * pc * s;
                    v[(k, q)] = vkp * s + vkq * pc * c;
                }
                // Rows: A <- J† A.
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c - aqk * phase * s;
                    m[(q, k)] = apk * s + aqk * phase * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].re.partial_cmp(&m[(y, y)].re).unwrap_or(core::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| m[(i, i)].re).collect();
    let vecs = DenseOperator::from_fn(n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

/// Applies `f` to the spectrum of a Hermitian matrix: `V f(Λ) V†`.
pub fn hermitian_function(a: &DenseOperator, f: impl Fn(f64) -> C64) -> DenseOperator {
    let (vals, vecs) = hermitian_eigen(a);
    let n = a.dim();
    let fv: Vec<C64> = vals.iter().map(|&x| f(x)).collect();
    DenseOperator::from_fn(n, |r, c| (0..n).fold(ZERO, |acc, k| acc + vecs[(r, k)] * fv[k] * vecs[(c, k)].conj()))
}

/// Solves `a X = b` for square `b` by LU with partial pivoting.
pub fn solve(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let n = a.dim();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, lu[(r, col)].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax == 0.0 || !pmax.is_finite() {
            bail!(Numerical, "singular matrix in linear solve");
        }
        if piv != col {
            for k in 0..n {
                let t = lu[(col, k)];
                lu[(col, k)] = lu[(piv, k)];
                lu[(piv, k)] = t;
                let t = x[(col, k)];
                x[(col, k)] = x[(piv, k)];
                x[(piv, k)] = t;
            }
        }
        let d = lu[(col, col)];
        for r in (col + 1)..n {
            let f = lu[(r, col)] / d;
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let t = lu[(col, k)];
                lu[(r, k)] -= f * t;
            }
            for k in 0..n {
                let t = x[(col, k)];
                x[(r, k)] -= f * t;
            }
        }
    }
    for col in (0..n).rev() {
        let d = lu[(col, col)];
        for k in 0..n {
            x[(col, k)] /= d;
        }
        for r in 0..col {
            let f = lu[(r, col)];
            if f.is_zero() {
                continue;
            }
            for k in 0..n {
                let t = x[(col, k)];
                x[(r, k)] -= f * t;
            }
        }
    }
    Ok(x)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(a)` by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &DenseOperator) -> Result<DenseOperator> {
    if !a.is_finite() {
        bail!(Numerical, "matrix exponential of non-finite input");
    }
    let n = a.dim();
    let norm = a.norm_one();
    const THETA13: f64 = 5.371920351148152;
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    if s > 1100 {
        bail!(Numerical, "matrix exponential out of range (norm {norm:e})");
    }
    let scaled = a.scale_real(libm::exp2(-(s as f64)));
    let id = DenseOperator::identity(n);
    let a2 = scaled.matmul(&scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = &PADE13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| {
        let mut m = a6.scale_real(c6);
        m.axpy(C64::new(c4, 0.0), &a4);
        m.axpy(C64::new(c2, 0.0), &a2);
        m.axpy(C64::new(c0, 0.0), &id);
        m
    };
    let u_poly = a6.matmul(&lin(b[13], b[11], b[9], 0.0)).add(&lin(b[7], b[5], b[3], b[1]));
    let u = scaled.matmul(&u_poly);
    let v = a6.matmul(&lin(b[12], b[10], b[8], 0.0)).add(&lin(b[6], b[4], b[2], b[0]));
    let mut r = solve(&v.sub(&u), &v.add(&u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        bail!(Numerical, "matrix exponential overflowed");
    }
    Ok(r)
}

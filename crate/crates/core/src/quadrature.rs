//! The LCHS kernel `g(k) = 1/(C_β (1 − ik) e^{(1+ik)^β})`, its truncation
//! radius, and composite Gauss–Legendre grids over `k` and over time.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use crate::error::{bail, Result};
use crate::linalg::{StateVector, C64};
use crate::schedule::{Source, TimeDependentGenerator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    beta: f64,
    c_beta: f64,
}

impl KernelParams {
    pub fn new(beta: f64) -> Result<Self> {
        Ok(Self { beta, c_beta: normalization_constant(beta)? })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c_beta(&self) -> f64 {
        self.c_beta
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        Self::new(0.8).expect("0.8 is in range")
    }
}

/// `C_β = 2π e^{−2^β}`.
pub fn normalization_constant(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        bail!(Parameter, "beta must lie in (0, 1), got {beta}");
    }
    Ok(2.0 * PI * (-(2f64.powf(beta))).exp())
}

fn unnormalized_kernel(k: f64, beta: f64) -> C64 {
    let z = C64::new(1.0, k);
    let denom = C64::new(1.0, -k) * z.powf(beta).exp();
    denom.inv()
}

/// Kernel value `g(k)` on the principal branch.
pub fn kernel_weight(k: f64, p: &KernelParams) -> C64 {
    unnormalized_kernel(k, p.beta) / p.c_beta
}

/// `∫ dk / ((1 − ik) e^{(1+ik)^β})` by composite Gauss–Legendre on
/// geometrically growing panels, as an independent check of `C_β`.
pub fn integrate_normalization(beta: f64) -> Result<f64> {
    normalization_constant(beta)?;
    let (x, w) = gauss_legendre(48);
    let cb = (beta * PI / 2.0).cos();
    let panel = |a: f64, b: f64| -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(&w).map(|(xi, wi)| wi * half * unnormalized_kernel(mid + half * xi, beta).re).sum::<f64>()
    };
    let mut total = panel(0.0, 0.5) + panel(0.5, 1.0);
    let mut a = 1.0;
    while a < 1e14 {
        let b = 1.5 * a;
        total += panel(a, b);
        a = b;
        if (-(a.powf(beta)) * cb).exp() / a < 1e-18 {
            break;
        }
    }
    // The integrand at -k is the conjugate of the one at k.
    Ok(2.0 * total)
}

/// Upper bound on the truncation error of restricting the kernel integral to `[−K, K]`.
pub fn truncation_bound(k: f64, p: &KernelParams) -> f64 {
    let m = (1.0 / p.beta).ceil();
    let cb = (p.beta * PI / 2.0).cos();
    let fact: f64 = (1..=m as u64).map(|i| i as f64).product();
    let pref = 2f64.powf(m + 1.0) * fact / (p.c_beta * cb.powf(m));
    pref / k * (-0.5 * k.powf(p.beta) * cb).exp()
}

/// Smallest `K = 2^{i/8}` with `truncation_bound(K) ≤ eps`.
pub fn choose_truncation(p: &KernelParams, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        bail!(Parameter, "eps must lie in (0, 1), got {eps}");
    }
    let mut i = 0i32;
    loop {
        let k = 2f64.powf(i as f64 / 8.0);
        if k > 1e6 {
            bail!(Parameter, "no truncation radius below 1e6 meets eps = {eps:e} at beta = {}", p.beta);
        }
        if truncation_bound(k, p) <= eps {
            return Ok(k);
        }
        i += 1;
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; q];
    let mut weights = alloc::vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for n in 2..=q {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

/// Truncated, discretized kernel: `Σ_j c_j (·)(k_j)` approximates `∫ g(k) (·)(k) dk`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub k_max: f64,
    pub h1: f64,
    pub q: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<C64>,
    pub l1: f64,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> C64 {
        self.weights.iter().sum()
    }

    /// Single node at `k = 0` with unit weight (no dissipative part).
    pub fn trivial() -> Self {
        Self { k_max: 0.0, h1: 0.0, q: 1, nodes: alloc::vec![0.0], weights: alloc::vec![C64::new(1.0, 0.0)], l1: 1.0 }
    }

    /// Grid with explicit panel geometry (used for refinement studies).
    pub fn with_geometry(p: &KernelParams, k_max: f64, panels_per_side: usize, q: usize) -> Self {
        let h1 = k_max / panels_per_side as f64;
        let (x, w) = gauss_legendre(q);
        let mut nodes = Vec::with_capacity(2 * panels_per_side * q);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for m in -(panels_per_side as i64)..(panels_per_side as i64) {
            let a = m as f64 * h1;
            let mid = a + 0.5 * h1;
            for (xi, wi) in x.iter().zip(&w) {
                let k = mid + 0.5 * h1 * xi;
                nodes.push(k);
                weights.push(kernel_weight(k, p) * (0.5 * h1 * wi));
            }
        }
        let l1 = weights.iter().map(|c| c.norm()).sum();
        Self { k_max, h1, q, nodes, weights, l1 }
    }
}

/// Points per panel, `Q = ⌈log(8K/(3 C_β ε)) / log 4⌉`.
pub fn points_per_panel(p: &KernelParams, k_max: f64, eps: f64) -> usize {
    let q = ((8.0 * k_max / (3.0 * p.c_beta * eps)).ln() / 4f64.ln()).ceil();
    q.max(1.0) as usize
}

/// Panel width `h₁ = 1/(e T ‖L‖)` rounded down so that `K/h₁` is an integer.
pub fn panel_width(k_max: f64, t_final: f64, norm_l: f64) -> (f64, usize) {
    let raw = 1.0 / (E * t_final * norm_l);
    let panels = (k_max / raw).ceil().max(1.0) as usize;
    (k_max / panels as f64, panels)
}

/// Builds the composite grid for total time `t_final` and dissipative norm
/// `norm_l`. Half of `eps` goes to truncation and half to discretization.
pub fn build_grid(p: &KernelParams, eps: f64, t_final: f64, norm_l: f64) -> Result<QuadratureGrid> {
    if !(eps > 0.0 && eps < 1.0) {
        bail!(Parameter, "eps must lie in (0, 1), got {eps}");
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        bail!(Parameter, "total time must be positive, got {t_final}");
    }
    if !(norm_l >= 0.0 && norm_l.is_finite()) {
        bail!(Parameter, "norm of L must be finite and non-negative, got {norm_l}");
    }
    if norm_l == 0.0 {
        return Ok(QuadratureGrid::trivial());
    }
    let half = 0.5 * eps;
    let k_max = choose_truncation(p, half)?;
    let (_, panels) = panel_width(k_max, t_final, norm_l);
    let q = points_per_panel(p, k_max, half);
    if panels.saturating_mul(q) > 50_000_000 {
        bail!(Parameter, "quadrature grid would need {} nodes", 2 * panels * q);
    }
    Ok(QuadratureGrid::with_geometry(p, k_max, panels, q))
}

/// Discretization of `∫_0^T U(T, s) b(s) ds`: nodes `s_j`, positive weights
/// absorbing `‖b(s_j)‖ e^{σ(T − s_j)}`, and the normalized `b(s_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<C64>,
    pub states: Vec<StateVector>,
    pub l1: f64,
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn time_grid_with(b: &Source, dim: usize, t_final: f64, shift: f64, panels: usize, q: usize) -> TimeGrid {
    let (x, w) = gauss_legendre(q);
    let h = t_final / panels as f64;
    let mut grid = TimeGrid { nodes: Vec::new(), weights: Vec::new(), states: Vec::new(), l1: 0.0 };
    for m in 0..panels {
        let mid = (m as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let s = mid + 0.5 * h * xi;
            let v = b.at(s, dim);
            let norm = v.norm();
            if norm == 0.0 {
                continue;
            }
            let weight = 0.5 * h * wi * norm * (shift * (t_final - s)).exp();
            grid.nodes.push(s);
            grid.weights.push(C64::new(weight, 0.0));
            grid.states.push(v.scale_real(1.0 / norm));
            grid.l1 += weight;
        }
    }
    grid
}

/// Builds the time grid. Panels are at most `1/(e·sup‖A‖)` wide and are
/// doubled until the weight sum is stable to `eps` (relative).
pub fn build_time_grid(g: &TimeDependentGenerator, b: &Source, eps: f64, shift: f64) -> Result<TimeGrid> {
    let t_final = g.t_final();
    if !(t_final > 0.0) {
        bail!(Parameter, "total time must be positive, got {t_final}");
    }
    if !(eps > 0.0 && eps < 1.0) {
        bail!(Parameter, "eps must lie in (0, 1), got {eps}");
    }
    let dim = g.dim();
    let empty = TimeGrid { nodes: Vec::new(), weights: Vec::new(), states: Vec::new(), l1: 0.0 };
    if b.is_empty() {
        return Ok(empty);
    }
    if b.dim() != Some(dim) {
        bail!(Dimension, "source dimension does not match generator dimension {dim}");
    }
    let rate = (0..=32).map(|i| g.l1_at(t_final * i as f64 / 32.0)).fold(0.0, f64::max) + shift.abs();
    let mut panels = ((E * t_final * rate).ceil() as usize).max(1);
    let q = (((1.0 / eps).ln() / 4f64.ln()).ceil() as usize + 2).max(4);
    let mut grid = time_grid_with(b, dim, t_final, shift, panels, q);
    for _ in 0..20 {
        let finer = time_grid_with(b, dim, t_final, shift, 2 * panels, q);
        let settled = (finer.l1 - grid.l1).abs() <= eps * finer.l1.max(f64::MIN_POSITIVE);
        grid = finer;
        panels *= 2;
        if settled {
            return Ok(grid);
        }
    }
    Ok(grid)
}

//! Closed-form resource estimates for randomized LCHS.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cqdrift::required_segments;
use crate::error::{bail, Result};
use crate::observable::required_samples;
use crate::quadrature::{choose_truncation, panel_width, points_per_panel, KernelParams, QuadratureGrid};
use crate::schedule::TimeDependentGenerator;

/// Problem summary consumed by [`resource_estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResourceInputs {
    pub qubits: usize,
    pub t_final: f64,
    /// Spectral bound of the shifted dissipative part.
    pub norm_l: f64,
    /// Spectral shift `σ`.
    pub shift: f64,
    /// Time-integrated Pauli ℓ1 norm of the inner Hamiltonians.
    pub lambda: f64,
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
    /// `q = (‖u₀‖ + ‖b‖_{L¹}) / ‖u(T)‖`.
    pub amplification: f64,
    pub norm_o: f64,
    pub u0_norm: f64,
    /// `sup_t ‖A(t)‖ + σ` when a source term is present.
    pub source_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResourceReport {
    pub k_max: f64,
    pub h1: f64,
    pub points_per_panel: usize,
    pub panels_per_side: usize,
    /// `M = 2 K Q / h₁` quadrature nodes.
    pub nodes: usize,
    /// Time nodes of the source quadrature (0 without a source).
    pub time_nodes: usize,
    pub kernel_l1: f64,
    /// Pair weight bound `W = (‖u₀‖ e^{σT} ‖c‖₁)²`.
    pub pair_weight: f64,
    /// `⌈4λ²/ε⌉`.
    pub segments: usize,
    /// `⌈4λ²q²/ε⌉`, the segment count at target accuracy `ε/q` on `u(T)/‖u(T)‖`.
    pub segments_amplified: usize,
    /// `⌈(2W‖O‖)² ln(2/δ) / (2ε²)⌉`.
    pub samples: u64,
    /// `⌈log₂ M⌉ + ⌈log₂ M′⌉` for a coherent LCU.
    pub ancilla_coherent: u32,
    /// One Hadamard-test qubit.
    pub ancilla_free: u32,
    pub amplification: f64,
    /// Pauli rotations times qubits per sample, `r · n`.
    pub gate_proxy: u64,
}

fn ceil_log2(m: usize) -> u32 {
    if m <= 1 { 0 } else { usize::BITS - (m - 1).leading_zeros() }
}

pub fn resource_estimate(inp: &ResourceInputs) -> Result<ResourceReport> {
    if !(inp.eps > 0.0 && inp.eps < 1.0) {
        bail!(Parameter, "eps must lie in (0, 1), got {}", inp.eps);
    }
    let positive = [inp.t_final, inp.norm_l, inp.lambda, inp.amplification, inp.norm_o, inp.u0_norm];
    if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !(inp.shift.is_finite() && inp.shift >= 0.0) {
        bail!(Parameter, "resource inputs must be positive and finite");
    }
    if inp.qubits == 0 {
        bail!(Parameter, "need at least one qubit");
    }
    let params = KernelParams::new(inp.beta)?;
    // The grid absorbs the e^{σT} amplification, as in `LchsSplit::grid`.
    let half = 0.5 * inp.eps * (-inp.shift * inp.t_final).exp();
    let k_max = choose_truncation(&params, half)?;
    let (h1, panels) = panel_width(k_max, inp.t_final, inp.norm_l);
    let q = points_per_panel(&params, k_max, half);
    let nodes = 2 * panels * q;
    let kernel_l1 = QuadratureGrid::with_geometry(&params, k_max, panels, q).l1;
    let time_nodes = match inp.source_rate {
        None => 0,
        Some(rate) => {
            if !(rate.is_finite() && rate > 0.0) {
                bail!(Parameter, "source rate must be positive and finite");
            }
            let panels = (core::f64::consts::E * inp.t_final * rate).ceil().max(1.0) as usize;
            let per_panel = (((1.0 / inp.eps).ln() / 4f64.ln()).ceil() as usize + 2).max(4);
            panels * per_panel
        }
    };
    let pair_weight = (inp.u0_norm * (inp.shift * inp.t_final).exp() * kernel_l1).powi(2);
    let segments = required_segments(inp.lambda, inp.eps)?;
    let segments_amplified = required_segments(inp.lambda * inp.amplification, inp.eps)?;
    let samples = required_samples(pair_weight, inp.norm_o, inp.eps, inp.delta)?;
    Ok(ResourceReport {
        k_max,
        h1,
        points_per_panel: q,
        panels_per_side: panels,
        nodes,
        time_nodes,
        kernel_l1,
        pair_weight,
        segments,
        segments_amplified,
        samples,
        ancilla_coherent: ceil_log2(nodes) + ceil_log2(time_nodes),
        ancilla_free: 1,
        amplification: inp.amplification,
        gate_proxy: segments as u64 * inp.qubits as u64,
    })
}

impl ResourceReport {
    /// `(quantity, value, formula)` rows for tabular output.
    pub fn rows(&self) -> Vec<(&'static str, f64, &'static str)> {
        alloc::vec![
            ("K", self.k_max, "smallest 2^(i/8) with truncation bound <= eps e^(-sigma T) / 2"),
            ("h1", self.h1, "K / ceil(K e T ||L||)"),
            ("Q", self.points_per_panel as f64, "ceil(log(8K/(3 C_beta eps e^(-sigma T) / 2)) / log 4)"),
            ("M", self.nodes as f64, "2 K Q / h1"),
            ("M_prime", self.time_nodes as f64, "ceil(e T rate) * (ceil(log(1/eps)/log 4) + 2)"),
            ("c_l1", self.kernel_l1, "sum |c_j|"),
            ("W", self.pair_weight, "(|u0| e^(sigma T) |c|_1)^2"),
            ("r", self.segments as f64, "ceil(4 lambda^2 / eps)"),
            ("r_amplified", self.segments_amplified as f64, "ceil(4 lambda^2 q^2 / eps)"),
            ("S", self.samples as f64, "ceil((2 W |O|)^2 ln(2/delta) / (2 eps^2))"),
            ("ancilla_coherent", self.ancilla_coherent as f64, "ceil(log2 M) + ceil(log2 M')"),
            ("ancilla_free", self.ancilla_free as f64, "Hadamard-test qubit"),
            ("q", self.amplification, "(|u0| + |b|_L1) / |u(T)|"),
            ("gate_proxy", self.gate_proxy as f64, "r * n"),
        ]
    }
}

/// Time-integrated and worst-case Pauli ℓ1 norms of a generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeNorms {
    /// `∫_0^T Σ_l |α_l(t)| dt`.
    pub integrated: f64,
    /// `max_t Σ_l |α_l(t)|` over the quadrature nodes and a uniform grid.
    pub sup: f64,
    pub t_final: f64,
}

impl TimeNorms {
    /// `T · sup`, which always dominates the integrated norm.
    pub fn worst_case(&self) -> f64 {
        self.t_final * self.sup
    }
}

/// Evaluates [`TimeNorms`] with `panels` Gauss–Legendre panels of order 8.
///
/// The sup runs over every quadrature node, so `integrated ≤ T·sup` holds for
/// the computed numbers and not only for the exact ones.
pub fn time_norms(g: &TimeDependentGenerator, panels: usize) -> TimeNorms {
    let t_final = g.t_final();
    let panels = panels.max(1);
    let (x, w) = crate::quadrature::gauss_legendre(8);
    let h = t_final / panels as f64;
    let mut integrated = 0.0;
    let mut sup = (0..=panels).map(|m| g.l1_at(m as f64 * h)).fold(0.0, f64::max);
    for m in 0..panels {
        let mid = (m as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let v = g.l1_at(mid + 0.5 * h * xi);
            integrated += 0.5 * h * wi * v;
            sup = sup.max(v);
        }
    }
    TimeNorms { integrated, sup, t_final }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::pauli::PauliString;
    use crate::schedule::{Schedule, ScheduledTerm};
    use proptest::prelude::*;
    use std::prelude::rust_2021::*;

    fn inputs() -> ResourceInputs {
        ResourceInputs {
            qubits: 3,
            t_final: 1.0,
            norm_l: 1.0,
            shift: 0.0,
            lambda: 1.0,
            eps: 0.01,
            delta: 0.05,
            beta: 0.5,
            amplification: 1.0,
            norm_o: 1.0,
            u0_norm: 1.0,
            source_rate: None,
        }
    }

    #[test]
    fn segment_count_golden() {
        let rep = resource_estimate(&inputs()).unwrap();
        assert_eq!(rep.segments, 400);
        assert_eq!(rep.gate_proxy, 1200);
        let doubled = resource_estimate(&ResourceInputs { lambda: 2.0, ..inputs() }).unwrap();
        assert_eq!(doubled.segments, 4 * rep.segments);
        let amplified = resource_estimate(&ResourceInputs { amplification: 3.0, ..inputs() }).unwrap();
        assert_eq!(amplified.segments_amplified, 3600);
    }

    #[test]
    fn quadrature_and_sample_golden() {
        // Hand evaluation at β = 1/2, ε = 10⁻², T = ‖L‖ = 1: K = 2^{54/8},
        // ⌈K e⌉ = 293 panels per side, Q = 8.
        let rep = resource_estimate(&inputs()).unwrap();
        assert_eq!(rep.k_max, 2f64.powf(54.0 / 8.0));
        assert_eq!(rep.panels_per_side, 293);
        assert!((rep.h1 - rep.k_max / 293.0).abs() < 1e-15);
        assert_eq!(rep.points_per_panel, 8);
        assert_eq!(rep.nodes, 4688);
        assert_eq!(rep.nodes as f64, (2.0 * rep.k_max * rep.points_per_panel as f64 / rep.h1).round());
        assert_eq!(rep.ancilla_coherent, 13);
        let w = rep.pair_weight;
        let expected = ((2.0 * w).powi(2) * (2.0f64 / 0.05).ln() / (2.0 * 1e-4)).ceil() as u64;
        assert_eq!(rep.samples, expected);
    }

    #[test]
    fn time_nodes_only_with_source() {
        let rep = resource_estimate(&ResourceInputs { source_rate: Some(2.0), ..inputs() }).unwrap();
        // ⌈2e⌉ = 6 panels of ⌈log₄ 100⌉ + 2 = 6 points.
        assert_eq!(rep.time_nodes, 36);
        assert_eq!(rep.ancilla_coherent, 13 + 6);
    }

    #[test]
    fn rejects_large_eps() {
        assert!(resource_estimate(&ResourceInputs { eps: 1.0, ..inputs() }).is_err());
        assert!(resource_estimate(&ResourceInputs { lambda: 0.0, ..inputs() }).is_err());
    }

    #[test]
    fn report_matches_built_grid() {
        let rep = resource_estimate(&ResourceInputs { eps: 0.05, norm_l: 0.7, t_final: 2.0, ..inputs() }).unwrap();
        let grid = crate::quadrature::build_grid(&KernelParams::new(0.5).unwrap(), 0.05, 2.0, 0.7).unwrap();
        assert_eq!(grid.len(), rep.nodes);
        assert!((grid.l1 - rep.kernel_l1).abs() < 1e-12);
    }

    #[test]
    fn report_matches_shifted_split_grid() {
        use crate::lchs::{LchsSplit, ShiftPolicy};
        use crate::models::{build_tfim, Dynamics, TfimParams};
        let a = build_tfim(&TfimParams { n: 3, j: 1.0, g: 0.5, gamma: 0.3 }).unwrap();
        let g = TimeDependentGenerator::constant(&Dynamics::Schrodinger.generator(&a), 1.5).unwrap();
        let split = LchsSplit::new(&g, ShiftPolicy::Exact).unwrap();
        assert!(split.shift() > 0.0);
        let params = KernelParams::new(0.5).unwrap();
        let grid = split.grid(&params, 0.02).unwrap();
        let inp = ResourceInputs { eps: 0.02, t_final: 1.5, norm_l: split.norm_l(), shift: split.shift(), ..inputs() };
        let rep = resource_estimate(&inp).unwrap();
        assert_eq!(grid.len(), rep.nodes);
        assert!((grid.l1 - rep.kernel_l1).abs() < 1e-12);
    }

    fn schedule_strategy() -> impl Strategy<Value = Schedule> {
        prop_oneof![
            Just(Schedule::Constant),
            prop::collection::vec(-2.0f64..2.0, 1..4).prop_map(Schedule::Polynomial),
            (-1.5f64..1.5).prop_map(|rate| Schedule::Exponential { rate }),
            (-1.0f64..1.0, 0.1f64..2.0, 0.0f64..6.0, -3.0f64..3.0)
                .prop_map(|(offset, amplitude, omega, phase)| Schedule::Sinusoid { offset, amplitude, omega, phase }),
        ]
    }

    proptest! {
        #[test]
        fn integrated_norm_never_exceeds_worst_case(
            parts in prop::collection::vec((-2.0f64..2.0, schedule_strategy(), 0usize..3), 1..5),
            t_final in 0.1f64..4.0,
        ) {
            let letters = ["XI", "ZZ", "YX"];
            let terms = parts
                .into_iter()
                .map(|(c, s, i)| ScheduledTerm {
                    coeff: C64::new(c, 0.0),
                    string: PauliString::parse(letters[i]).unwrap(),
                    schedule: s,
                })
                .collect();
            let g = TimeDependentGenerator::new(2, terms, t_final).unwrap();
            let n = time_norms(&g, 16);
            prop_assert!(n.integrated <= n.worst_case() * (1.0 + 1e-12));
        }
    }
}

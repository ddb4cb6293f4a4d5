//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantities before asserting.
//!
//! Run with `cargo test -p rlchs --test acceptance -- --nocapture` to see
//! the report lines.

use std::time::Instant;

use rlchs::config::ExperimentConfig;
use rlchs::experiments::{run_benchmark, run_traces, with_threads, Benchmark, Traces, BASELINE, EXACT, PROTECTED};
use rlchs_core::cqdrift::{channel_error, required_segments, CqdriftPlan};
use rlchs_core::evolution::{duhamel_solution, matrix_exponential};
use rlchs_core::lcu::{combine_solution, run_shots, InnerMode, LcuProblem};
use rlchs_core::lchs::{LchsSplit, ShiftPolicy};
use rlchs_core::linalg::{DenseOperator, StateVector, C64, I, ONE};
use rlchs_core::models::{build_hn, build_tfim, magnetization, Dynamics, HnParams, TfimParams};
use rlchs_core::observable::{
    estimate_observable, hoeffding_envelope, required_samples, urcc_estimate, urcc_segments, MEstimator, ObservableProblem, Part,
};
use rlchs_core::pauli::{PauliString, PauliSum};
use rlchs_core::quadrature::{build_grid, integrate_normalization, normalization_constant, KernelParams, QuadratureGrid};
use rlchs_core::resources::{resource_estimate, time_norms, ResourceInputs};
use rlchs_core::rng::{stream, uniform};
use rlchs_core::schedule::{Schedule, ScheduledTerm, Source, TimeDependentGenerator};
use rlchs_core::stats::log_log_slope;
use rlchs_core::symmetry::{conserved_drift, hn_intertwiner, pt_check, recursive_eta, ParityKind, ParitySpec};

fn verdict(id: u32, name: &str, ok: bool, clock: Instant, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2} ({name}, {:.1} s): {detail}", clock.elapsed().as_secs_f64());
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn tfim(n: usize) -> PauliSum {
    build_tfim(&TfimParams { n, j: 1.0, g: 0.5, gamma: 0.3 }).unwrap()
}

fn schrodinger(a: &PauliSum, t: f64) -> TimeDependentGenerator {
    TimeDependentGenerator::constant(&Dynamics::Schrodinger.generator(a), t).unwrap()
}

#[test]
fn criterion_01_kernel_identity() {
    let clock = Instant::now();
    let mut worst_norm: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for beta in [0.3, 0.5, 0.8] {
        // Independent closed form 2π e^{−2^β}.
        let closed = 2.0 * std::f64::consts::PI * (-(2f64.powf(beta))).exp();
        assert!((closed - normalization_constant(beta).unwrap()).abs() < 1e-15);
        worst_norm = worst_norm.max((closed - integrate_normalization(beta).unwrap()).abs());
        let p = KernelParams::new(beta).unwrap();
        for eps in [1e-2, 1e-3] {
            // At T = 0 every inner unitary is the identity, so Σc_j approximates ∫f = 1.
            let g = build_grid(&p, eps, 1.0, 1.0).unwrap();
            worst_sum = worst_sum.max((g.weight_sum() - ONE).norm() / eps);
        }
    }
    let ok = worst_norm <= 1e-8 && worst_sum <= 1.0 && clock.elapsed().as_secs_f64() < 10.0;
    verdict(1, "kernel identity", ok, clock, format!("max |C_beta - integral| = {worst_norm:.2e}, max |sum c - 1|/eps = {worst_sum:.3}"));
}

#[test]
fn criterion_02_deterministic_reconstruction() {
    let clock = Instant::now();
    let g = schrodinger(&tfim(3), 1.0);
    let split = LchsSplit::new(&g, ShiftPolicy::Exact).unwrap();
    let exact = matrix_exponential(&g.at(0.0).to_dense().unwrap(), -1.0).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for eps in [1e-2, 1e-3] {
        let grid = split.grid(&KernelParams::default(), eps).unwrap();
        let err = split.reconstruct(&grid, 1e-13).unwrap().sub(&exact).spectral_norm();
        ok &= err <= eps;
        details.push(format!("eps {eps:.0e}: {err:.2e} ({} nodes)", grid.len()));
    }
    ok &= clock.elapsed().as_secs_f64() < 60.0;
    verdict(2, "deterministic LCHS reconstruction", ok, clock, details.join(", "));
}

#[test]
fn criterion_03_cqdrift_error_law() {
    let clock = Instant::now();
    let h = PauliSum::from_labels(&[(C64::new(1.2, 0.0), "X"), (C64::new(0.9, 0.0), "Z")]).unwrap();
    let exact = matrix_exponential(&h.scale(I).to_dense().unwrap(), -1.0).unwrap();
    let rs = [16usize, 64, 256, 1024];
    let mut errs = Vec::new();
    let mut ok = true;
    for &r in &rs {
        let plan = CqdriftPlan::from_hermitian(&h, 1.0, r, 0).unwrap();
        let err = channel_error(&plan, &exact, 200).unwrap();
        ok &= err <= 4.0 * plan.lambda().powi(2) / r as f64;
        errs.push(err);
    }
    let xs: Vec<f64> = rs.iter().map(|&r| r as f64).collect();
    let slope = log_log_slope(&xs, &errs);
    ok &= (slope + 1.0).abs() <= 0.3 && clock.elapsed().as_secs_f64() < 300.0;
    verdict(3, "c-qDrift error law", ok, clock, format!("errors {}, slope {slope:.3}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")));
}

#[test]
fn criterion_04_randomized_lcu_unbiasedness() {
    let clock = Instant::now();
    let g = schrodinger(&tfim(3), 1.0);
    let split = LchsSplit::new(&g, ShiftPolicy::Exact).unwrap();
    let grid = QuadratureGrid::with_geometry(&KernelParams::default(), 6.0, 4, 8);
    assert!(grid.len() <= 64);
    let u0 = StateVector::from_real(&[0.5, 0.1, -0.3, 0.2, 0.0, 0.4, 0.6, -0.1]);
    let p = LcuProblem::with_grid(split, grid, None, &u0, 1e-3).unwrap();
    let us = p.exact_unitaries(1e-13).unwrap();
    let det = p.deterministic_homogeneous(&us);
    let diff = det.distance(&p.exhaustive_homogeneous(&us).unwrap());
    let sizes = [100u64, 1_000, 10_000, 100_000];
    let ses: Vec<f64> = sizes
        .iter()
        .map(|&s| combine_solution(&p, &run_shots(&p, &InnerMode::Cached(&us), s, 0, 77, false).unwrap()).unwrap().std_error_norm)
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let slope = log_log_slope(&xs, &ses);
    let ok = diff <= 1e-12 && (slope + 0.5).abs() <= 0.1 && clock.elapsed().as_secs_f64() < 300.0;
    verdict(4, "randomized LCU unbiasedness", ok, clock, format!("exhaustive vs deterministic {diff:.2e} (M = {}), SE slope {slope:.3}", p.grid.len()));
}

#[test]
fn criterion_05_inhomogeneous_correctness() {
    let clock = Instant::now();
    // u' = −u + 1 on the first component of a qubit register.
    let g = TimeDependentGenerator::constant(&PauliSum::from_labels(&[(ONE, "I")]).unwrap(), 1.0).unwrap();
    let src = Source::constant(StateVector::from_real(&[1.0, 0.0]));
    let u0 = StateVector::zeros(2);
    let exact = 1.0 - (-1.0f64).exp();
    let oracle = duhamel_solution(&g, Some(&src), &u0, 1.0, 1e-12).unwrap().amplitudes()[0].re;
    let p = LcuProblem::new(&g, Some(&src), &u0, &KernelParams::default(), 1e-3).unwrap();
    let acc = run_shots(&p, &InnerMode::Exact { tol: 1e-12 }, 0, 10_000, 9, false).unwrap();
    let est = combine_solution(&p, &acc).unwrap();
    let value = est.state.amplitudes()[0].re;
    let se = est.std_errors[0].0;
    let ok = (oracle - exact).abs() <= 1e-8 && (value - exact).abs() <= 3.0 * se;
    verdict(5, "inhomogeneous correctness", ok, clock, format!("estimate {value:.5} +- {se:.5} vs {exact:.5}, oracle gap {:.1e}", (oracle - exact).abs()));
}

#[test]
fn criterion_06_observable_coverage() {
    let clock = Instant::now();
    let a = tfim(3);
    let g = schrodinger(&a, 1.0);
    let u0 = StateVector::basis(8, 0);
    let o = magnetization(3);
    let eps = 1e-2;
    let p = ObservableProblem::new(&g, &u0, &o, &KernelParams::default(), eps).unwrap().with_exact_states(1e-13).unwrap();
    let reference = p.deterministic_value().unwrap().re;
    let (s, delta) = (2_000u64, 0.05);
    // Union bound over the two independent parts, δ/2 each.
    let norm_o = p.observable.norm();
    let envelope = hoeffding_envelope(p.pairs.weight(Part::Re), norm_o, s, delta / 2.0)
        + hoeffding_envelope(p.pairs.weight(Part::Im), norm_o, s, delta / 2.0);
    let covered = (0..100u64)
        .filter(|&run| (estimate_observable(&p, s, MEstimator::Shot { r: None }, 1000 + run).unwrap().value.re - reference).abs() <= envelope)
        .count();
    // Exhaustive enumeration equals the double sum (checked on a small grid);
    // the double sum on the full grid is compared with the dense oracle.
    let small = ObservableProblem::with_grid(
        LchsSplit::new(&g, ShiftPolicy::Exact).unwrap(),
        QuadratureGrid::with_geometry(&KernelParams::default(), 5.0, 3, 5),
        &u0,
        &o,
    )
    .unwrap()
    .with_exact_states(1e-13)
    .unwrap();
    let exhaustive_gap = (small.exhaustive_value().unwrap() - small.deterministic_value().unwrap()).norm();
    let u = matrix_exponential(&g.at(0.0).to_dense().unwrap(), -1.0).unwrap().apply(&u0);
    let dense = p.observable.expectation(&u, &u).re;
    // ‖û − u‖ ≤ ε‖u₀‖ bounds the quadratic-form error by ε(2‖u‖ + ε)‖O‖.
    let tol = eps * (2.0 * u.norm() + eps) * norm_o;
    let ok = covered >= 95 && exhaustive_gap <= 1e-12 && (reference - dense).abs() <= tol && clock.elapsed().as_secs_f64() < 600.0;
    verdict(
        6,
        "observable estimator coverage",
        ok,
        clock,
        format!("{covered}/100 runs inside +-{envelope:.3}, exhaustive gap {exhaustive_gap:.1e}, |double sum - dense| = {:.2e} <= {tol:.2e}", (reference - dense).abs()),
    );
}

#[test]
fn criterion_07_symmetry_machinery() {
    let clock = Instant::now();
    let a = tfim(5);
    let ad = a.to_dense().unwrap();
    let flip = ParitySpec::new(ParityKind::SpinFlip, 5);
    let pt = pt_check(&a, &flip).unwrap();
    let norm = ad.spectral_norm();
    let mut tower_ok = true;
    for k in 1..=3 {
        let eta = recursive_eta(&ad, &flip, 0.0, k).unwrap();
        tower_ok &= eta.residual(&ad) <= 1e-8 * norm.max(1.0).powi(k as i32);
    }
    let p = HnParams { l: 8, j: 1.0, gamma: 0.3, v: 0.5 };
    let gauge = hn_intertwiner(&p).unwrap();
    let hn = build_hn(&p).unwrap().to_dense().unwrap();
    let inv: Vec<C64> = (0..hn.dim()).map(|i| ONE / gauge.gauge[(i, i)]).collect();
    let h = gauge.gauge.matmul(&hn).matmul(&DenseOperator::diagonal(&inv));
    let hermiticity = h.sub(&h.adjoint()).spectral_norm();
    let hn_residual = gauge.intertwiner.residual(&hn);
    let tfim_eta = recursive_eta(&ad, &flip, 0.0, 2).unwrap().eta;
    let tfim_drift = conserved_drift(&tfim_eta, &schrodinger(&a, 2.0), &StateVector::basis(32, 0), 2.0, 1e-13).unwrap();
    let hn_op = build_hn(&p).unwrap();
    let hn_drift = conserved_drift(&gauge.intertwiner.eta, &schrodinger(&hn_op, 2.0), &StateVector::basis(256, 0b0101_0101), 2.0, 1e-13).unwrap();
    let ok = pt <= 1e-12
        && tower_ok
        && (gauge.kappa + 0.30952).abs() <= 1e-5
        && (gauge.hopping - 0.95394).abs() <= 1e-5
        && hermiticity <= 1e-10
        && hn_residual <= 1e-10
        && tfim_drift.value <= 1e-8
        && hn_drift.value <= 1e-8
        && clock.elapsed().as_secs_f64() < 60.0;
    verdict(
        7,
        "symmetry machinery",
        ok,
        clock,
        format!(
            "PT {pt:.1e}, tower ok {tower_ok}, kappa {:.6}, hopping {:.6}, gauge hermiticity {hermiticity:.1e}, eta residual {hn_residual:.1e}, drift tfim {:.1e} hn {:.1e}",
            gauge.kappa, gauge.hopping, tfim_drift.value, hn_drift.value
        ),
    );
}

/// Consecutive means never rise by more than two combined standard errors.
fn decreasing(b: &Benchmark, segments: &[usize], method: &str) -> bool {
    let row = |r: usize| b.summary.iter().find(|s| s.r == r && s.method == method).unwrap();
    segments.windows(2).all(|w| {
        let (x, y) = (row(w[0]), row(w[1]));
        let se = (x.std.powi(2) / x.count as f64 + y.std.powi(2) / y.count as f64).sqrt();
        y.mean <= x.mean + 2.0 * se
    })
}

fn benchmark_summary(cfg: &ExperimentConfig) -> (Benchmark, f64, bool, String) {
    let b = with_threads(None, || run_benchmark(cfg)).unwrap().unwrap();
    let reductions: Vec<f64> = cfg
        .segments
        .iter()
        .map(|&r| {
            let (base, prot) = (b.mean(r, BASELINE).unwrap(), b.mean(r, PROTECTED).unwrap());
            (base - prot) / base
        })
        .collect();
    let mean = reductions.iter().sum::<f64>() / reductions.len() as f64;
    let monotone = decreasing(&b, &cfg.segments, BASELINE) && decreasing(&b, &cfg.segments, PROTECTED);
    let curve: Vec<String> = cfg
        .segments
        .iter()
        .map(|&r| format!("r={r}: {:.4}/{:.4}", b.mean(r, BASELINE).unwrap(), b.mean(r, PROTECTED).unwrap()))
        .collect();
    (b, mean, monotone, curve.join(" "))
}

#[test]
fn criterion_08_error_versus_segments() {
    let clock = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for (name, text) in [("tfim", include_str!("../../../configs/tfim_benchmark.cfg")), ("hn", include_str!("../../../configs/hn_benchmark.cfg"))] {
        let cfg = ExperimentConfig::from_str(text).unwrap();
        assert_eq!(cfg.seeds, 40);
        let (_, reduction, monotone, curve) = benchmark_summary(&cfg);
        ok &= reduction >= 0.10 && monotone;
        details.push(format!("{name}: mean reduction {:.1}%, decreasing {monotone}; {curve}", 100.0 * reduction));
    }
    ok &= clock.elapsed().as_secs_f64() < 1800.0;
    verdict(8, "error versus segments", ok, clock, details.join(" | "));
}

fn trace_checks(t: &Traces, segments: &[usize]) -> (f64, &'static str, bool, String) {
    let exact: Vec<_> = t.exact().collect();
    let eta0 = exact[0].eta;
    // Relative drift, or absolute drift when the conserved value is zero
    // (TFIM from |0…0⟩: ⟨0…0|𝒫A|0…0⟩ = 0).
    let drift = exact.iter().map(|p| (p.eta - eta0).abs()).fold(0.0, f64::max);
    let (flat, kind) = if eta0.abs() > 1e-12 { (drift / eta0.abs(), "relative") } else { (drift, "absolute") };
    let mut monotone = true;
    let mut parts = Vec::new();
    for method in [BASELINE, PROTECTED] {
        let gaps: Vec<f64> = segments.iter().map(|&r| t.mean_gap(r, method).unwrap()).collect();
        monotone &= gaps.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("{method} gaps {gaps:.4?}"));
    }
    (flat, kind, monotone, parts.join(", "))
}

/// Mean of the current column over `t ≥ T/2`.
fn late_current(t: &Traces, method: &str, r: Option<usize>, t_final: f64) -> f64 {
    let col = t.columns.iter().position(|c| *c == "current").unwrap();
    let vals: Vec<f64> = t
        .rows
        .iter()
        .filter(|row| row.method == method && row.r == r && row.point.t >= 0.5 * t_final)
        .map(|row| row.point.values[col])
        .collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

#[test]
fn criterion_09_observable_traces() {
    let clock = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for (name, text) in [("tfim", include_str!("../../../configs/tfim_traces.cfg")), ("hn", include_str!("../../../configs/hn_traces.cfg"))] {
        let cfg = ExperimentConfig::from_str(text).unwrap();
        assert_eq!(cfg.seeds, 40);
        let t = with_threads(None, || run_traces(&cfg)).unwrap().unwrap();
        let (flat, kind, monotone, gaps) = trace_checks(&t, &cfg.trace_segments);
        ok &= flat <= 1e-8 && monotone;
        let mut line = format!("{name}: exact eta drift {flat:.1e} ({kind}), gaps decreasing {monotone}, {gaps}");
        if name == "hn" {
            // Positive γ favours hopping towards the last site: the bond
            // current (positive for flow towards site 1) must settle negative.
            let r_max = *cfg.trace_segments.last().unwrap();
            let exact = late_current(&t, EXACT, None, cfg.model.t_final);
            let randomized = late_current(&t, BASELINE, Some(r_max), cfg.model.t_final);
            let protected = late_current(&t, PROTECTED, Some(r_max), cfg.model.t_final);
            ok &= exact < 0.0 && randomized < 0.0 && protected < 0.0;
            line.push_str(&format!(", late current exact {exact:.4} rand {randomized:.4} sym {protected:.4}"));
        }
        details.push(line);
    }
    ok &= clock.elapsed().as_secs_f64() < 900.0;
    verdict(9, "observable traces", ok, clock, details.join(" | "));
}

#[test]
fn criterion_10_resource_estimator() {
    let clock = Instant::now();
    let inputs = ResourceInputs {
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
    };
    let rep = resource_estimate(&inputs).unwrap();
    // Hand values at β = 1/2, ε = 10⁻², T = ‖L‖ = λ = 1:
    // K = 2^{54/8} = 107.6347, ⌈K e⌉ = 293 panels, h₁ = K/293, Q = 8,
    // M = 2·293·8 = 4688, r = ⌈4/0.01⌉ = 400.
    let mut ok = (rep.k_max - 107.634_7).abs() < 1e-4
        && rep.panels_per_side == 293
        && (rep.h1 - 0.367_354).abs() < 1e-6
        && rep.points_per_panel == 8
        && rep.nodes == 4688
        && rep.segments == 400
        && required_segments(1.0, 0.01).unwrap() == 400;
    // S = ⌈4 ln 40 / 0.02⌉ = ⌈737.78⌉ for W = ‖O‖ = 1, ε = 0.1, δ = 0.05.
    ok &= required_samples(1.0, 1.0, 0.1, 0.05).unwrap() == 738;
    ok &= rep.samples == ((2.0 * rep.pair_weight).powi(2) * 40f64.ln() / 2e-4).ceil() as u64;
    // Integrated norm never exceeds T times the sup norm.
    let mut rng = stream(2024, 0);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..200 {
        let t_final = 0.1 + 3.0 * uniform(&mut rng);
        let schedules = [
            Schedule::Polynomial(vec![uniform(&mut rng) - 0.5, 2.0 * uniform(&mut rng) - 1.0, uniform(&mut rng)]),
            Schedule::Exponential { rate: 3.0 * uniform(&mut rng) - 1.5 },
            Schedule::Sinusoid { offset: uniform(&mut rng), amplitude: uniform(&mut rng), omega: 6.0 * uniform(&mut rng), phase: uniform(&mut rng) },
        ];
        let terms = ["XI", "ZZ", "IY"]
            .iter()
            .zip(schedules)
            .map(|(label, schedule)| ScheduledTerm { coeff: C64::new(uniform(&mut rng) + 0.1, 0.0), string: PauliString::parse(label).unwrap(), schedule })
            .collect();
        let g = TimeDependentGenerator::new(2, terms, t_final).unwrap();
        let norms = time_norms(&g, 16);
        worst_ratio = worst_ratio.max(norms.integrated / norms.worst_case());
    }
    ok &= worst_ratio <= 1.0 && clock.elapsed().as_secs_f64() < 1.0;
    verdict(
        10,
        "resource estimator",
        ok,
        clock,
        format!("K {:.4}, h1 {:.6}, Q {}, M {}, r {}, S {}, max integrated/(T sup) {worst_ratio:.4}", rep.k_max, rep.h1, rep.points_per_panel, rep.nodes, rep.segments, rep.samples),
    );
}

#[test]
fn criterion_11_urcc_sanity() {
    let clock = Instant::now();
    let plus = StateVector::from_real(&[1.0, 1.0]).normalized();
    let x = PauliSum::from_labels(&[(ONE, "X")]).unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    for (alpha, t) in [(0.9, 1.0), (2.0, 1.0)] {
        let term = ScheduledTerm { coeff: C64::new(alpha, 0.0), string: PauliString::parse("Z").unwrap(), schedule: Schedule::Constant };
        let g = TimeDependentGenerator::new(1, vec![term], t).unwrap();
        let r = urcc_segments(&g).unwrap();
        assert_eq!(r, ((alpha * t) * (alpha * t)).ceil() as usize);
        let est = urcc_estimate(&g, &plus, &x, 10_000, r, 3, f64::INFINITY).unwrap();
        let exact = (2.0 * alpha * t).cos();
        ok &= (est.value - exact).abs() <= 3.0 * est.std_error;
        // Each sample is bounded by C²‖O‖‖u₀‖², and C ≤ e once r ≥ ‖α‖²₁,₁.
        for m in [1, 2, 4] {
            let e = urcc_estimate(&g, &plus, &x, 2_000, m * r, 5, f64::INFINITY).unwrap();
            ok &= e.normalization <= std::f64::consts::E && e.variance <= e.normalization.powi(4);
        }
        details.push(format!("alpha {alpha}: {:.4} +- {:.4} vs {exact:.4} (r = {r})", est.value, est.std_error));
    }
    ok &= clock.elapsed().as_secs_f64() < 120.0;
    verdict(11, "URCC sanity", ok, clock, details.join(", "));
}

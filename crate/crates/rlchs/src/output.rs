//! CSV writers. Floats use Rust's shortest round-trip formatting, so files
//! are byte-identical across runs with the same config and seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rlchs_core::linalg::StateVector;
use rlchs_core::resources::ResourceReport;

use crate::config::{ExperimentConfig, ObservableKind};
use crate::experiments::{Benchmark, ObservableRow, Simulation, Traces};
use crate::AppError;

pub fn observable_name(kind: ObservableKind) -> &'static str {
    match kind {
        ObservableKind::Magnetization => "magnetization",
        ObservableKind::GlobalSpin => "global_spin",
        ObservableKind::Current => "current",
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, csv::Writer<fs::File>), AppError> {
    fs::create_dir_all(dir).map_err(|e| AppError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let w = csv::Writer::from_path(&path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    Ok((path, w))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Run metadata that is allowed to differ between identical runs.
pub fn write_metadata(dir: &Path, cfg: &ExperimentConfig, command: &str, lines: &[(String, String)]) -> Result<PathBuf, AppError> {
    fs::create_dir_all(dir)?;
    let path = dir.join("metadata.txt");
    let mut f = fs::File::create(&path)?;
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(f, "command = {command}")?;
    writeln!(f, "unix_time = {stamp}")?;
    writeln!(f, "master_seed = {}", cfg.master_seed)?;
    writeln!(f, "version = {}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in lines {
        writeln!(f, "{k} = {v}")?;
    }
    Ok(path)
}

/// `trials.csv` (r, seed, method, error, trace_distance, std_error_norm)
/// and `summary.csv` (r, method, mean, std, count).
pub fn write_benchmark(dir: &Path, b: &Benchmark) -> Result<Vec<PathBuf>, AppError> {
    let (trials, mut w) = create(dir, "trials.csv")?;
    w.write_record(["r", "seed", "method", "error", "trace_distance", "std_error_norm"])?;
    for x in &b.records {
        w.write_record([x.r.to_string(), x.seed.to_string(), x.method.into(), x.error.to_string(), x.trace_distance.to_string(), x.std_error_norm.to_string()])?;
    }
    w.flush()?;
    let (summary, mut w) = create(dir, "summary.csv")?;
    w.write_record(["r", "method", "mean", "std", "count"])?;
    for s in &b.summary {
        w.write_record([s.r.to_string(), s.method.into(), s.mean.to_string(), s.std.to_string(), s.count.to_string()])?;
    }
    w.flush()?;
    Ok(vec![trials, summary])
}

/// `simulate.csv` per seed plus `state.csv` with the first seed's estimate
/// next to the normalized exact state.
pub fn write_simulation(dir: &Path, s: &Simulation) -> Result<Vec<PathBuf>, AppError> {
    let (trials, mut w) = create(dir, "simulate.csv")?;
    w.write_record(["r", "seed", "method", "error", "trace_distance", "std_error_norm"])?;
    for x in &s.records {
        w.write_record([x.r.to_string(), x.seed.to_string(), x.method.into(), x.error.to_string(), x.trace_distance.to_string(), x.std_error_norm.to_string()])?;
    }
    w.flush()?;
    let (state, mut w) = create(dir, "state.csv")?;
    w.write_record(["index", "estimate_re", "estimate_im", "exact_re", "exact_im"])?;
    let unit = |v: &StateVector| if v.norm() > 0.0 { v.normalized() } else { v.clone() };
    let (est, exact) = (unit(&s.estimate), unit(&s.exact));
    for (i, (a, b)) in est.amplitudes().iter().zip(exact.amplitudes()).enumerate() {
        w.write_record([i.to_string(), a.re.to_string(), a.im.to_string(), b.re.to_string(), b.im.to_string()])?;
    }
    w.flush()?;
    Ok(vec![trials, state])
}

/// `traces.csv` (method, r, seed, t, observables…, eta_expectation,
/// state_norm; r and seed empty for the exact trace) and `gaps.csv`.
pub fn write_traces(dir: &Path, t: &Traces) -> Result<Vec<PathBuf>, AppError> {
    let (traces, mut w) = create(dir, "traces.csv")?;
    let mut header = vec!["method", "r", "seed", "t"];
    header.extend(&t.columns);
    header.extend(["eta_expectation", "state_norm"]);
    w.write_record(&header)?;
    for row in &t.rows {
        let mut rec = vec![row.method.to_string(), opt(row.r), opt(row.seed), row.point.t.to_string()];
        rec.extend(row.point.values.iter().map(f64::to_string));
        rec.push(row.point.eta.to_string());
        rec.push(row.point.norm.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    let (gaps, mut w) = create(dir, "gaps.csv")?;
    w.write_record(["r", "seed", "method", "max_gap"])?;
    for g in &t.gaps {
        w.write_record([g.r.to_string(), g.seed.to_string(), g.method.into(), g.max_gap.to_string()])?;
    }
    w.flush()?;
    Ok(vec![traces, gaps])
}

/// `observable.csv` (part, S, estimate, stderr, exact_reference, mode).
pub fn write_observable(dir: &Path, rows: &[ObservableRow]) -> Result<Vec<PathBuf>, AppError> {
    let (path, mut w) = create(dir, "observable.csv")?;
    w.write_record(["part", "S", "estimate", "stderr", "exact_reference", "mode"])?;
    for r in rows {
        w.write_record([r.part.into(), r.samples.to_string(), r.estimate.to_string(), r.std_error.to_string(), r.exact_reference.to_string(), r.mode.into()])?;
    }
    w.flush()?;
    Ok(vec![path])
}

/// `resources.csv` (quantity, value, formula).
pub fn write_resources(dir: &Path, rep: &ResourceReport) -> Result<Vec<PathBuf>, AppError> {
    let (path, mut w) = create(dir, "resources.csv")?;
    w.write_record(["quantity", "value", "formula"])?;
    for (q, v, f) in rep.rows() {
        w.write_record([q.to_string(), v.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(vec![path])
}

//! `rlchs` command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Estimator, ExperimentConfig, Protection};
use crate::experiments::{run_benchmark, run_observable, run_resources, run_simulate, run_traces, with_threads};
use crate::{output, validate, AppError};

#[derive(Debug, Parser)]
#[command(name = "rlchs", version, about = "Randomized LCHS simulation, benchmarks and resource estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the configured state and report the final error against the dense oracle.
    Simulate(Common),
    /// Estimate an observable expectation on the final state.
    Observable(Common),
    /// Error-versus-segments sweep over seeds, baseline and protected.
    Benchmark(Common),
    /// Exact and randomized observable traces over time.
    Traces(Common),
    /// Closed-form resource table.
    Resources(Common),
    /// Run the built-in invariant suite.
    Validate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// INI experiment file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `[sampler] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Protection mode (none, paired, paired-literal, alternate) or, for
    /// `observable`, the estimator (exact, cqdrift, shot, urcc).
    #[arg(long)]
    pub mode: Option<String>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

impl Common {
    fn config(&self, observable: bool) -> Result<(ExperimentConfig, PathBuf), AppError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(mode) = &self.mode {
            if observable {
                cfg.estimator = mode.parse::<Estimator>()?;
            } else {
                cfg.protection = mode.parse::<Protection>()?;
            }
        }
        if self.threads == Some(0) {
            return Err(AppError::Usage("--threads must be positive".into()));
        }
        cfg.check()?;
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
        Ok((cfg, out))
    }
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

/// Executes a parsed command.
pub fn run(cli: Cli) -> Result<(), AppError> {
    let (name, common) = match &cli.command {
        Command::Validate => {
            let checks = validate::run_all();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(AppError::Numerical(rlchs_core::error::Error::Contract(format!("{failed} invariant check(s) failed"))));
            }
            return Ok(());
        }
        Command::Simulate(c) => ("simulate", c),
        Command::Observable(c) => ("observable", c),
        Command::Benchmark(c) => ("benchmark", c),
        Command::Traces(c) => ("traces", c),
        Command::Resources(c) => ("resources", c),
    };
    let (cfg, out) = common.config(name == "observable")?;
    let threads = common.threads;
    let clock = std::time::Instant::now();
    let mut meta = vec![("threads".to_string(), threads.map_or("auto".into(), |t| t.to_string()))];
    let paths = match &cli.command {
        Command::Simulate(_) => {
            let s = with_threads(threads, || run_simulate(&cfg))??;
            for x in &s.records {
                println!("seed {} {} r={} error={:.6}", x.seed, x.method, x.r, x.error);
            }
            output::write_simulation(&out, &s)?
        }
        Command::Observable(_) => {
            let rows = with_threads(threads, || run_observable(&cfg))??;
            for r in &rows {
                println!("{} {} = {:.6} +- {:.6} (exact {:.6})", r.mode, r.part, r.estimate, r.std_error, r.exact_reference);
            }
            output::write_observable(&out, &rows)?
        }
        Command::Benchmark(_) => {
            let b = with_threads(threads, || run_benchmark(&cfg))??;
            for s in &b.summary {
                println!("r={:<5} {:<14} mean={:.6} std={:.6}", s.r, s.method, s.mean, s.std);
            }
            meta.push(("grid_nodes".into(), b.grid_nodes.to_string()));
            for x in &b.records {
                meta.push((format!("wall_seconds.r{}.seed{}.{}", x.r, x.seed, x.method), format!("{:.6}", x.wall_seconds)));
            }
            output::write_benchmark(&out, &b)?
        }
        Command::Traces(_) => {
            let t = with_threads(threads, || run_traces(&cfg))??;
            for &r in &cfg.trace_segments {
                for m in [crate::experiments::BASELINE, crate::experiments::PROTECTED] {
                    if let Some(g) = t.mean_gap(r, m) {
                        println!("r={r:<5} {m:<14} mean max gap={g:.6}");
                    }
                }
            }
            output::write_traces(&out, &t)?
        }
        Command::Resources(_) => {
            let rep = run_resources(&cfg)?;
            for (q, v, f) in rep.rows() {
                println!("{q:<18} {:<20} {f}", v.to_string());
            }
            output::write_resources(&out, &rep)?
        }
        Command::Validate => unreachable!("handled above"),
    };
    meta.push(("wall_seconds".into(), format!("{:.3}", clock.elapsed().as_secs_f64())));
    let meta_path = output::write_metadata(&out, &cfg, name, &meta)?;
    report(&paths);
    report(&[meta_path]);
    Ok(())
}

/// Parses `argv` and runs it, returning the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

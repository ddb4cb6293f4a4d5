//! INI experiment configuration.
//!
//! ```ini
//! schema = 1
//!
//! [model]
//! kind = tfim          ; tfim | hn
//! sites = 5
//! coupling = 1.0       ; J
//! field = 0.5          ; g, tfim only
//! gamma = 0.3
//! potential = 0.5      ; V, hn only
//! dynamics = schrodinger
//! t_final = 2.0
//! initial = zero       ; zero | neel | basis index
//!
//! [lchs]
//! beta = 0.8
//! eps = 0.01
//!
//! [sampler]
//! segments = 16, 32, 64, 128, 256, 512, 1024
//! shots = 1000
//! seeds = 40
//! seed = 0
//! protection = paired  ; none | paired | paired-literal | alternate
//! window = 8
//!
//! [traces]
//! segments = 64, 256, 1024
//! shots = 500
//!
//! [observable]
//! observable = magnetization ; magnetization | global_spin | current
//! estimator = exact          ; exact | cqdrift | shot | urcc
//! samples = 1000
//! delta = 0.05
//!
//! [output]
//! dir = out
//! ```
//!
//! Every key is optional; unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::str::FromStr;

use ini::Ini;
use rlchs_core::models::Dynamics;

use crate::AppError;

pub const SCHEMA_VERSION: u32 = 1;

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["schema"]),
    ("model", &["kind", "sites", "coupling", "field", "gamma", "potential", "dynamics", "t_final", "initial"]),
    ("lchs", &["beta", "eps"]),
    ("sampler", &["segments", "shots", "seeds", "seed", "protection", "window"]),
    ("traces", &["segments", "shots"]),
    ("observable", &["observable", "estimator", "samples", "delta"]),
    ("output", &["dir"]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Tfim,
    Hn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// All qubits in `|0⟩`.
    Zero,
    /// Alternating `0101…` from the first qubit.
    Neel,
    Basis(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protection {
    None,
    Paired,
    PairedLiteral,
    Alternate,
}

impl Protection {
    pub fn label(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Paired => "paired",
            Self::PairedLiteral => "paired-literal",
            Self::Alternate => "alternate",
        }
    }
}

impl FromStr for Protection {
    type Err = AppError;
    fn from_str(s: &str) -> Result<Self, AppError> {
        Ok(match s {
            "none" => Self::None,
            "paired" => Self::Paired,
            "paired-literal" => Self::PairedLiteral,
            "alternate" => Self::Alternate,
            _ => return Err(usage(format!("unknown protection mode `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservableKind {
    Magnetization,
    GlobalSpin,
    Current,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Exact,
    Cqdrift,
    Shot,
    Urcc,
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Cqdrift => "cqdrift",
            Self::Shot => "shot",
            Self::Urcc => "urcc",
        }
    }
}

impl FromStr for Estimator {
    type Err = AppError;
    fn from_str(s: &str) -> Result<Self, AppError> {
        Ok(match s {
            "exact" => Self::Exact,
            "cqdrift" => Self::Cqdrift,
            "shot" => Self::Shot,
            "urcc" => Self::Urcc,
            _ => return Err(usage(format!("unknown estimator `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub sites: usize,
    pub coupling: f64,
    pub field: f64,
    pub gamma: f64,
    pub potential: f64,
    pub dynamics: Dynamics,
    pub t_final: f64,
    pub initial: InitialState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub beta: f64,
    pub eps: f64,
    /// Ascending segment counts for the benchmark sweep.
    pub segments: Vec<usize>,
    pub shots: u64,
    pub seeds: u64,
    pub master_seed: u64,
    pub protection: Protection,
    pub window: usize,
    pub trace_segments: Vec<usize>,
    pub trace_shots: u64,
    pub observable: ObservableKind,
    pub estimator: Estimator,
    pub samples: u64,
    pub delta: f64,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig {
                kind: ModelKind::Tfim,
                sites: 5,
                coupling: 1.0,
                field: 0.5,
                gamma: 0.3,
                potential: 0.5,
                dynamics: Dynamics::Schrodinger,
                t_final: 2.0,
                initial: InitialState::Zero,
            },
            beta: 0.8,
            eps: 1e-2,
            segments: vec![16, 32, 64, 128, 256, 512, 1024],
            shots: 1000,
            seeds: 40,
            master_seed: 0,
            protection: Protection::Paired,
            window: 8,
            trace_segments: vec![64, 256, 1024],
            trace_shots: 500,
            observable: ObservableKind::Magnetization,
            estimator: Estimator::Exact,
            samples: 1000,
            delta: 0.05,
            out_dir: "out".into(),
        }
    }
}

fn usage(msg: String) -> AppError {
    AppError::Usage(msg)
}

fn parse<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T, AppError> {
    raw.trim().parse().map_err(|_| usage(format!("[{section}] {key}: cannot parse `{raw}`")))
}

fn parse_list(section: &str, key: &str, raw: &str) -> Result<Vec<usize>, AppError> {
    raw.split(',').map(|v| parse(section, key, v)).collect()
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, AppError> {
        let ini = Ini::load_from_str(text).map_err(|e| usage(format!("config syntax: {e}")))?;
        let mut table: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (section, props) in ini.iter() {
            let name = section.unwrap_or("").to_string();
            let Some((_, keys)) = KNOWN.iter().find(|(s, _)| *s == name) else {
                return Err(usage(format!("unknown section [{name}]")));
            };
            for (k, v) in props.iter() {
                if !keys.contains(&k) {
                    return Err(usage(format!("unknown key `{k}` in [{name}]")));
                }
                table.entry(name.clone()).or_default().insert(k.to_string(), v.to_string());
            }
        }
        let get = |s: &str, k: &str| table.get(s).and_then(|m| m.get(k)).map(String::as_str);
        match get("", "schema") {
            Some(v) if parse::<u32>("", "schema", v)? == SCHEMA_VERSION => {}
            Some(v) => return Err(usage(format!("unsupported schema `{v}`, expected {SCHEMA_VERSION}"))),
            None => return Err(usage("missing `schema = 1`".into())),
        }

        let mut cfg = Self::default();
        let m = &mut cfg.model;
        if let Some(v) = get("model", "kind") {
            m.kind = match v {
                "tfim" => ModelKind::Tfim,
                "hn" => ModelKind::Hn,
                _ => return Err(usage(format!("unknown model `{v}`"))),
            };
            if m.kind == ModelKind::Hn {
                m.sites = 8;
                m.initial = InitialState::Neel;
            }
        }
        macro_rules! set {
            ($field:expr, $s:literal, $k:literal) => {
                if let Some(v) = get($s, $k) {
                    $field = parse($s, $k, v)?;
                }
            };
        }
        set!(m.sites, "model", "sites");
        set!(m.coupling, "model", "coupling");
        set!(m.field, "model", "field");
        set!(m.gamma, "model", "gamma");
        set!(m.potential, "model", "potential");
        set!(m.t_final, "model", "t_final");
        if let Some(v) = get("model", "dynamics") {
            m.dynamics = match v {
                "schrodinger" => Dynamics::Schrodinger,
                "dissipative" => Dynamics::Dissipative,
                _ => return Err(usage(format!("unknown dynamics `{v}`"))),
            };
        }
        if let Some(v) = get("model", "initial") {
            m.initial = match v {
                "zero" => InitialState::Zero,
                "neel" => InitialState::Neel,
                _ => InitialState::Basis(parse("model", "initial", v)?),
            };
        }
        set!(cfg.beta, "lchs", "beta");
        set!(cfg.eps, "lchs", "eps");
        if let Some(v) = get("sampler", "segments") {
            cfg.segments = parse_list("sampler", "segments", v)?;
        }
        set!(cfg.shots, "sampler", "shots");
        set!(cfg.seeds, "sampler", "seeds");
        set!(cfg.master_seed, "sampler", "seed");
        set!(cfg.protection, "sampler", "protection");
        set!(cfg.window, "sampler", "window");
        if let Some(v) = get("traces", "segments") {
            cfg.trace_segments = parse_list("traces", "segments", v)?;
        }
        set!(cfg.trace_shots, "traces", "shots");
        if let Some(v) = get("observable", "observable") {
            cfg.observable = match v {
                "magnetization" => ObservableKind::Magnetization,
                "global_spin" => ObservableKind::GlobalSpin,
                "current" => ObservableKind::Current,
                _ => return Err(usage(format!("unknown observable `{v}`"))),
            };
        }
        set!(cfg.estimator, "observable", "estimator");
        set!(cfg.samples, "observable", "samples");
        set!(cfg.delta, "observable", "delta");
        if let Some(v) = get("output", "dir") {
            cfg.out_dir = v.to_string();
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    /// Structural invariants: ascending non-empty schedules, positive counts.
    pub fn check(&self) -> Result<(), AppError> {
        for (name, list) in [("sampler", &self.segments), ("traces", &self.trace_segments)] {
            if list.is_empty() || list[0] == 0 || list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage(format!("[{name}] segments must be a non-empty strictly ascending list of positive counts")));
            }
        }
        if self.seeds == 0 || self.shots == 0 || self.trace_shots == 0 || self.samples == 0 {
            return Err(usage("seeds, shots and samples must be positive".into()));
        }
        if self.model.sites == 0 {
            return Err(usage("[model] sites must be positive".into()));
        }
        if self.model.kind == ModelKind::Tfim && self.observable == ObservableKind::Current {
            return Err(usage("the current observable needs kind = hn".into()));
        }
        Ok(())
    }
}

//! Run configuration, manifests and the command implementations behind the
//! `spike-cluster` binary. Every command writes JSON (machine) and CSV (plots)
//! under the output directory plus a `manifest_<command>.json`.

mod commands;
mod config;

pub use commands::{canonical_json, constants_json, load_or_solve_profile, ConstantsRecord};
pub use config::{
    FamilySection, GridSection, LadderSection, LemmaSection, MaxminSection, ProblemSection, ReduceSection, RunConfig,
    SolverSection,
};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium_checker::EquilibriumError;
use crate::ground_profile::ProfileError;
use crate::io_util::atomic_write;
use crate::ls_pde::LsError;
use crate::potential_model::PotentialError;
use crate::reduced_model::ReducedError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("profile cache miss: {} (run without --cache-only to build it)", .0.display())]
    CacheMiss(PathBuf),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Reduced(#[from] ReducedError),
    #[error(transparent)]
    Ls(#[from] LsError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input (including a missing cache under `--cache-only`), 3 for
    /// numerical or I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::CacheMiss(_) => EXIT_VALIDATION,
            CliError::Profile(ProfileError::InvalidInput(_)) => EXIT_VALIDATION,
            CliError::Potential(_) => EXIT_VALIDATION,
            CliError::Reduced(ReducedError::BadShape(_) | ReducedError::Potential(_)) => EXIT_VALIDATION,
            CliError::Ls(
                LsError::InvalidParameters(_)
                | LsError::UnderResolved { .. }
                | LsError::SpikeNearBoundary { .. }
                | LsError::DimensionMismatch { .. }
                | LsError::Potential(_),
            ) => EXIT_VALIDATION,
            CliError::Equilibrium(EquilibriumError::InvalidRequest(_) | EquilibriumError::BadDimension(_)) => {
                EXIT_VALIDATION
            }
            _ => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Profile,
    Constants,
    Reduce,
    Search,
    Maxmin,
    Pde,
    Lsreduce,
    ExpansionTest,
    LemmaCheck,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Profile,
        Command::Constants,
        Command::Reduce,
        Command::Search,
        Command::Maxmin,
        Command::Pde,
        Command::Lsreduce,
        Command::ExpansionTest,
        Command::LemmaCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Constants => "constants",
            Command::Reduce => "reduce",
            Command::Search => "search",
            Command::Maxmin => "maxmin",
            Command::Pde => "pde",
            Command::Lsreduce => "lsreduce",
            Command::ExpansionTest => "expansion-test",
            Command::LemmaCheck => "lemma-check",
        }
    }
}

/// Flags shared by all commands; `Some` values override the config file.
#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub cache_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub scalars: BTreeMap<String, f64>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub toolkit_version: String,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    /// `name → value` over all stages, prefixed by the stage name.
    pub fn scalars(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for s in &self.stages {
            for (k, v) in &s.scalars {
                out.insert(format!("{}.{k}", s.name), *v);
            }
        }
        out
    }
}

/// Collects stage records while a command runs.
pub(crate) struct Recorder {
    out: PathBuf,
    stages: Vec<StageRecord>,
    current: Option<(StageRecord, Instant)>,
}

impl Recorder {
    fn new(out: &Path) -> Self {
        Recorder { out: out.to_path_buf(), stages: Vec::new(), current: None }
    }

    pub(crate) fn stage(&mut self, name: impl Into<String>) {
        self.finish_stage();
        let rec = StageRecord { name: name.into(), outputs: Vec::new(), scalars: BTreeMap::new(), wall_clock_s: 0.0 };
        self.current = Some((rec, Instant::now()));
    }

    fn finish_stage(&mut self) {
        if let Some((mut rec, t)) = self.current.take() {
            rec.wall_clock_s = t.elapsed().as_secs_f64();
            self.stages.push(rec);
        }
    }

    pub(crate) fn scalar(&mut self, key: impl Into<String>, value: f64) {
        if let Some((rec, _)) = self.current.as_mut() {
            rec.scalars.insert(key.into(), value);
        }
    }

    /// Atomically writes `bytes` to `out/<rel>` and records it.
    pub(crate) fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        atomic_write(&self.out.join(rel), bytes)?;
        if let Some((rec, _)) = self.current.as_mut() {
            rec.outputs.push(rel.to_string());
        }
        Ok(())
    }

    fn into_stages(mut self) -> Vec<StageRecord> {
        self.finish_stage();
        self.stages
    }
}

/// Resolves the config (file, then flag overrides) and validates it.
pub fn resolve_config(opts: &GlobalOptions) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &opts.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command and writes its manifest; returns the manifest.
pub fn run(command: Command, opts: &GlobalOptions) -> Result<RunManifest, CliError> {
    let cfg = resolve_config(opts)?;
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be ≥ 1".into()));
        }
        // A second call in the same process keeps the first pool; that is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    std::fs::create_dir_all(&cfg.out)?;
    let mut rec = Recorder::new(&cfg.out);
    commands::dispatch(command, &cfg, opts.cache_only, &mut rec)?;
    let manifest = RunManifest {
        command,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        stages: rec.into_stages(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    atomic_write(&cfg.out.join(format!("manifest_{}.json", command.name())), json.as_bytes())?;
    Ok(manifest)
}

//! Command-line front end for the teacher-student benchmark.
//!
//! Each verb reads a flat config, runs the matching harness entry point and
//! writes deterministic CSV/JSON into the output directory. Timestamps only
//! ever go to `meta.json`.

pub mod config;
pub mod output;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ipl_core::bench::{self, Ensemble, ExperimentConfig, SweepSummary};
use ipl_core::model::Shots;
use ipl_core::optimizers::OptimizerKind;
use serde_json::{json, Map, Value};
use thiserror::Error;

pub use config::{parse_config, parse_config_str};

pub const DEFAULT_SHOT_VALUES: [u32; 4] = [10, 100, 1000, 10000];
pub const DEFAULT_DEPHASING_VALUES: [f64; 5] = [0.0, 0.02, 0.05, 0.1, 0.2];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    /// 1 for usage/config/IO problems, 2 for numeric aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 2,
            _ => 1,
        }
    }
}

impl From<ipl_core::Error> for CliError {
    fn from(err: ipl_core::Error) -> Self {
        match err {
            ipl_core::Error::Config { key, reason } => CliError::Config {
                key: key.to_string(),
                reason,
            },
            ipl_core::Error::Usage(msg) => CliError::Usage(msg),
            ipl_core::Error::Numeric(msg) => CliError::Numeric(msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Train,
    Compare,
    SweepShots,
    SweepDephasing,
}

impl Verb {
    pub fn label(self) -> &'static str {
        match self {
            Verb::Train => "train",
            Verb::Compare => "compare",
            Verb::SweepShots => "sweep-shots",
            Verb::SweepDephasing => "sweep-dephasing",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Verb {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Verb::Train),
            "compare" => Ok(Verb::Compare),
            "sweep-shots" => Ok(Verb::SweepShots),
            "sweep-dephasing" => Ok(Verb::SweepDephasing),
            other => Err(CliError::Usage(format!("unknown verb `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliCommand {
    pub verb: Verb,
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    pub overrides: Vec<String>,
    /// Sweep points; `None` selects the verb's defaults.
    pub sweep_values: Option<Vec<String>>,
}

/// How a command finished. `partial` means at least one ensemble member
/// aborted and the outputs only cover the completed ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<String>,
    pub partial: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.partial {
            2
        } else {
            0
        }
    }
}

fn parse_values<T: FromStr>(raw: &[String]) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    raw.iter()
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|e| CliError::Usage(format!("bad sweep value `{v}`: {e}")))
        })
        .collect()
}

fn base_summary(verb: Verb, cfg: &ExperimentConfig) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("verb".into(), json!(verb.label()));
    map.insert("config".into(), output::config_echo(cfg));
    map.insert("config_hash".into(), json!(cfg.config_hash()));
    map.insert("dataset_seed".into(), json!(cfg.master_seed));
    map.insert("bce_targets".into(), json!("soft teacher probabilities"));
    map
}

fn sweep_json(summary: &SweepSummary) -> Value {
    json!({
        "variable": summary.variable.label(),
        "values": summary.values,
        "final_loss_mean": summary.final_loss_mean,
        "final_loss_std": summary.final_loss_std,
        "aborted": summary.aborted,
    })
}

fn run_train(cfg: &ExperimentConfig, files: &mut Vec<(String, String)>) -> Result<(Map<String, Value>, bool), CliError> {
    let ensemble = bench::run_ensemble(cfg)?;
    files.push(("history.csv".into(), output::history_csv(&ensemble)));
    let aborted = output::aborted_runs(&ensemble);
    let mut summary = base_summary(Verb::Train, cfg);
    let mut per_opt = Map::new();
    per_opt.insert(cfg.optimizer.label().into(), output::ensemble_stats(&ensemble));
    summary.insert("optimizers".into(), Value::Object(per_opt));
    let partial = !aborted.is_empty();
    summary.insert("aborted_runs".into(), Value::Array(aborted));
    Ok((summary, partial))
}

fn run_compare(cfg: &ExperimentConfig, files: &mut Vec<(String, String)>) -> Result<(Map<String, Value>, bool), CliError> {
    let dataset = bench::make_teacher_dataset(cfg, cfg.master_seed)?;
    let mut per_opt = Map::new();
    let mut aborted = Vec::new();
    for kind in OptimizerKind::ALL {
        let point = ExperimentConfig {
            optimizer: kind,
            ..cfg.clone()
        };
        let ensemble: Ensemble = bench::run_ensemble_on(&point, &dataset)?;
        files.push((format!("history_{}.csv", kind.label()), output::history_csv(&ensemble)));
        per_opt.insert(kind.label().into(), output::ensemble_stats(&ensemble));
        aborted.extend(output::aborted_runs(&ensemble));
    }
    let mut summary = base_summary(Verb::Compare, cfg);
    summary.insert("optimizers".into(), Value::Object(per_opt));
    let partial = !aborted.is_empty();
    summary.insert("aborted_runs".into(), Value::Array(aborted));
    Ok((summary, partial))
}

fn run_sweep(
    verb: Verb,
    cfg: &ExperimentConfig,
    sweep: SweepSummary,
    files: &mut Vec<(String, String)>,
) -> (Map<String, Value>, bool) {
    files.push(("sweep.csv".into(), output::sweep_csv(&sweep)));
    let mut summary = base_summary(verb, cfg);
    let mut per_opt = Map::new();
    per_opt.insert(cfg.optimizer.label().into(), sweep_json(&sweep));
    summary.insert("optimizers".into(), Value::Object(per_opt));
    summary.insert("loglog_slope".into(), json!(sweep.loglog_slope));
    let partial = sweep.aborted.iter().any(|&a| a > 0);
    (summary, partial)
}

/// Runs one verb and writes its outputs.
pub fn run_command(cmd: &CliCommand) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let cfg = parse_config(&cmd.config_path, &cmd.overrides)?;
    fs::create_dir_all(&cmd.output_dir).map_err(|e| CliError::Io {
        path: cmd.output_dir.display().to_string(),
        reason: e.to_string(),
    })?;

    let mut files: Vec<(String, String)> = Vec::new();
    let (mut summary, partial) = match cmd.verb {
        Verb::Train => run_train(&cfg, &mut files)?,
        Verb::Compare => run_compare(&cfg, &mut files)?,
        Verb::SweepShots => {
            let values = match &cmd.sweep_values {
                Some(raw) => parse_values::<u32>(raw)?,
                None => DEFAULT_SHOT_VALUES.to_vec(),
            };
            let mut sweep_cfg = cfg.clone();
            sweep_cfg.loss_kind = ipl_core::estimator::LossKind::Mse;
            let sweep = bench::sweep_shots(&sweep_cfg, &values)?;
            run_sweep(cmd.verb, &sweep_cfg, sweep, &mut files)
        }
        Verb::SweepDephasing => {
            let values = match &cmd.sweep_values {
                Some(raw) => parse_values::<f64>(raw)?,
                None => DEFAULT_DEPHASING_VALUES.to_vec(),
            };
            let mut sweep_cfg = cfg.clone();
            sweep_cfg.shots = Shots::Exact;
            let sweep = bench::sweep_dephasing(&sweep_cfg, &values)?;
            run_sweep(cmd.verb, &sweep_cfg, sweep, &mut files)
        }
    };
    summary.insert("partial".into(), json!(partial));

    for (name, contents) in &files {
        output::write_file(&cmd.output_dir, name, contents)?;
    }
    output::write_json(&cmd.output_dir, "summary.json", &Value::Object(summary))?;

    let mut names: Vec<String> = files.into_iter().map(|(n, _)| n).collect();
    names.push("summary.json".into());
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let meta = json!({
        "verb": cmd.verb.label(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "created_unix_seconds": now,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "config_path": cmd.config_path.display().to_string(),
        "overrides": cmd.overrides,
        "files": names,
    });
    output::write_json(&cmd.output_dir, "meta.json", &meta)?;
    names.push("meta.json".into());

    Ok(Outcome { files: names, partial })
}

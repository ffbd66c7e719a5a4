//! CSV and JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ipl_core::bench::{Ensemble, ExperimentConfig, SweepSummary};
use serde_json::{json, Map, Value};

use crate::CliError;

pub const HISTORY_HEADER: &str = "seed,optimizer,step,loss";
pub const SWEEP_HEADER: &str = "value,final_loss_mean,final_loss_std";

/// 17 significant digits, enough to round-trip any f64.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn history_csv(ensemble: &Ensemble) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in ensemble.records() {
        let _ = writeln!(out, "{},{},{},{}", r.seed, r.optimizer, r.step, format_number(r.loss));
    }
    out
}

pub fn sweep_csv(summary: &SweepSummary) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for ((v, m), s) in summary
        .values
        .iter()
        .zip(&summary.final_loss_mean)
        .zip(&summary.final_loss_std)
    {
        let _ = writeln!(out, "{},{},{}", format_number(*v), format_number(*m), format_number(*s));
    }
    out
}

pub fn config_echo(cfg: &ExperimentConfig) -> Value {
    let map: Map<String, Value> = cfg
        .key_values()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    Value::Object(map)
}

pub fn ensemble_stats(ensemble: &Ensemble) -> Value {
    let stats = ensemble.final_loss_stats();
    let curve: Vec<Value> = ensemble
        .step_stats()
        .iter()
        .map(|s| json!({ "step": s.step, "mean": s.mean, "std": s.std, "count": s.count }))
        .collect();
    json!({
        "final_loss_mean": stats.mean,
        "final_loss_std": stats.std,
        "completed": stats.completed,
        "aborted": stats.aborted,
        "per_step": curve,
    })
}

pub fn aborted_runs(ensemble: &Ensemble) -> Vec<Value> {
    ensemble
        .aborted()
        .map(|r| json!({ "optimizer": r.optimizer.label(), "seed": r.seed, "reason": r.abort }))
        .collect()
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, &text)
}

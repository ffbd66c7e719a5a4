//! Flat `key=value` config files.
//!
//! ```text
//! # comment
//! lambda = 0.2
//! shots = 1000     # or `exact`
//! ```
//!
//! Keys are the [`ExperimentConfig`] field names. Unknown or repeated keys
//! are rejected; command-line overrides are applied after the file.

use std::fs;
use std::path::Path;

use ipl_core::bench::ExperimentConfig;

use crate::CliError;

fn parse_line(line: &str) -> Option<&str> {
    let body = line.split_once('#').map_or(line, |(before, _)| before).trim();
    (!body.is_empty()).then_some(body)
}

fn split_assignment(text: &str) -> Result<(&str, &str), String> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{text}`"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("missing key in `{text}`"));
    }
    Ok((key, value.trim()))
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), CliError> {
    cfg.set(key, value).map_err(|e| CliError::Config {
        key: e.key,
        reason: e.reason,
    })
}

/// Parses config text (already read from disk). `origin` labels diagnostics.
pub fn parse_config_str(text: &str, origin: &str, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let Some(body) = parse_line(line) else { continue };
        let (key, value) =
            split_assignment(body).map_err(|e| CliError::Usage(format!("{origin}:{}: {e}", lineno + 1)))?;
        if seen.iter().any(|k| k == key) {
            return Err(CliError::Config {
                key: key.to_string(),
                reason: format!("repeated at {origin}:{}", lineno + 1),
            });
        }
        seen.push(key.to_string());
        apply(&mut cfg, key, value)?;
    }
    for ov in overrides {
        let (key, value) = split_assignment(ov).map_err(|e| CliError::Usage(format!("override: {e}")))?;
        apply(&mut cfg, key, value)?;
    }
    for warning in cfg.validate()? {
        log::warn!("{warning}");
    }
    Ok(cfg)
}

/// Reads `path` and applies `overrides` on top.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config_str(&text, &path.display().to_string(), overrides)
}

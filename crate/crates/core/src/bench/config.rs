//! Experiment configuration and its flat `key=value` representation.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::estimator::LossKind;
use crate::model::{Shots, BENCH_QUBITS};
use crate::optimizers::{AlgebraicMode, OptimizerKind};

/// A rejected `key=value` assignment.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("config key `{key}`: {reason}")]
pub struct KeyError {
    pub key: String,
    pub reason: String,
}

impl KeyError {
    fn new(key: &str, reason: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub teacher_depth: usize,
    pub student_depth: usize,
    pub n_points: usize,
    pub steps: usize,
    pub shots: Shots,
    pub lambda: f64,
    pub eta: f64,
    pub loss_kind: LossKind,
    pub p_deph: f64,
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub init_sigma: f64,
    pub optimizer: OptimizerKind,
    pub algebraic_mode: AlgebraicMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_qubits: BENCH_QUBITS,
            teacher_depth: 6,
            student_depth: 3,
            n_points: 16,
            steps: 50,
            shots: Shots::Finite(1000),
            lambda: 0.2,
            eta: 0.1,
            loss_kind: LossKind::Mse,
            p_deph: 0.0,
            ensemble_size: 10,
            master_seed: 0,
            init_sigma: 1.0,
            optimizer: OptimizerKind::Algebraic,
            algebraic_mode: AlgebraicMode::Probability,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, KeyError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| KeyError::new(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_real(key: &str, value: &str) -> std::result::Result<f64, KeyError> {
    let v: f64 = parse_num(key, value)?;
    if !v.is_finite() {
        return Err(KeyError::new(key, format!("`{value}` is not a finite number")));
    }
    Ok(v)
}

impl ExperimentConfig {
    /// Every accepted key, in canonical order.
    pub const KEYS: [&'static str; 15] = [
        "n_qubits",
        "teacher_depth",
        "student_depth",
        "n_points",
        "steps",
        "shots",
        "lambda",
        "eta",
        "loss_kind",
        "p_deph",
        "ensemble_size",
        "master_seed",
        "init_sigma",
        "optimizer",
        "algebraic_mode",
    ];

    /// Assigns one field from its textual form. Range checks happen in
    /// [`ExperimentConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), KeyError> {
        let value = value.trim();
        match key {
            "n_qubits" => self.n_qubits = parse_num(key, value)?,
            "teacher_depth" => self.teacher_depth = parse_num(key, value)?,
            "student_depth" => self.student_depth = parse_num(key, value)?,
            "n_points" => self.n_points = parse_num(key, value)?,
            "steps" => self.steps = parse_num(key, value)?,
            "shots" => {
                self.shots = if value.eq_ignore_ascii_case("exact") {
                    Shots::Exact
                } else {
                    Shots::Finite(parse_num(key, value)?)
                }
            }
            "lambda" => self.lambda = parse_real(key, value)?,
            "eta" => self.eta = parse_real(key, value)?,
            "loss_kind" => self.loss_kind = value.parse().map_err(|e: String| KeyError::new(key, e))?,
            "p_deph" => self.p_deph = parse_real(key, value)?,
            "ensemble_size" => self.ensemble_size = parse_num(key, value)?,
            "master_seed" => self.master_seed = parse_num(key, value)?,
            "init_sigma" => self.init_sigma = parse_real(key, value)?,
            "optimizer" => self.optimizer = value.parse().map_err(|e: String| KeyError::new(key, e))?,
            "algebraic_mode" => {
                self.algebraic_mode = value.parse().map_err(|e: String| KeyError::new(key, e))?
            }
            _ => return Err(KeyError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// `(key, value)` pairs in canonical order; values round-trip through
    /// [`ExperimentConfig::set`].
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.n_qubits.to_string(),
            self.teacher_depth.to_string(),
            self.student_depth.to_string(),
            self.n_points.to_string(),
            self.steps.to_string(),
            self.shots.to_string(),
            format!("{:?}", self.lambda),
            format!("{:?}", self.eta),
            self.loss_kind.to_string(),
            format!("{:?}", self.p_deph),
            self.ensemble_size.to_string(),
            self.master_seed.to_string(),
            format!("{:?}", self.init_sigma),
            self.optimizer.to_string(),
            self.algebraic_mode.to_string(),
        ];
        Self::KEYS.into_iter().zip(values).collect()
    }

    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.key_values() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Checks every range invariant and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n_qubits != BENCH_QUBITS {
            return Err(Error::config("n_qubits", format!("only {BENCH_QUBITS} qubits are supported")));
        }
        if self.student_depth == 0 {
            return Err(Error::config("student_depth", "must be at least 1"));
        }
        if self.n_points == 0 {
            return Err(Error::config("n_points", "must be at least 1"));
        }
        if self.steps == 0 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::config("ensemble_size", "must be at least 1"));
        }
        if self.shots == Shots::Finite(0) {
            return Err(Error::config("shots", "must be at least 1 or `exact`"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::config("lambda", "must be positive"));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::config("eta", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.p_deph) {
            return Err(Error::config("p_deph", format!("{} is outside [0, 1]", self.p_deph)));
        }
        if !(self.init_sigma.is_finite() && self.init_sigma >= 0.0) {
            return Err(Error::config("init_sigma", "must be non-negative"));
        }
        let mut warnings = Vec::new();
        if self.teacher_depth <= self.student_depth {
            warnings.push(format!(
                "teacher_depth {} is not deeper than student_depth {}",
                self.teacher_depth, self.student_depth
            ));
        }
        if self.teacher_depth == 0 {
            warnings.push("teacher_depth 0 gives encoding-only targets".to_string());
        }
        Ok(warnings)
    }
}

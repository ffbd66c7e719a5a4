//! Parameter-shift Jacobians, residuals and losses.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{CircuitModel, InputPoint, Shots};
use crate::rng::ShotSampler;

/// Dense row-major `N × P` matrix of `∂p_i/∂θ_j` estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl JacobianMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::usage("ragged Jacobian rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `Jᵀ v`.
    pub fn transpose_mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::usage(format!(
                "vector of length {} does not match {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &jij) in out.iter_mut().zip(self.row(i)) {
                *o += jij * vi;
            }
        }
        Ok(out)
    }

    /// `J v`.
    pub fn mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::usage(format!(
                "vector of length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `JᵀJ`, row-major `P × P`.
    pub fn gram(&self) -> Vec<f64> {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..p {
                for b in a..p {
                    g[a * p + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[a * p + b] = g[b * p + a];
            }
        }
        g
    }

    /// Multiplies row `i` by `scales[i]`.
    pub fn scale_rows(&mut self, scales: &[f64]) -> Result<()> {
        if scales.len() != self.rows {
            return Err(Error::usage("row scale count does not match rows"));
        }
        let cols = self.cols;
        for (row, &s) in self.data.chunks_mut(cols.max(1)).zip(scales) {
            row.iter_mut().for_each(|v| *v *= s);
        }
        Ok(())
    }
}

/// Parameter-shift Jacobian `J_ij = ½(p_i(θ + π/2 e_j) − p_i(θ − π/2 e_j))`.
///
/// In finite-shot mode every shifted evaluation takes an independent
/// binomial draw of `shots` shots (2NP draws in total) and is not clipped.
pub fn jacobian<R: Rng>(
    model: &CircuitModel,
    xs: &[InputPoint],
    shots: Shots,
    sampler: &mut ShotSampler<R>,
) -> Result<JacobianMatrix> {
    let p = model.n_params();
    if p == 0 {
        return Err(Error::usage("model has no parameters"));
    }
    if xs.is_empty() {
        return Err(Error::usage("no input points"));
    }
    if shots == Shots::Finite(0) {
        return Err(Error::config("shots", "must be at least 1"));
    }
    let mut jac = JacobianMatrix::zeros(xs.len(), p);
    let base = model.theta();
    let mut shifted = base.to_vec();
    for j in 0..p {
        shifted[j] = base[j] + FRAC_PI_2;
        let plus = model.with_theta(&shifted)?;
        shifted[j] = base[j] - FRAC_PI_2;
        let minus = model.with_theta(&shifted)?;
        shifted[j] = base[j];
        for (i, x) in xs.iter().enumerate() {
            let (pp, pm) = match shots {
                Shots::Exact => (plus.forward_exact(x)?, minus.forward_exact(x)?),
                Shots::Finite(s) => (
                    sampler.estimate(plus.forward_exact(x)?, s)?,
                    sampler.estimate(minus.forward_exact(x)?, s)?,
                ),
            };
            jac.set(i, j, 0.5 * (pp - pm));
        }
    }
    Ok(jac)
}

/// `r = y − ŷ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual(Vec<f64>);

impl Residual {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for Residual {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

pub fn residual(y: &[f64], y_hat: &[f64]) -> Result<Residual> {
    check_lengths(y, y_hat)?;
    Ok(Residual(y.iter().zip(y_hat).map(|(a, b)| a - b).collect()))
}

fn check_lengths(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::usage(format!(
            "{} targets but {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::usage("empty target vector"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Mse,
    Bce,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::Bce => "bce",
        })
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(LossKind::Mse),
            "bce" => Ok(LossKind::Bce),
            other => Err(format!("unknown loss `{other}` (expected mse or bce)")),
        }
    }
}

fn check_bce_domain(y_hat: &[f64]) -> Result<()> {
    match y_hat.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        Some(p) => Err(Error::numeric(format!(
            "BCE needs predictions strictly inside (0, 1), got {p}"
        ))),
        None => Ok(()),
    }
}

/// Mean loss over the dataset.
pub fn loss(kind: LossKind, y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_lengths(y, y_hat)?;
    let n = y.len() as f64;
    let total: f64 = match kind {
        LossKind::Mse => y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum(),
        LossKind::Bce => {
            check_bce_domain(y_hat)?;
            y.iter()
                .zip(y_hat)
                .map(|(&t, &p)| -(t * p.ln() + (1.0 - t) * (1.0 - p).ln()))
                .sum()
        }
    };
    let value = total / n;
    if !value.is_finite() {
        return Err(Error::numeric(format!("{kind} loss is {value}")));
    }
    // BCE with soft targets can round a hair below zero at y = ŷ ∈ {ε, 1−ε}.
    Ok(value.max(0.0))
}

/// `∂L̄/∂ŷ_i`.
pub fn loss_gradient_wrt_p(kind: LossKind, y: &[f64], y_hat: &[f64]) -> Result<Vec<f64>> {
    check_lengths(y, y_hat)?;
    let n = y.len() as f64;
    match kind {
        LossKind::Mse => Ok(y.iter().zip(y_hat).map(|(t, p)| -2.0 * (t - p) / n).collect()),
        LossKind::Bce => {
            check_bce_domain(y_hat)?;
            Ok(y.iter()
                .zip(y_hat)
                .map(|(t, p)| (p - t) / (n * p * (1.0 - p)))
                .collect())
        }
    }
}

fn check_open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::numeric(format!("logit needs p strictly inside (0, 1), got {p}")))
    }
}

/// `ln(p / (1 − p))`.
pub fn logit(p: f64) -> Result<f64> {
    check_open_unit(p)?;
    Ok((p / (1.0 - p)).ln())
}

pub fn inverse_logit(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `∂z/∂p = 1 / (p(1 − p))`.
pub fn logit_jacobian_scale(p: f64) -> Result<f64> {
    check_open_unit(p)?;
    Ok(1.0 / (p * (1.0 - p)))
}

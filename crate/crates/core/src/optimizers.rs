//! Parameter update rules.
//!
//! Gradient descent and Adam consume `∇θ L̄ = Jᵀ ∂L̄/∂ŷ`. The algebraic rule
//! consumes the residual directly and applies the Tikhonov-regularised
//! pseudo-inverse correction
//!
//! ```text
//! Δθ = (JᵀJ + λI)⁻¹ Jᵀ r,    θ ← θ + Δθ
//! ```
//!
//! which has no step size. [`Optimizer`] wraps all three behind one step call.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::{self, JacobianMatrix, LossKind, Residual};
use crate::model::clip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Gd,
    Adam,
    Algebraic,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Gd, OptimizerKind::Adam, OptimizerKind::Algebraic];

    pub fn label(self) -> &'static str {
        match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Algebraic => "algebraic",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(OptimizerKind::Gd),
            "adam" => Ok(OptimizerKind::Adam),
            "algebraic" => Ok(OptimizerKind::Algebraic),
            other => Err(format!("unknown optimizer `{other}` (expected gd, adam or algebraic)")),
        }
    }
}

/// Everything one training step has measured.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub jacobian: &'a JacobianMatrix,
    pub targets: &'a [f64],
    pub predictions: &'a [f64],
    pub loss: LossKind,
}

impl StepInput<'_> {
    /// Chain-rule gradient `Jᵀ ∂L̄/∂ŷ`.
    pub fn loss_gradient(&self) -> Result<Vec<f64>> {
        let dl_dp = estimator::loss_gradient_wrt_p(self.loss, self.targets, self.predictions)?;
        self.jacobian.transpose_mul(&dl_dp)
    }
}

pub trait Optimizer: Send {
    fn kind(&self) -> OptimizerKind;

    /// Returns the next parameter vector.
    fn step(&mut self, theta: &[f64], input: &StepInput<'_>) -> Result<Vec<f64>>;
}

fn check_same_len(theta: &[f64], grad: &[f64]) -> Result<()> {
    if theta.len() != grad.len() {
        return Err(Error::usage(format!(
            "{} parameters but gradient of length {}",
            theta.len(),
            grad.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdConfig {
    eta: f64,
}

impl GdConfig {
    /// `eta = 0` is accepted and freezes the parameters.
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::config("eta", format!("{eta} must be finite and non-negative")));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// `θ − η ∇`.
pub fn gd_step(theta: &[f64], grad: &[f64], cfg: &GdConfig) -> Result<Vec<f64>> {
    check_same_len(theta, grad)?;
    Ok(theta.iter().zip(grad).map(|(t, g)| t - cfg.eta * g).collect())
}

impl Optimizer for GdConfig {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Gd
    }

    fn step(&mut self, theta: &[f64], input: &StepInput<'_>) -> Result<Vec<f64>> {
        gd_step(theta, &input.loss_gradient()?, self)
    }
}

/// Adam moments and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    eta: f64,
    beta1: f64,
    beta2: f64,
    eps_hat: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub const DEFAULT_BETA1: f64 = 0.9;
    pub const DEFAULT_BETA2: f64 = 0.999;
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(n_params: usize, eta: f64) -> Result<Self> {
        Self::with_hyperparameters(n_params, eta, Self::DEFAULT_BETA1, Self::DEFAULT_BETA2, Self::DEFAULT_EPS)
    }

    pub fn with_hyperparameters(n_params: usize, eta: f64, beta1: f64, beta2: f64, eps_hat: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::config("eta", format!("{eta} must be finite and non-negative")));
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::usage("Adam betas must lie in [0, 1)"));
        }
        if !(eps_hat.is_finite() && eps_hat > 0.0) {
            return Err(Error::usage("Adam epsilon must be positive"));
        }
        Ok(Self {
            eta,
            beta1,
            beta2,
            eps_hat,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One bias-corrected Adam update; advances the step counter.
    pub fn adam_step(&mut self, theta: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
        check_same_len(theta, grad)?;
        check_same_len(theta, &self.m)?;
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let mut next = Vec::with_capacity(theta.len());
        for ((th, &g), (m, v)) in theta.iter().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            next.push(th - self.eta * m_hat / (v_hat.sqrt() + self.eps_hat));
        }
        Ok(next)
    }
}

impl Optimizer for AdamState {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Adam
    }

    fn step(&mut self, theta: &[f64], input: &StepInput<'_>) -> Result<Vec<f64>> {
        self.adam_step(theta, &input.loss_gradient()?)
    }
}

/// Space in which the algebraic correction linearises the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AlgebraicMode {
    #[default]
    Probability,
    Logit,
}

impl fmt::Display for AlgebraicMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgebraicMode::Probability => "probability",
            AlgebraicMode::Logit => "logit",
        })
    }
}

impl FromStr for AlgebraicMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "probability" => Ok(AlgebraicMode::Probability),
            "logit" => Ok(AlgebraicMode::Logit),
            other => Err(format!("unknown algebraic mode `{other}` (expected probability or logit)")),
        }
    }
}

/// Tikhonov parameter and linearisation space. There is deliberately no
/// step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicConfig {
    lambda: f64,
    mode: AlgebraicMode,
}

impl AlgebraicConfig {
    pub fn new(lambda: f64, mode: AlgebraicMode) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::config("lambda", format!("{lambda} must be finite and positive")));
        }
        Ok(Self { lambda, mode })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> AlgebraicMode {
        self.mode
    }
}

/// In-place Cholesky factorisation of a row-major SPD matrix; the lower
/// triangle is overwritten with `L` such that `A = L Lᵀ`.
fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::numeric(format!("normal matrix is not positive definite (pivot {j}: {d})")));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky_in_place`].
fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Ridge correction `Δθ = (JᵀJ + λI)⁻¹ Jᵀ r`.
pub fn algebraic_correction(jac: &JacobianMatrix, r: &Residual, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::config("lambda", format!("{lambda} must be finite and positive")));
    }
    if r.len() != jac.rows() {
        return Err(Error::usage(format!(
            "residual of length {} for a Jacobian with {} rows",
            r.len(),
            jac.rows()
        )));
    }
    if !jac.is_finite() {
        return Err(Error::numeric("Jacobian has non-finite entries"));
    }
    if r.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("residual has non-finite entries"));
    }
    let p = jac.cols();
    let mut a = jac.gram();
    for k in 0..p {
        a[k * p + k] += lambda;
    }
    let b = jac.transpose_mul(r.values())?;
    cholesky_in_place(&mut a, p)?;
    Ok(cholesky_solve(&a, p, &b))
}

/// One algebraic update `θ + Δθ`.
///
/// In logit mode `predictions` must be supplied; targets are recovered as
/// `ŷ + r`, both sides are clipped and logit-transformed, and each Jacobian
/// row is rescaled by `1 / (ŷ_i (1 − ŷ_i))` before the same solve.
pub fn algebraic_step(
    theta: &[f64],
    jac: &JacobianMatrix,
    r: &Residual,
    cfg: &AlgebraicConfig,
    predictions: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if theta.len() != jac.cols() {
        return Err(Error::usage(format!(
            "{} parameters for a Jacobian with {} columns",
            theta.len(),
            jac.cols()
        )));
    }
    let delta = match cfg.mode {
        AlgebraicMode::Probability => algebraic_correction(jac, r, cfg.lambda)?,
        AlgebraicMode::Logit => {
            let preds = predictions.ok_or_else(|| Error::usage("logit mode needs predictions"))?;
            if preds.len() != r.len() {
                return Err(Error::usage("prediction count does not match residual"));
            }
            let mut scales = Vec::with_capacity(preds.len());
            let mut z_residual = Vec::with_capacity(preds.len());
            for (&p, &ri) in preds.iter().zip(r.values()) {
                scales.push(estimator::logit_jacobian_scale(p)?);
                z_residual.push(estimator::logit(clip(p + ri))? - estimator::logit(p)?);
            }
            let mut scaled = jac.clone();
            scaled.scale_rows(&scales)?;
            algebraic_correction(&scaled, &Residual::from(z_residual), cfg.lambda)?
        }
    };
    Ok(theta.iter().zip(&delta).map(|(t, d)| t + d).collect())
}

impl Optimizer for AlgebraicConfig {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Algebraic
    }

    fn step(&mut self, theta: &[f64], input: &StepInput<'_>) -> Result<Vec<f64>> {
        let r = estimator::residual(input.targets, input.predictions)?;
        algebraic_step(theta, input.jacobian, &r, self, Some(input.predictions))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gd_examples() {
        let cfg = GdConfig::new(0.1).unwrap();
        assert_eq!(gd_step(&[0.3, -0.2], &[0.0, 0.0], &cfg).unwrap(), vec![0.3, -0.2]);
        assert_eq!(gd_step(&[0.0], &[1.0], &cfg).unwrap(), vec![-0.1]);
        let g = [0.5, -2.0];
        let once = gd_step(&[1.0, 1.0], &g, &cfg).unwrap();
        let twice = gd_step(&once, &g, &cfg).unwrap();
        for ((t, o), g) in twice.iter().zip([1.0, 1.0]).zip(g) {
            assert!((t - (o - 2.0 * 0.1 * g)).abs() < 1e-15);
        }
        assert!(gd_step(&[0.0], &[1.0, 2.0], &cfg).is_err());
        assert!(GdConfig::new(-0.1).is_err());
        assert!(GdConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn adam_zero_gradient_keeps_theta() {
        let mut adam = AdamState::new(2, 0.1).unwrap();
        assert_eq!(adam.adam_step(&[0.4, 0.5], &[0.0, 0.0]).unwrap(), vec![0.4, 0.5]);
        assert_eq!(adam.steps_taken(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_eta() {
        let mut adam = AdamState::new(1, 0.1).unwrap();
        let next = adam.adam_step(&[0.0], &[1.0]).unwrap();
        // m̂ = 1, v̂ = 1, so the step is η / (1 + 1e-8).
        assert!((next[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn adam_moves_against_first_moment() {
        let mut adam = AdamState::new(3, 0.05).unwrap();
        let mut theta = vec![0.0; 3];
        for g in [[1.0, -1.0, 0.3], [0.5, -3.0, -0.1], [-0.2, 2.0, 0.4]] {
            let next = adam.adam_step(&theta, &g).unwrap();
            for ((n, t), m) in next.iter().zip(&theta).zip(adam.first_moment()) {
                assert_eq!((n - t).signum(), -m.signum());
            }
            assert!(adam.second_moment().iter().all(|&v| v >= 0.0));
            theta = next;
        }
    }

    #[test]
    fn algebraic_zero_residual() {
        let j = JacobianMatrix::from_rows(&[vec![0.3, 0.1], vec![-0.2, 0.4]]).unwrap();
        let cfg = AlgebraicConfig::new(0.2, AlgebraicMode::Probability).unwrap();
        let theta = [0.7, -1.1];
        let next = algebraic_step(&theta, &j, &Residual::from(vec![0.0, 0.0]), &cfg, None).unwrap();
        assert_eq!(next, theta.to_vec());
    }

    #[test]
    fn algebraic_scalar_case() {
        let j = JacobianMatrix::from_rows(&[vec![1.0]]).unwrap();
        let delta = algebraic_correction(&j, &Residual::from(vec![1.0]), 0.2).unwrap();
        assert!((delta[0] - 1.0 / 1.2).abs() < 1e-15);
    }

    #[test]
    fn algebraic_errors() {
        let j = JacobianMatrix::from_rows(&[vec![1.0]]).unwrap();
        let r = Residual::from(vec![1.0]);
        assert!(matches!(AlgebraicConfig::new(0.0, AlgebraicMode::Probability), Err(Error::Config { key: "lambda", .. })));
        assert!(matches!(algebraic_correction(&j, &r, -1.0), Err(Error::Config { .. })));
        let bad = JacobianMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(algebraic_correction(&bad, &r, 0.2), Err(Error::Numeric(_))));
        assert!(matches!(
            algebraic_correction(&j, &Residual::from(vec![f64::INFINITY]), 0.2),
            Err(Error::Numeric(_))
        ));
        let cfg = AlgebraicConfig::new(0.2, AlgebraicMode::Logit).unwrap();
        assert!(matches!(algebraic_step(&[0.0], &j, &r, &cfg, None), Err(Error::Usage(_))));
    }

    #[test]
    fn logit_mode_scales_rows_and_uses_logit_residual() {
        let j = JacobianMatrix::from_rows(&[vec![0.2], vec![0.1]]).unwrap();
        let preds = [0.5, 0.2];
        let targets = [0.6, 0.1];
        let r = estimator::residual(&targets, &preds).unwrap();
        let cfg = AlgebraicConfig::new(0.2, AlgebraicMode::Logit).unwrap();
        let got = algebraic_step(&[0.0], &j, &r, &cfg, Some(&preds)).unwrap();
        // Hand-built z-space problem.
        let js = [0.2 / 0.25, 0.1 / 0.16];
        let rz = [
            estimator::logit(0.6).unwrap() - estimator::logit(0.5).unwrap(),
            estimator::logit(0.1).unwrap() - estimator::logit(0.2).unwrap(),
        ];
        let expected = (js[0] * rz[0] + js[1] * rz[1]) / (js[0] * js[0] + js[1] * js[1] + 0.2);
        assert!((got[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn kinds_parse_and_print() {
        for kind in OptimizerKind::ALL {
            assert_eq!(kind.label().parse::<OptimizerKind>().unwrap(), kind);
        }
        assert!("sgd".parse::<OptimizerKind>().is_err());
        assert_eq!("logit".parse::<AlgebraicMode>().unwrap(), AlgebraicMode::Logit);
    }
}

//! Teacher-student benchmark harness.
//!
//! A random deep teacher labels `N` random inputs with exact Born
//! probabilities; a shallow student is then trained on them with one of the
//! three optimizers. Ensemble members share the dataset (drawn from
//! `master_seed`) and differ in student initialisation and shot streams.
//!
//! Every random draw comes from a stream keyed by `(seed, purpose)`, so
//! ensembles produce the same records whether members run serially or on
//! the rayon pool.

mod config;

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;

pub use config::{ExperimentConfig, KeyError};

use crate::error::{Error, Result};
use crate::estimator::{self, LossKind};
use crate::model::{CircuitModel, InputPoint, Shots, PARAMS_PER_LAYER};
use crate::optimizers::{AdamState, AlgebraicConfig, GdConfig, Optimizer, OptimizerKind, StepInput};
use crate::rng::{stream, Purpose, ShotSampler};

/// Teacher-labelled training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub teacher: CircuitModel,
    pub inputs: Vec<InputPoint>,
    pub targets: Vec<f64>,
}

fn normal_params<R: Rng>(rng: &mut R, count: usize, sigma: f64) -> Result<Vec<f64>> {
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::config("init_sigma", e.to_string()))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Draws the teacher and its inputs from `seed` and labels them with the
/// noiseless exact output.
pub fn make_teacher_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    for warning in cfg.validate()? {
        log::warn!("{warning}");
    }
    let theta = normal_params(
        &mut stream(seed, Purpose::TeacherParams),
        PARAMS_PER_LAYER * cfg.teacher_depth,
        cfg.init_sigma,
    )?;
    let teacher = CircuitModel::new(cfg.teacher_depth, theta, 0.0)?;
    let angle = Uniform::new_inclusive(-PI, PI).map_err(|e| Error::numeric(e.to_string()))?;
    let mut rng = stream(seed, Purpose::Inputs);
    let inputs: Vec<InputPoint> = (0..cfg.n_points)
        .map(|_| InputPoint::new((0..cfg.n_qubits).map(|_| angle.sample(&mut rng)).collect()))
        .collect();
    let targets = inputs
        .iter()
        .map(|x| teacher.forward_exact(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        teacher,
        inputs,
        targets,
    })
}

/// One `(seed, step, loss)` row of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub step: usize,
    pub loss: f64,
    /// Seconds since the run started; excluded from determinism checks.
    pub wall_time: f64,
    pub config_hash: String,
}

/// Records of one training run plus its shot accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub records: Vec<RunRecord>,
    /// Set when the run stopped early on a numeric failure.
    pub abort: Option<String>,
    /// Shots spent inside the update loop (forward pass and Jacobian).
    pub training_shots: u64,
    /// Shots spent on the final post-update loss evaluation.
    pub evaluation_shots: u64,
    pub final_theta: Vec<f64>,
}

impl RunHistory {
    pub fn is_complete(&self) -> bool {
        self.abort.is_none()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.is_complete().then(|| self.records.last().map(|r| r.loss)).flatten()
    }

    pub fn loss_at(&self, step: usize) -> Option<f64> {
        self.records.get(step).map(|r| r.loss)
    }
}

fn build_optimizer(cfg: &ExperimentConfig, n_params: usize) -> Result<Box<dyn Optimizer>> {
    Ok(match cfg.optimizer {
        OptimizerKind::Gd => Box::new(GdConfig::new(cfg.eta)?),
        OptimizerKind::Adam => Box::new(AdamState::new(n_params, cfg.eta)?),
        OptimizerKind::Algebraic => Box::new(AlgebraicConfig::new(cfg.lambda, cfg.algebraic_mode)?),
    })
}

fn predictions<R: Rng>(
    model: &CircuitModel,
    inputs: &[InputPoint],
    shots: Shots,
    sampler: &mut ShotSampler<R>,
) -> Result<Vec<f64>> {
    inputs.iter().map(|x| model.predict(x, shots, sampler)).collect()
}

/// Trains one student on `cfg.master_seed`'s dataset, initialised from `seed`.
pub fn train(cfg: &ExperimentConfig, seed: u64) -> Result<RunHistory> {
    let dataset = make_teacher_dataset(cfg, cfg.master_seed)?;
    train_on(cfg, &dataset, seed)
}

/// Trains one student on a prepared dataset.
///
/// Emits `steps + 1` records on success: the pre-update loss of every step
/// followed by the loss after the last update.
pub fn train_on(cfg: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<RunHistory> {
    cfg.validate()?;
    let start = Instant::now();
    let config_hash = cfg.config_hash();
    let n_params = PARAMS_PER_LAYER * cfg.student_depth;
    let theta0 = normal_params(&mut stream(seed, Purpose::StudentInit), n_params, cfg.init_sigma)?;
    let mut student = CircuitModel::new(cfg.student_depth, theta0, cfg.p_deph)?;
    let mut optimizer = build_optimizer(cfg, n_params)?;
    let mut sampler = ShotSampler::new(stream(seed, Purpose::Shots));

    let mut history = RunHistory {
        seed,
        optimizer: cfg.optimizer,
        records: Vec::with_capacity(cfg.steps + 1),
        abort: None,
        training_shots: 0,
        evaluation_shots: 0,
        final_theta: Vec::new(),
    };
    let push = |history: &mut RunHistory, step: usize, loss: f64| {
        history.records.push(RunRecord {
            seed,
            optimizer: cfg.optimizer,
            step,
            loss,
            wall_time: start.elapsed().as_secs_f64(),
            config_hash: config_hash.clone(),
        });
    };

    let mut step_once = |student: &mut CircuitModel, history: &mut RunHistory, step: usize| -> Result<()> {
        let preds = predictions(student, &dataset.inputs, cfg.shots, &mut sampler)?;
        let loss = estimator::loss(cfg.loss_kind, &dataset.targets, &preds)?;
        push(history, step, loss);
        if step == cfg.steps {
            return Ok(());
        }
        let jac = estimator::jacobian(student, &dataset.inputs, cfg.shots, &mut sampler)?;
        let input = StepInput {
            jacobian: &jac,
            targets: &dataset.targets,
            predictions: &preds,
            loss: cfg.loss_kind,
        };
        let next = optimizer.step(student.theta(), &input)?;
        if next.iter().any(|t| !t.is_finite()) {
            return Err(Error::numeric("parameters became non-finite"));
        }
        student.set_theta(&next)?;
        if step + 1 == cfg.steps {
            history.training_shots = sampler.shots_taken();
        }
        Ok(())
    };

    for step in 0..=cfg.steps {
        if let Err(err) = step_once(&mut student, &mut history, step) {
            let message = format!("seed {seed}, step {step}: {err}");
            log::warn!("run aborted: {message}");
            history.abort = Some(message);
            break;
        }
    }
    if !history.is_complete() {
        history.training_shots = sampler.shots_taken();
    }
    history.evaluation_shots = sampler.shots_taken() - history.training_shots;
    history.final_theta = student.theta().to_vec();
    Ok(history)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub step: usize,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalLossStats {
    pub mean: f64,
    pub std: f64,
    pub completed: usize,
    pub aborted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub runs: Vec<RunHistory>,
}

impl Ensemble {
    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().flat_map(|r| r.records.iter())
    }

    pub fn aborted(&self) -> impl Iterator<Item = &RunHistory> {
        self.runs.iter().filter(|r| !r.is_complete())
    }

    /// Per-step mean and population std over the members that reached
    /// that step.
    pub fn step_stats(&self) -> Vec<StepStats> {
        let max_len = self.runs.iter().map(|r| r.records.len()).max().unwrap_or(0);
        (0..max_len)
            .map(|step| {
                let losses: Vec<f64> = self.runs.iter().filter_map(|r| r.loss_at(step)).collect();
                let (mean, std) = mean_std(&losses);
                StepStats {
                    step,
                    mean,
                    std,
                    count: losses.len(),
                }
            })
            .collect()
    }

    /// Mean loss at `step` over members that reached it.
    pub fn mean_loss_at(&self, step: usize) -> f64 {
        let losses: Vec<f64> = self.runs.iter().filter_map(|r| r.loss_at(step)).collect();
        mean_std(&losses).0
    }

    /// Final-step loss statistics over completed members.
    pub fn final_loss_stats(&self) -> FinalLossStats {
        let finals: Vec<f64> = self.runs.iter().filter_map(RunHistory::final_loss).collect();
        let (mean, std) = mean_std(&finals);
        FinalLossStats {
            mean,
            std,
            completed: finals.len(),
            aborted: self.runs.len() - finals.len(),
        }
    }
}

/// Seeds `master_seed + 0 … master_seed + ensemble_size − 1`.
pub fn ensemble_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.ensemble_size as u64).map(|k| cfg.master_seed.wrapping_add(k)).collect()
}

pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<Ensemble> {
    let dataset = make_teacher_dataset(cfg, cfg.master_seed)?;
    run_ensemble_on(cfg, &dataset)
}

pub fn run_ensemble_on(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<Ensemble> {
    let runs = ensemble_seeds(cfg)
        .into_par_iter()
        .map(|seed| train_on(cfg, dataset, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { runs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Shots,
    PDeph,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::Shots => "shots",
            SweepVariable::PDeph => "p_deph",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub final_loss_mean: Vec<f64>,
    pub final_loss_std: Vec<f64>,
    /// Aborted ensemble members per sweep point.
    pub aborted: Vec<usize>,
    /// Least-squares slope of `ln(mean final loss)` against `ln(value)`;
    /// only computed for shot sweeps.
    pub loglog_slope: Option<f64>,
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (mx, _) = mean_std(xs);
    let (my, _) = mean_std(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    slope.is_finite().then_some(slope)
}

fn summarize(variable: SweepVariable, values: Vec<f64>, ensembles: &[Ensemble]) -> SweepSummary {
    let stats: Vec<FinalLossStats> = ensembles.iter().map(Ensemble::final_loss_stats).collect();
    SweepSummary {
        variable,
        values,
        final_loss_mean: stats.iter().map(|s| s.mean).collect(),
        final_loss_std: stats.iter().map(|s| s.std).collect(),
        aborted: stats.iter().map(|s| s.aborted).collect(),
        loglog_slope: None,
    }
}

/// Final MSE versus shot budget.
pub fn sweep_shots(cfg: &ExperimentConfig, shot_values: &[u32]) -> Result<SweepSummary> {
    if shot_values.is_empty() {
        return Err(Error::config("shots", "sweep needs at least one shot value"));
    }
    if shot_values.contains(&0) {
        return Err(Error::config("shots", "sweep shot values must be at least 1"));
    }
    let mut base = cfg.clone();
    base.loss_kind = LossKind::Mse;
    let dataset = make_teacher_dataset(&base, base.master_seed)?;
    let ensembles = shot_values
        .iter()
        .map(|&s| {
            let mut point = base.clone();
            point.shots = Shots::Finite(s);
            run_ensemble_on(&point, &dataset)
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = shot_values.iter().map(|&s| f64::from(s)).collect();
    let mut summary = summarize(SweepVariable::Shots, values, &ensembles);
    let (lx, ly): (Vec<f64>, Vec<f64>) = summary
        .values
        .iter()
        .zip(&summary.final_loss_mean)
        .filter(|(_, m)| m.is_finite() && **m > 0.0)
        .map(|(v, m)| (v.ln(), m.ln()))
        .unzip();
    summary.loglog_slope = least_squares_slope(&lx, &ly);
    Ok(summary)
}

/// Final loss versus per-layer dephasing rate, shot noise disabled.
pub fn sweep_dephasing(cfg: &ExperimentConfig, p_values: &[f64]) -> Result<SweepSummary> {
    if p_values.is_empty() {
        return Err(Error::config("p_deph", "sweep needs at least one rate"));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::config("p_deph", format!("{p} is outside [0, 1]")));
    }
    let mut base = cfg.clone();
    base.shots = Shots::Exact;
    let dataset = make_teacher_dataset(&base, base.master_seed)?;
    let ensembles = p_values
        .iter()
        .map(|&p| {
            let mut point = base.clone();
            point.p_deph = p;
            run_ensemble_on(&point, &dataset)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(SweepVariable::PDeph, p_values.to_vec(), &ensembles))
}

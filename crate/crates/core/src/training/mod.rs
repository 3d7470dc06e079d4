//! Collocation, loss assembly and the Adam training loop.

mod checkpoint;
mod collocation;
mod constraints;
mod loss;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use collocation::{BoundaryPoint, CollocationConfig, CollocationSet, InterfacePoint};
pub use constraints::{constraint_report, ConstraintEntry, ConstraintReport};
pub use loss::{
    cartesian_residual, polar_dirs, polar_residual, LossParts, LossTerms, Objective, PhysicsForm, SoftWeights,
};

use crate::ansatz::{Ansatz, AnsatzError, Evaluator};
use crate::autodiff::AdError;
use crate::nn::{AdamState, InitScheme, NnError};
use crate::problems::{relative_l2, ProblemError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("training configuration: {0}")]
    Config(String),
    #[error("collocation: {0}")]
    Collocation(String),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

fn default_iterations() -> usize {
    30_000
}
fn default_learning_rate() -> f64 {
    5e-3
}
fn default_eval_every() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub adam: AdamParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitScheme,
    /// Metric cadence in iterations.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default)]
    pub weights: SoftWeights,
    #[serde(default)]
    pub physics: PhysicsForm,
    #[serde(default)]
    pub collocation: CollocationConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            learning_rate: default_learning_rate(),
            adam: AdamParams::default(),
            seed: 0,
            init: InitScheme::Glorot,
            eval_every: default_eval_every(),
            weights: SoftWeights::default(),
            physics: PhysicsForm::Cartesian,
            collocation: CollocationConfig::default(),
        }
    }
}

/// Adam moment decay rates and denominator offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let a = &self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(TrainError::Config(format!(
                "adam needs beta1, beta2 in [0, 1) and epsilon > 0, got {a:?}"
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.eval_every == 0 {
            return Err(TrainError::Config("eval_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Reference values at fixed test points, used for the relative L2 metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl ReferenceSolution {
    pub fn from_fn(points: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = points.iter().map(|p| f(p)).collect();
        Self { points, values }
    }

    pub fn relative_l2(&self, ansatz: &Ansatz, theta: &[f64]) -> Result<f64, TrainError> {
        let pred = predict(ansatz, theta, &self.points)?;
        Ok(relative_l2(&pred, &self.values)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub iteration: usize,
    pub loss: f64,
    pub relative_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub iteration: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub seed: u64,
    pub ansatz: crate::ansatz::AnsatzKind,
    pub n_parameters: usize,
    pub terms: LossTerms,
    /// Loss before each Adam step.
    pub loss_history: Vec<f64>,
    /// Metrics at iteration 0, every `eval_every` iterations, and at the end.
    pub metric_history: Vec<MetricRecord>,
    pub final_loss: f64,
    pub final_parts: LossParts,
    pub final_relative_l2: f64,
    pub wall_seconds: f64,
    /// Set when a non-finite loss or gradient stopped training; the returned
    /// parameters are then the last finite ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<AbortInfo>,
}

pub struct TrainOutcome {
    pub theta: Vec<f64>,
    pub report: TrainReport,
}

fn is_non_finite(e: &TrainError) -> bool {
    let ad = match e {
        TrainError::Ad(a) | TrainError::Ansatz(AnsatzError::Ad(a)) => a,
        _ => return false,
    };
    matches!(ad, AdError::NaN { .. } | AdError::NonFinite { .. })
}

/// Plain predictions at `points`.
pub fn predict(ansatz: &Ansatz, theta: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>, TrainError> {
    let mut e = Evaluator::new(ansatz, theta)?;
    points.iter().map(|p| Ok(e.value(p)?)).collect()
}

/// Full-batch Adam on the objective built from `config`, starting from a
/// fresh initialization.
pub fn train(ansatz: &Ansatz, config: &TrainConfig, reference: &ReferenceSolution) -> Result<TrainOutcome, TrainError> {
    let theta = ansatz.layout().init(config.init, config.seed)?;
    train_from(ansatz, config, reference, theta)
}

/// Same as [`train`] from given initial parameters.
pub fn train_from(
    ansatz: &Ansatz,
    config: &TrainConfig,
    reference: &ReferenceSolution,
    mut theta: Vec<f64>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if theta.len() != ansatz.layout().len() {
        return Err(TrainError::Config(format!(
            "initial parameters have {} entries, ansatz expects {}",
            theta.len(),
            ansatz.layout().len()
        )));
    }
    let start = Instant::now();
    let terms = LossTerms::resolve(ansatz, &config.weights, config.physics)?;
    let set = CollocationSet::build(&ansatz.problem(), &config.collocation)?;
    let objective = Objective::new(ansatz, &set, terms)?;
    let mut adam = AdamState::new(theta.len(), config.learning_rate);
    adam.beta1 = config.adam.beta1;
    adam.beta2 = config.adam.beta2;
    adam.epsilon = config.adam.epsilon;
    let mut loss_history = Vec::with_capacity(config.iterations);
    let mut metric_history = Vec::new();
    let mut aborted = None;

    for it in 0..config.iterations {
        let (loss, grad) = match objective.value_and_gradient(&theta) {
            Ok((loss, _, grad)) if loss.is_finite() => (loss, grad),
            Ok((loss, _, _)) => {
                aborted = Some(AbortInfo {
                    iteration: it,
                    reason: format!("loss became {loss}"),
                });
                break;
            }
            Err(e) if is_non_finite(&e) => {
                aborted = Some(AbortInfo {
                    iteration: it,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        loss_history.push(loss);
        if it % config.eval_every == 0 {
            metric_history.push(MetricRecord {
                iteration: it,
                loss,
                relative_l2: reference.relative_l2(ansatz, &theta)?,
            });
        }
        let last_good = theta.clone();
        if let Err(e) = adam.step(&mut theta, &grad) {
            theta = last_good;
            aborted = Some(AbortInfo {
                iteration: it,
                reason: e.to_string(),
            });
            break;
        }
    }

    let (final_loss, final_parts) = objective.value(&theta)?;
    let final_relative_l2 = reference.relative_l2(ansatz, &theta)?;
    let done = loss_history.len();
    if metric_history.last().map(|m| m.iteration) != Some(done) {
        metric_history.push(MetricRecord {
            iteration: done,
            loss: final_loss,
            relative_l2: final_relative_l2,
        });
    }
    Ok(TrainOutcome {
        report: TrainReport {
            config: config.clone(),
            seed: config.seed,
            ansatz: ansatz.kind(),
            n_parameters: theta.len(),
            terms,
            loss_history,
            metric_history,
            final_loss,
            final_parts,
            final_relative_l2,
            wall_seconds: start.elapsed().as_secs_f64(),
            aborted,
        },
        theta,
    })
}

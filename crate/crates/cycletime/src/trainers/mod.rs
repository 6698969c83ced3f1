//! Training algorithms for the feedforward network and the harness that
//! benchmarks them side by side.
//!
//! All trainers share the same shape: full-batch epochs over a normalized
//! training partition, an optional validation partition watched for early
//! stopping, and a [`TrainReport`] summarizing the run in both normalized
//! units and squared seconds. Trainers never panic on numerical blowup; a
//! run that goes non-finite is reported with its `diverged` flag set and the
//! best weights seen so far.

mod br;
mod gd;
mod lm;
mod oss;
mod scg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{network_mse, NetworkModel, Topology};
use crate::dataset::{normalize, split, Dataset, NormParams, SplitDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics;

/// Norm below which a gradient counts as vanished.
pub(crate) const GRADIENT_EPS: f64 = 1e-10;

/// Evaluation protocol for the network family: 70/15/15.
pub const ANN_SPLIT: SplitSpec = SplitSpec::Ratios {
    train: 0.7,
    validation: 0.15,
    test: 0.15,
};

/// The six training algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Full-batch gradient descent.
    Gd,
    /// Gradient descent with momentum.
    Gdm,
    /// Scaled conjugate gradient.
    Scg,
    /// One-step secant.
    Oss,
    /// Levenberg-Marquardt.
    Lm,
    /// Bayesian regularization over a Levenberg-Marquardt step.
    Br,
}

impl Algorithm {
    /// All algorithms in canonical benchmarking order.
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Gd,
        Algorithm::Gdm,
        Algorithm::Scg,
        Algorithm::Oss,
        Algorithm::Lm,
        Algorithm::Br,
    ];

    /// Conventional toolbox-style name used in reports.
    pub fn report_name(&self) -> &'static str {
        match self {
            Algorithm::Gd => "traingd",
            Algorithm::Gdm => "traingdm",
            Algorithm::Scg => "trainscg",
            Algorithm::Oss => "trainoss",
            Algorithm::Lm => "trainlm",
            Algorithm::Br => "trainbr",
        }
    }

    /// Short command-line token, also used in output file names.
    pub fn short_name(&self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Gdm => "gdm",
            Algorithm::Scg => "scg",
            Algorithm::Oss => "oss",
            Algorithm::Lm => "lm",
            Algorithm::Br => "br",
        }
    }
}

/// Hyperparameters shared by the trainers. Fields irrelevant to a given
/// algorithm are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    /// Upper bound on epochs; 0 returns the initial model untouched.
    pub max_epochs: usize,
    /// Training stops once the normalized training MSE reaches this.
    pub goal_mse: f64,
    /// Step size for the descent trainers.
    pub learning_rate: f64,
    /// Momentum coefficient in [0, 1).
    pub momentum: f64,
    /// Initial damping for the Levenberg-Marquardt family.
    pub mu0: f64,
    /// Damping multiplier after a rejected step (> 1).
    pub mu_increase: f64,
    /// Damping multiplier after an accepted step (in (0, 1)).
    pub mu_decrease: f64,
    /// Damping above which the run stops with `MuOverflow`.
    pub mu_max: f64,
    /// Consecutive validation failures tolerated before early stopping;
    /// 0 disables the watch.
    pub max_fail: usize,
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        TrainConfig {
            algorithm,
            max_epochs: 1000,
            goal_mse: 0.0,
            learning_rate: 0.01,
            momentum: 0.9,
            mu0: 1e-3,
            mu_increase: 10.0,
            mu_decrease: 0.1,
            mu_max: 1e10,
            max_fail: 6,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(why.to_string()));
        if !(self.goal_mse >= 0.0) || !self.goal_mse.is_finite() {
            return bad("goal_mse must be a finite non-negative number");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.mu0 > 0.0) || !self.mu0.is_finite() {
            return bad("mu0 must be positive and finite");
        }
        if !(self.mu_increase > 1.0) {
            return bad("mu_increase must exceed 1");
        }
        if !(self.mu_decrease > 0.0 && self.mu_decrease < 1.0) {
            return bad("mu_decrease must lie in (0, 1)");
        }
        if !(self.mu_max >= self.mu0) {
            return bad("mu_max must be at least mu0");
        }
        Ok(())
    }
}

/// Why a training run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    Goal,
    ValidationPatience,
    MuOverflow,
    GradientVanished,
    /// Bayesian regularization only: the effective parameter count settled.
    GammaStabilized,
    /// The loss went non-finite; the best earlier weights were returned.
    Diverged,
}

impl StopReason {
    /// The serialized token, for table cells and log lines.
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::Goal => "goal",
            StopReason::ValidationPatience => "validation_patience",
            StopReason::MuOverflow => "mu_overflow",
            StopReason::GradientVanished => "gradient_vanished",
            StopReason::GammaStabilized => "gamma_stabilized",
            StopReason::Diverged => "diverged",
        }
    }
}

/// One epoch in the loss trace, in normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
}

/// Per-epoch regularization state recorded by Bayesian regularization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrHyperRecord {
    pub epoch: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Effective number of parameters in use.
    pub gamma: f64,
    /// Log marginal likelihood of the epoch's weights under the re-estimated
    /// hyperparameters, up to an additive constant; absent when the
    /// curvature factorization failed that epoch.
    #[serde(default)]
    pub log_evidence: Option<f64>,
}

/// Outcome of one training run. Error figures appear twice: in squared
/// seconds (denormalized) and in normalized units. Partition figures are
/// absent when the corresponding partition is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub algorithm: String,
    pub seed: u64,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub diverged: bool,
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
    pub test_mse: Option<f64>,
    /// Pooled over every row of the split (train, validation, and test).
    pub network_mse: f64,
    pub train_mse_norm: f64,
    pub validation_mse_norm: Option<f64>,
    pub test_mse_norm: Option<f64>,
    pub network_mse_norm: f64,
    /// Correlation between actual and predicted cycle times over the whole
    /// split; absent when undefined.
    pub r_value: Option<f64>,
    /// True when a least-squares consequent solve needed the ridge fallback;
    /// always false for the network trainers.
    #[serde(default)]
    pub rank_warning: bool,
    pub trace: Vec<EpochRecord>,
    pub hyper_trace: Option<Vec<BrHyperRecord>>,
}

pub(crate) const REPORT_SCHEMA_VERSION: u32 = 1;

/// Watches validation error and remembers the best weights. A failure is
/// any epoch that does not improve on the best validation MSE seen so far.
struct EarlyStopper {
    max_fail: usize,
    best_val: f64,
    best_weights: Option<Vec<f64>>,
    fails: usize,
}

impl EarlyStopper {
    fn new(max_fail: usize) -> Self {
        EarlyStopper {
            max_fail,
            best_val: f64::INFINITY,
            best_weights: None,
            fails: 0,
        }
    }

    /// Returns true when patience is exhausted.
    fn observe(&mut self, val_mse: f64, weights: &[f64]) -> bool {
        if val_mse < self.best_val {
            self.best_val = val_mse;
            self.best_weights = Some(weights.to_vec());
            self.fails = 0;
            false
        } else {
            self.fails += 1;
            self.max_fail > 0 && self.fails >= self.max_fail
        }
    }
}

/// Per-run bookkeeping shared by every trainer: loss tracing, divergence
/// detection, the goal test, and optional validation patience.
pub(crate) struct Session<'a> {
    topology: Topology,
    train: &'a Dataset,
    validation: &'a Dataset,
    goal_mse: f64,
    patience: bool,
    stopper: EarlyStopper,
    trace: Vec<EpochRecord>,
    last_finite: Vec<f64>,
}

impl<'a> Session<'a> {
    /// Validates the model/data/config triple and sets up bookkeeping.
    /// `patience` is false for trainers that ignore the validation set when
    /// deciding when to stop.
    pub(crate) fn new(
        model: &NetworkModel,
        data: &'a SplitDataset,
        config: &'a TrainConfig,
        patience: bool,
    ) -> Result<Session<'a>> {
        config.validate()?;
        let topology = &model.topology;
        if data.train.is_empty() {
            return Err(Error::EmptyInput);
        }
        for part in [&data.train, &data.validation, &data.test] {
            if !part.is_empty() && part.input_dim() != topology.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: topology.input_dim,
                    found: part.input_dim(),
                });
            }
        }
        let use_patience = patience && !data.validation.is_empty() && config.max_fail > 0;
        let mut session = Session {
            topology: topology.clone(),
            train: &data.train,
            validation: &data.validation,
            goal_mse: config.goal_mse,
            patience: use_patience,
            stopper: EarlyStopper::new(config.max_fail),
            trace: Vec::new(),
            last_finite: model.weights.clone(),
        };
        // Baseline observation so patience can fall back to the initial
        // weights if training only ever hurts validation error.
        if session.patience {
            let val0 = network_mse(&session.topology, &model.weights, session.validation);
            session.stopper.observe(val0, &model.weights);
        }
        Ok(session)
    }

    /// Records one finished epoch and decides whether training must stop.
    pub(crate) fn record(&mut self, epoch: usize, weights: &[f64]) -> Option<StopReason> {
        let train_mse = network_mse(&self.topology, weights, self.train);
        let validation_mse = if self.validation.is_empty() {
            None
        } else {
            Some(network_mse(&self.topology, weights, self.validation))
        };
        self.trace.push(EpochRecord {
            epoch,
            train_mse,
            validation_mse,
        });
        if !train_mse.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Some(StopReason::Diverged);
        }
        self.last_finite.clear();
        self.last_finite.extend_from_slice(weights);
        if self.patience {
            if let Some(val) = validation_mse {
                if self.stopper.observe(val, weights) {
                    return Some(StopReason::ValidationPatience);
                }
            }
        }
        if train_mse <= self.goal_mse {
            return Some(StopReason::Goal);
        }
        None
    }

    /// Assembles the final model and report. With patience active the best
    /// validation weights are returned; a diverged run falls back to the
    /// best (or last finite) weights instead of the broken ones.
    pub(crate) fn conclude(
        self,
        algorithm: Algorithm,
        model: &NetworkModel,
        data: &SplitDataset,
        final_weights: Vec<f64>,
        stop_reason: StopReason,
        hyper_trace: Option<Vec<BrHyperRecord>>,
    ) -> (NetworkModel, TrainReport) {
        let diverged = stop_reason == StopReason::Diverged;
        let weights = if diverged {
            self.stopper.best_weights.unwrap_or(self.last_finite)
        } else if self.patience {
            self.stopper.best_weights.unwrap_or(final_weights)
        } else {
            final_weights
        };
        let trained = NetworkModel {
            topology: model.topology.clone(),
            weights,
            norm: model.norm.clone(),
        };
        let report = build_report(
            algorithm,
            &trained,
            data,
            self.trace,
            stop_reason,
            diverged,
            hyper_trace,
        );
        (trained, report)
    }
}

/// Normalized and denormalized MSE for one partition, plus the pooled pairs.
fn eval_partition_with(
    norm: &NormParams,
    predict_norm: &mut dyn FnMut(&[f64]) -> f64,
    part: &Dataset,
    pooled: &mut (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>),
) -> (Option<f64>, Option<f64>) {
    if part.is_empty() {
        return (None, None);
    }
    let mut sq_norm = 0.0;
    let mut sq_sec = 0.0;
    for (row, target) in part.rows() {
        let pred_norm = predict_norm(row);
        let e_norm = target - pred_norm;
        sq_norm += e_norm * e_norm;
        let actual_s = norm.denormalize_target(target);
        let pred_s = norm.denormalize_target(pred_norm);
        let e_sec = actual_s - pred_s;
        sq_sec += e_sec * e_sec;
        pooled.0.push(target);
        pooled.1.push(pred_norm);
        pooled.2.push(actual_s);
        pooled.3.push(pred_s);
    }
    let n = part.len() as f64;
    (Some(sq_sec / n), Some(sq_norm / n))
}

/// Report assembly shared by the network trainers and the fuzzy trainer:
/// the caller supplies the normalized-space predictor.
#[allow(clippy::too_many_arguments)]
pub(crate) fn build_report_with(
    algorithm: &str,
    norm: &NormParams,
    predict_norm: &mut dyn FnMut(&[f64]) -> f64,
    data: &SplitDataset,
    trace: Vec<EpochRecord>,
    stop_reason: StopReason,
    diverged: bool,
    rank_warning: bool,
    hyper_trace: Option<Vec<BrHyperRecord>>,
) -> TrainReport {
    let mut pooled = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (train_mse, train_mse_norm) =
        eval_partition_with(norm, predict_norm, &data.train, &mut pooled);
    let (validation_mse, validation_mse_norm) =
        eval_partition_with(norm, predict_norm, &data.validation, &mut pooled);
    let (test_mse, test_mse_norm) =
        eval_partition_with(norm, predict_norm, &data.test, &mut pooled);
    let network_mse_norm = metrics::mse(&pooled.0, &pooled.1).unwrap_or(f64::NAN);
    let network_mse = metrics::mse(&pooled.2, &pooled.3).unwrap_or(f64::NAN);
    let r_value = metrics::pearson_r(&pooled.2, &pooled.3).ok();
    let epochs_run = trace.len();
    TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        algorithm: algorithm.to_string(),
        seed: data.seed,
        epochs_run,
        stop_reason,
        diverged,
        train_mse: train_mse.unwrap_or(f64::NAN),
        validation_mse,
        test_mse,
        network_mse,
        train_mse_norm: train_mse_norm.unwrap_or(f64::NAN),
        validation_mse_norm,
        test_mse_norm,
        network_mse_norm,
        r_value,
        rank_warning,
        trace,
        hyper_trace,
    }
}

fn build_report(
    algorithm: Algorithm,
    model: &NetworkModel,
    data: &SplitDataset,
    trace: Vec<EpochRecord>,
    stop_reason: StopReason,
    diverged: bool,
    hyper_trace: Option<Vec<BrHyperRecord>>,
) -> TrainReport {
    let mut eval = crate::ann::Evaluator::new(&model.topology);
    let mut predict = |row: &[f64]| eval.forward(&model.weights, row);
    build_report_with(
        algorithm.report_name(),
        &model.norm,
        &mut predict,
        data,
        trace,
        stop_reason,
        diverged,
        false,
        hyper_trace,
    )
}

pub use br::train_br;
pub use gd::{train_gd, train_gdm};
pub use lm::train_lm;
pub use oss::train_oss;
pub use scg::train_scg;

/// Trains with whichever algorithm the config selects.
pub fn train(
    model: &NetworkModel,
    data: &SplitDataset,
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainReport)> {
    match config.algorithm {
        Algorithm::Gd => train_gd(model, data, config),
        Algorithm::Gdm => train_gdm(model, data, config),
        Algorithm::Scg => train_scg(model, data, config),
        Algorithm::Oss => train_oss(model, data, config),
        Algorithm::Lm => train_lm(model, data, config),
        Algorithm::Br => train_br(model, data, config),
    }
}

/// One cell of the benchmarking grid: an algorithm trained from the shared
/// per-seed initialization, with its report and the (actual, predicted)
/// cycle-time pairs over the full dataset in seconds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRun {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub report: TrainReport,
    pub pairs: Vec<(f64, f64)>,
}

/// Benchmarks the configured algorithms over the given seeds.
///
/// For every seed the raw dataset is normalized, split, and a fresh network
/// is initialized; each configured algorithm then starts from those same
/// initial weights, so per-seed rows differ only in the trainer. Runs are
/// independent and execute in parallel; the result order is seeds-major,
/// configs-minor, and is deterministic.
pub fn run_comparison(
    raw: &Dataset,
    topology: &Topology,
    seeds: &[u64],
    configs: &[TrainConfig],
    split_spec: &SplitSpec,
) -> Result<Vec<ComparisonRun>> {
    if seeds.is_empty() || configs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (normalized, params) = normalize(raw)?;
    let cells: Vec<(u64, &TrainConfig)> = seeds
        .iter()
        .flat_map(|&s| configs.iter().map(move |c| (s, c)))
        .collect();
    let actual_seconds: Vec<f64> = raw.targets().to_vec();
    cells
        .par_iter()
        .map(|&(seed, config)| {
            let data = split(&normalized, split_spec, seed)?;
            let model0 = NetworkModel::init(topology, seed, params.clone())?;
            let (trained, report) = train(&model0, &data, config)?;
            let predicted = trained.predict_dataset(raw)?;
            let pairs = actual_seconds
                .iter()
                .copied()
                .zip(predicted)
                .collect();
            Ok(ComparisonRun {
                algorithm: config.algorithm,
                seed,
                report,
                pairs,
            })
        })
        .collect()
}

//! Sugeno fuzzy inference with grid-partitioned Gaussian membership
//! functions, trained by the hybrid scheme: least squares for the rule
//! consequents, gradient descent for the membership parameters.
//!
//! Evaluation runs in five stages: fuzzify each input through its
//! membership functions, fire every rule with the product of its
//! memberships, normalize the firing strengths, apply the per-rule Sugeno
//! consequent, and sum. The output is the firing-weighted average of the
//! rule consequents, so it is always a convex combination of them.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{normalize, split, Dataset, NormParams, SplitDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::numerics::{solve_least_squares, Matrix};
use crate::trainers::{
    build_report_with, EpochRecord, StopReason, TrainReport,
};

/// Spreads below this are clamped; the premise gradient divides by sigma^3.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// A total firing strength below this counts as no rule firing at all.
const FIRING_FLOOR: f64 = 1e-300;

const FIS_MODEL_KIND: &str = "anfis";
const FIS_SCHEMA_VERSION: u32 = 1;

/// Bell-shaped membership with unit peak at the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMF {
    pub center: f64,
    pub sigma: f64,
}

impl GaussianMF {
    /// Membership degree in (0, 1]; exactly 1 at the center.
    pub fn value(&self, x: f64) -> f64 {
        let d = (x - self.center) / self.sigma;
        (-0.5 * d * d).exp()
    }
}

/// Consequent family of the Sugeno rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SugenoOrder {
    /// Each rule outputs a constant.
    Constant,
    /// Each rule outputs an affine function of the inputs.
    Linear,
}

impl SugenoOrder {
    pub fn report_name(&self) -> &'static str {
        match self {
            SugenoOrder::Constant => "constant",
            SugenoOrder::Linear => "linear",
        }
    }

    /// Free consequent parameters per rule.
    fn params_per_rule(&self, n_inputs: usize) -> usize {
        match self {
            SugenoOrder::Constant => 1,
            SugenoOrder::Linear => n_inputs + 1,
        }
    }
}

/// One fuzzy rule: a cell of the membership grid and its consequent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SugenoRule {
    /// Membership index per input.
    pub antecedent: Vec<usize>,
    /// Input coefficients of a linear consequent; empty for constant order.
    pub coefficients: Vec<f64>,
    /// Constant term of the consequent.
    pub bias: f64,
}

impl SugenoRule {
    fn output(&self, x: &[f64]) -> f64 {
        let mut f = self.bias;
        for (c, xi) in self.coefficients.iter().zip(x) {
            f += c * xi;
        }
        f
    }
}

/// A complete fuzzy inference system over normalized inputs, with the
/// normalization bounds needed to accept raw process values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisModel {
    pub n_inputs: usize,
    /// Membership functions per input, in center order.
    pub mfs: Vec<Vec<GaussianMF>>,
    /// Complete rule grid; the last input's membership index varies fastest.
    pub rules: Vec<SugenoRule>,
    pub order: SugenoOrder,
    pub norm: NormParams,
}

/// On-disk form of a fuzzy model.
#[derive(Serialize, Deserialize)]
struct FisModelFile {
    model_kind: String,
    schema_version: u32,
    n_inputs: usize,
    order: SugenoOrder,
    mfs: Vec<Vec<GaussianMF>>,
    rules: Vec<SugenoRule>,
    norm: NormParams,
}

impl FisModel {
    /// Uniform grid initialization: per input, `n_mfs` centers equally
    /// spaced across the range including both endpoints, with spreads
    /// chosen so adjacent memberships cross at 0.5; one zero-consequent
    /// rule per cell of the membership grid.
    pub fn grid_partition(
        ranges: &[(f64, f64)],
        n_mfs: &[usize],
        order: SugenoOrder,
        norm: NormParams,
    ) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::EmptyInput);
        }
        if ranges.len() != n_mfs.len() {
            return Err(Error::LengthMismatch {
                left: ranges.len(),
                right: n_mfs.len(),
            });
        }
        if norm.input_dim() != ranges.len() {
            return Err(Error::DimensionMismatch {
                expected: ranges.len(),
                found: norm.input_dim(),
            });
        }
        let n_inputs = ranges.len();
        let mut mfs = Vec::with_capacity(n_inputs);
        for (i, (&(lo, hi), &m)) in ranges.iter().zip(n_mfs).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
                return Err(Error::BadRange {
                    name: format!("input {}", i + 1),
                    min: lo,
                    max: hi,
                });
            }
            if m < 2 {
                return Err(Error::InvalidArgument(
                    "each input needs at least 2 membership functions".to_string(),
                ));
            }
            let spacing = (hi - lo) / (m - 1) as f64;
            // Half the spacing, rescaled so the value at a neighbor's
            // midpoint is exactly 0.5.
            let sigma = (spacing / 2.0 / (2.0 * std::f64::consts::LN_2).sqrt())
                .max(SIGMA_FLOOR);
            let column: Vec<GaussianMF> = (0..m)
                .map(|j| GaussianMF {
                    center: lo + spacing * j as f64,
                    sigma,
                })
                .collect();
            mfs.push(column);
        }

        let rule_count: usize = n_mfs.iter().product();
        let mut rules = Vec::with_capacity(rule_count);
        let mut idx = vec![0usize; n_inputs];
        'grid: loop {
            rules.push(SugenoRule {
                antecedent: idx.clone(),
                coefficients: match order {
                    SugenoOrder::Constant => Vec::new(),
                    SugenoOrder::Linear => vec![0.0; n_inputs],
                },
                bias: 0.0,
            });
            // Odometer increment, last input fastest.
            let mut pos = n_inputs;
            loop {
                if pos == 0 {
                    break 'grid;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < n_mfs[pos] {
                    continue 'grid;
                }
                idx[pos] = 0;
            }
        }

        Ok(FisModel {
            n_inputs,
            mfs,
            rules,
            order,
            norm,
        })
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    /// Firing strength of every rule at a normalized input.
    fn firing(&self, x: &[f64], out: &mut [f64]) {
        for (w, rule) in out.iter_mut().zip(&self.rules) {
            let mut p = 1.0;
            for (i, &j) in rule.antecedent.iter().enumerate() {
                p *= self.mfs[i][j].value(x[i]);
            }
            *w = p;
        }
    }

    /// Firing-weighted consequent sum and total firing strength.
    fn weighted_sum(&self, x: &[f64]) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for rule in &self.rules {
            let mut w = 1.0;
            for (i, &j) in rule.antecedent.iter().enumerate() {
                w *= self.mfs[i][j].value(x[i]);
            }
            num += w * rule.output(x);
            den += w;
        }
        (num, den)
    }

    /// Like [`FisModel::forward_normalized`] but yields NaN instead of an
    /// error, so training loops can treat blowups as divergence.
    pub(crate) fn forward_norm_raw(&self, x: &[f64]) -> f64 {
        let (num, den) = self.weighted_sum(x);
        if !(den >= FIRING_FLOOR) || !den.is_finite() {
            return f64::NAN;
        }
        num / den
    }

    /// Output for an input already in normalized units.
    pub fn forward_normalized(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                found: x.len(),
            });
        }
        let (num, den) = self.weighted_sum(x);
        if !(den >= FIRING_FLOOR) || !den.is_finite() {
            return Err(Error::DegenerateFiring);
        }
        Ok(num / den)
    }

    /// Cycle time in seconds for raw process inputs.
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        if raw.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                found: raw.len(),
            });
        }
        let x = self.norm.normalize_input(raw);
        Ok(self.norm.denormalize_target(self.forward_normalized(&x)?))
    }

    /// Predictions in seconds for every row of a raw dataset.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        if d.input_dim() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                found: d.input_dim(),
            });
        }
        let mut x = vec![0.0; self.n_inputs];
        let mut out = Vec::with_capacity(d.len());
        for (raw, _) in d.rows() {
            self.norm.normalize_input_into(raw, &mut x);
            out.push(self.norm.denormalize_target(self.forward_normalized(&x)?));
        }
        Ok(out)
    }

    /// Structural invariants every stored model must satisfy.
    fn check_consistent(&self) -> Result<()> {
        let schema = |why: String| Err(Error::Schema(why));
        if self.mfs.len() != self.n_inputs {
            return schema("membership column count differs from n_inputs".to_string());
        }
        if self.norm.input_dim() != self.n_inputs {
            return schema("normalization dimension differs from n_inputs".to_string());
        }
        for column in &self.mfs {
            if column.is_empty() {
                return schema("an input has no membership functions".to_string());
            }
            for mf in column {
                if !mf.center.is_finite() || !(mf.sigma >= SIGMA_FLOOR) {
                    return schema(format!(
                        "membership parameters out of range: center {}, sigma {}",
                        mf.center, mf.sigma
                    ));
                }
            }
        }
        let expected: usize = self.mfs.iter().map(|c| c.len()).product();
        if self.rules.len() != expected {
            return schema(format!(
                "rule count {} does not cover the {}-cell grid",
                self.rules.len(),
                expected
            ));
        }
        let mut seen = vec![false; expected];
        for rule in &self.rules {
            if rule.antecedent.len() != self.n_inputs {
                return schema("rule antecedent arity differs from n_inputs".to_string());
            }
            let mut cell = 0usize;
            for (i, &j) in rule.antecedent.iter().enumerate() {
                if j >= self.mfs[i].len() {
                    return schema("rule references a missing membership function".to_string());
                }
                cell = cell * self.mfs[i].len() + j;
            }
            if seen[cell] {
                return schema("duplicate rule for one grid cell".to_string());
            }
            seen[cell] = true;
            let want = match self.order {
                SugenoOrder::Constant => 0,
                SugenoOrder::Linear => self.n_inputs,
            };
            if rule.coefficients.len() != want {
                return schema("rule consequent shape differs from the Sugeno order".to_string());
            }
            if rule.bias.is_nan() || rule.coefficients.iter().any(|c| c.is_nan()) {
                return schema("rule consequent holds NaN".to_string());
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = FisModelFile {
            model_kind: FIS_MODEL_KIND.to_string(),
            schema_version: FIS_SCHEMA_VERSION,
            n_inputs: self.n_inputs,
            order: self.order,
            mfs: self.mfs.clone(),
            rules: self.rules.clone(),
            norm: self.norm.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let kind = crate::ann::model_kind_of(json)?;
        if kind != FIS_MODEL_KIND {
            return Err(Error::ModelKind {
                expected: FIS_MODEL_KIND,
                found: kind,
            });
        }
        let file: FisModelFile = serde_json::from_str(json)?;
        if file.schema_version != FIS_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model schema version {}",
                file.schema_version
            )));
        }
        let model = FisModel {
            n_inputs: file.n_inputs,
            mfs: file.mfs,
            rules: file.rules,
            order: file.order,
            norm: file.norm,
        };
        model.check_consistent()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        FisModel::from_json(&json)
    }
}

/// Mean squared error over a normalized dataset; NaN when empty or when any
/// row evaluates degenerately.
pub fn fis_mse(fis: &FisModel, data: &Dataset) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut sum = 0.0;
    for (x, y) in data.rows() {
        let e = y - fis.forward_norm_raw(x);
        sum += e * e;
    }
    sum / data.len() as f64
}

/// Hyperparameters of hybrid training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    /// Upper bound on epochs.
    pub max_epochs: usize,
    /// Training stops once the normalized training MSE reaches this.
    pub goal_mse: f64,
    /// Gradient step on membership centers and spreads; 0 freezes them.
    pub lr_premise: f64,
    /// Per-epoch multiplier applied to the premise step.
    pub lr_decay: f64,
    /// Consecutive validation failures tolerated before early stopping;
    /// 0 disables the watch.
    pub max_fail: usize,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            max_epochs: 50,
            goal_mse: 0.0,
            lr_premise: 0.01,
            lr_decay: 0.99,
            max_fail: 6,
        }
    }
}

impl HybridConfig {
    fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(why.to_string()));
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if !(self.goal_mse >= 0.0) || !self.goal_mse.is_finite() {
            return bad("goal_mse must be a finite non-negative number");
        }
        if !(self.lr_premise >= 0.0) || !self.lr_premise.is_finite() {
            return bad("lr_premise must be non-negative and finite");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Remembers the model with the best validation error.
struct BestSnapshot {
    max_fail: usize,
    best_val: f64,
    best: Option<FisModel>,
    fails: usize,
}

impl BestSnapshot {
    fn new(max_fail: usize) -> Self {
        BestSnapshot {
            max_fail,
            best_val: f64::INFINITY,
            best: None,
            fails: 0,
        }
    }

    /// Returns true when patience is exhausted.
    fn observe(&mut self, val_mse: f64, fis: &FisModel) -> bool {
        if val_mse < self.best_val {
            self.best_val = val_mse;
            self.best = Some(fis.clone());
            self.fails = 0;
            false
        } else {
            self.fails += 1;
            self.max_fail > 0 && self.fails >= self.max_fail
        }
    }
}

/// Solves the rule consequents by least squares with the memberships held
/// fixed. Returns true when the solve needed the ridge fallback.
fn solve_consequents(fis: &mut FisModel, train: &Dataset) -> Result<bool> {
    let order = fis.order;
    let n_inputs = fis.n_inputs;
    let per_rule = order.params_per_rule(n_inputs);
    let cols = fis.rules.len() * per_rule;
    let mut design = Matrix::zeros(train.len(), cols);
    let mut targets = Vec::with_capacity(train.len());
    let mut w = vec![0.0; fis.rules.len()];
    for (row_i, (x, y)) in train.rows().enumerate() {
        fis.firing(x, &mut w);
        let s: f64 = w.iter().sum();
        if !(s >= FIRING_FLOOR) || !s.is_finite() {
            return Err(Error::DegenerateFiring);
        }
        for (r, &wr) in w.iter().enumerate() {
            let wbar = wr / s;
            match order {
                SugenoOrder::Constant => design.set(row_i, r, wbar),
                SugenoOrder::Linear => {
                    let base = r * per_rule;
                    for (i, &xi) in x.iter().enumerate() {
                        design.set(row_i, base + i, wbar * xi);
                    }
                    design.set(row_i, base + n_inputs, wbar);
                }
            }
        }
        targets.push(y);
    }
    let solution = solve_least_squares(&design, &targets)?;
    for (r, rule) in fis.rules.iter_mut().enumerate() {
        match order {
            SugenoOrder::Constant => rule.bias = solution.x[r],
            SugenoOrder::Linear => {
                let base = r * per_rule;
                rule.coefficients
                    .copy_from_slice(&solution.x[base..base + n_inputs]);
                rule.bias = solution.x[base + n_inputs];
            }
        }
    }
    Ok(solution.rank_deficient)
}

/// One full-batch gradient step on every membership center and spread,
/// backpropagated through the normalized firing and the consequents.
fn premise_step(fis: &mut FisModel, train: &Dataset, lr: f64) {
    let n = train.len() as f64;
    let mut grad_c: Vec<Vec<f64>> = fis.mfs.iter().map(|col| vec![0.0; col.len()]).collect();
    let mut grad_s = grad_c.clone();
    let mut mu: Vec<Vec<f64>> = fis.mfs.iter().map(|col| vec![0.0; col.len()]).collect();
    let n_rules = fis.rules.len();
    let mut w = vec![0.0; n_rules];
    let mut f = vec![0.0; n_rules];

    for (x, y) in train.rows() {
        for (i, column) in fis.mfs.iter().enumerate() {
            for (j, mf) in column.iter().enumerate() {
                mu[i][j] = mf.value(x[i]);
            }
        }
        let mut s = 0.0;
        let mut num = 0.0;
        for (r, rule) in fis.rules.iter().enumerate() {
            let mut p = 1.0;
            for (i, &j) in rule.antecedent.iter().enumerate() {
                p *= mu[i][j];
            }
            w[r] = p;
            f[r] = rule.output(x);
            s += p;
            num += p * f[r];
        }
        if !(s >= FIRING_FLOOR) || !s.is_finite() {
            // A dead row contributes no gradient; the blowup still shows up
            // in the epoch trace as a non-finite MSE.
            continue;
        }
        let y_hat = num / s;
        let de = 2.0 / n * (y_hat - y);
        if !de.is_finite() {
            continue;
        }
        for (r, rule) in fis.rules.iter().enumerate() {
            let dy_dw = (f[r] - y_hat) / s;
            for (i, &j) in rule.antecedent.iter().enumerate() {
                let mut others = 1.0;
                for (k, &jk) in rule.antecedent.iter().enumerate() {
                    if k != i {
                        others *= mu[k][jk];
                    }
                }
                let mf = &fis.mfs[i][j];
                let d = x[i] - mf.center;
                let dmu_dc = mu[i][j] * d / (mf.sigma * mf.sigma);
                let dmu_ds = mu[i][j] * d * d / (mf.sigma * mf.sigma * mf.sigma);
                grad_c[i][j] += de * dy_dw * others * dmu_dc;
                grad_s[i][j] += de * dy_dw * others * dmu_ds;
            }
        }
    }

    for (i, column) in fis.mfs.iter_mut().enumerate() {
        for (j, mf) in column.iter_mut().enumerate() {
            mf.center -= lr * grad_c[i][j];
            mf.sigma -= lr * grad_s[i][j];
            if !(mf.sigma > SIGMA_FLOOR) {
                mf.sigma = SIGMA_FLOOR;
            }
        }
    }
}

/// Hybrid training: each epoch solves the consequents by least squares,
/// records the loss, then takes one gradient step on the memberships. The
/// trace and the returned model both reflect post-solve states, and with a
/// validation partition present the best-validation model is returned.
pub fn train_hybrid(
    initial: &FisModel,
    data: &SplitDataset,
    config: &HybridConfig,
) -> Result<(FisModel, TrainReport)> {
    config.validate()?;
    initial.check_consistent()?;
    if data.train.is_empty() {
        return Err(Error::EmptyInput);
    }
    for part in [&data.train, &data.validation, &data.test] {
        if !part.is_empty() && part.input_dim() != initial.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: initial.n_inputs,
                found: part.input_dim(),
            });
        }
    }
    let consequent_params = initial.rules.len() * initial.order.params_per_rule(initial.n_inputs);
    if data.train.len() < consequent_params {
        return Err(Error::InvalidArgument(format!(
            "{} training rows cannot determine {} consequent parameters",
            data.train.len(),
            consequent_params
        )));
    }

    let mut fis = initial.clone();
    let patience = !data.validation.is_empty() && config.max_fail > 0;
    let mut snapshot = BestSnapshot::new(config.max_fail);
    if patience {
        // Baseline observation, so a run that only ever hurts validation
        // error falls back to the initial model.
        snapshot.observe(fis_mse(&fis, &data.validation), &fis);
    }
    let mut trace: Vec<EpochRecord> = Vec::new();
    let mut last_good = fis.clone();
    let mut rank_warning = false;
    let mut lr = config.lr_premise;
    let mut reason = StopReason::MaxEpochs;
    let mut diverged = false;

    for epoch in 1..=config.max_epochs {
        rank_warning |= solve_consequents(&mut fis, &data.train)?;

        let train_mse = fis_mse(&fis, &data.train);
        let validation_mse = if data.validation.is_empty() {
            None
        } else {
            Some(fis_mse(&fis, &data.validation))
        };
        trace.push(EpochRecord {
            epoch,
            train_mse,
            validation_mse,
        });
        if !train_mse.is_finite() {
            reason = StopReason::Diverged;
            diverged = true;
            break;
        }
        last_good = fis.clone();
        if patience && snapshot.observe(validation_mse.unwrap_or(f64::NAN), &fis) {
            reason = StopReason::ValidationPatience;
            break;
        }
        if train_mse <= config.goal_mse {
            reason = StopReason::Goal;
            break;
        }
        if epoch == config.max_epochs {
            break;
        }
        // The premise step runs between epochs only, so the final model
        // always matches its last trace entry.
        if lr > 0.0 {
            premise_step(&mut fis, &data.train, lr);
        }
        lr *= config.lr_decay;
    }

    let final_fis = if diverged {
        snapshot.best.unwrap_or(last_good)
    } else if patience {
        snapshot.best.unwrap_or(fis)
    } else {
        fis
    };
    let mut predict = |x: &[f64]| final_fis.forward_norm_raw(x);
    let report = build_report_with(
        "anfis",
        &final_fis.norm,
        &mut predict,
        data,
        trace,
        reason,
        diverged,
        rank_warning,
        None,
    );
    Ok((final_fis, report))
}

/// Evaluation protocol for the fuzzy family: exact partition sizes on the
/// canonical 600-row dataset, the same proportions elsewhere.
pub fn anfis_split_spec(rows: usize) -> SplitSpec {
    if rows == 600 {
        SplitSpec::Counts {
            train: 400,
            validation: 100,
            test: 100,
        }
    } else {
        SplitSpec::Ratios {
            train: 2.0 / 3.0,
            validation: 1.0 / 6.0,
            test: 1.0 / 6.0,
        }
    }
}

/// Actual and predicted cycle times in seconds, row by row over a
/// normalized partition.
pub fn test_walk(fis: &FisModel, part: &Dataset) -> Vec<(usize, f64, f64)> {
    part.rows()
        .enumerate()
        .map(|(i, (x, y))| {
            let predicted = fis.norm.denormalize_target(fis.forward_norm_raw(x));
            let actual = fis.norm.denormalize_target(y);
            (i, actual, predicted)
        })
        .collect()
}

/// One cell of the fuzzy benchmarking grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnfisRun {
    pub n_mfs: usize,
    pub order: SugenoOrder,
    pub seed: u64,
    pub rule_count: usize,
    pub report: TrainReport,
    /// Per test row: (position in the test partition, actual seconds,
    /// predicted seconds).
    pub test_trace: Vec<(usize, f64, f64)>,
}

/// Benchmarks membership counts against Sugeno orders.
///
/// For every seed the raw dataset is normalized and split once; each
/// (membership count, order) cell then trains from a fresh grid partition
/// on that same split, so per-seed rows differ only in the model. Runs are
/// independent and execute in parallel; the result order is seeds-major,
/// then membership counts, then orders, and is deterministic.
pub fn run_anfis_comparison(
    raw: &Dataset,
    n_mfs_list: &[usize],
    orders: &[SugenoOrder],
    seeds: &[u64],
    split_spec: &SplitSpec,
    config: &HybridConfig,
) -> Result<Vec<AnfisRun>> {
    if seeds.is_empty() || n_mfs_list.is_empty() || orders.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (normalized, params) = normalize(raw)?;
    let dim = raw.input_dim();
    let cells: Vec<(u64, usize, SugenoOrder)> = seeds
        .iter()
        .flat_map(|&s| {
            n_mfs_list
                .iter()
                .flat_map(move |&m| orders.iter().map(move |&o| (s, m, o)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(seed, n_mfs, order)| {
            let data = split(&normalized, split_spec, seed)?;
            // Normalization maps every input column onto [-1, 1].
            let ranges = vec![(-1.0, 1.0); dim];
            let fis0 =
                FisModel::grid_partition(&ranges, &vec![n_mfs; dim], order, params.clone())?;
            let (fis, report) = train_hybrid(&fis0, &data, config)?;
            let test_trace = test_walk(&fis, &data.test);
            Ok(AnfisRun {
                n_mfs,
                order,
                seed,
                rule_count: fis.rule_count(),
                report,
                test_trace,
            })
        })
        .collect()
}

//! One-step secant: a memoryless quasi-Newton method. Each epoch builds a
//! search direction from the previous step and gradient change only, then
//! takes the longest backtracked step that satisfies a sufficient-decrease
//! test. Storage stays linear in the weight count.

use super::{Algorithm, Session, StopReason, TrainConfig, TrainReport, GRADIENT_EPS};
use crate::ann::{mse_gradient, network_mse, NetworkModel};
use crate::dataset::SplitDataset;
use crate::error::Result;
use crate::numerics::{dot, norm_sq};

/// Sufficient-decrease constant for the backtracking test.
const ARMIJO_C: f64 = 1e-4;

/// Each failed trial halves the step; give up after this many halvings.
const MAX_BACKTRACKS: usize = 20;

/// Secant direction from the last step `s`, gradient change `y`, and the
/// current gradient; falls back to steepest descent when the curvature
/// information is unusable or the result is not a descent direction.
fn secant_direction(s: &[f64], y: &[f64], grad: &[f64]) -> Option<Vec<f64>> {
    let sy = dot(s, y);
    if sy.abs() < 1e-300 {
        return None;
    }
    let sg = dot(s, grad);
    let yg = dot(y, grad);
    let yy = dot(y, y);
    let b = sg / sy;
    let a = -(1.0 + yy / sy) * b + yg / sy;
    let d: Vec<f64> = grad
        .iter()
        .zip(s)
        .zip(y)
        .map(|((&g, &si), &yi)| -g + a * si + b * yi)
        .collect();
    if d.iter().all(|v| v.is_finite()) && dot(&d, grad) < 0.0 {
        Some(d)
    } else {
        None
    }
}

pub fn train_oss(
    model: &NetworkModel,
    data: &SplitDataset,
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainReport)> {
    let mut session = Session::new(model, data, config, true)?;
    let topology = &model.topology;
    let train = &data.train;

    let mut w = model.weights.clone();
    let mut grad = mse_gradient(topology, &w, train);
    let mut e_cur = network_mse(topology, &w, train);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut reason = StopReason::MaxEpochs;
    let mut w_try = vec![0.0; w.len()];

    'epochs: for epoch in 1..=config.max_epochs {
        if norm_sq(&grad).sqrt() < GRADIENT_EPS {
            reason = StopReason::GradientVanished;
            break;
        }
        let secant = prev
            .as_ref()
            .and_then(|(s, y)| secant_direction(s, y, &grad));
        let used_secant = secant.is_some();
        let mut d =
            secant.unwrap_or_else(|| grad.iter().map(|g| -g).collect::<Vec<f64>>());

        // Backtracking search; a failed secant direction gets one retry
        // along steepest descent before the run gives up.
        let mut accepted: Option<(f64, f64)> = None;
        for attempt in 0..2 {
            let slope = dot(&d, &grad);
            let mut alpha = 1.0;
            for _ in 0..=MAX_BACKTRACKS {
                for i in 0..w.len() {
                    w_try[i] = w[i] + alpha * d[i];
                }
                let e_try = network_mse(topology, &w_try, train);
                if e_try.is_finite() && e_try <= e_cur + ARMIJO_C * alpha * slope {
                    accepted = Some((alpha, e_try));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() || !used_secant || attempt == 1 {
                break;
            }
            d = grad.iter().map(|g| -g).collect();
        }
        let Some((alpha, e_new)) = accepted else {
            // Even steepest descent found no acceptable decrease: the
            // gradient is numerically spent.
            reason = StopReason::GradientVanished;
            break 'epochs;
        };

        let step: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        for (wi, si) in w.iter_mut().zip(&step) {
            *wi += si;
        }
        let grad_new = mse_gradient(topology, &w, train);
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(n, o)| n - o).collect();
        prev = Some((step, y));
        grad = grad_new;
        e_cur = e_new;

        if let Some(stop) = session.record(epoch, &w) {
            reason = stop;
            break;
        }
    }
    Ok(session.conclude(Algorithm::Oss, model, data, w, reason, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::Topology;
    use crate::dataset::{Dataset, NormParams};

    fn empty(names: usize) -> Dataset {
        let n: Vec<String> = (1..=names).map(|i| format!("x{i}")).collect();
        Dataset::empty(n, "y".into())
    }

    fn bowl_problem() -> (NetworkModel, SplitDataset) {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let x1 = -1.0 + 0.5 * i as f64;
                let x2 = -1.0 + 0.5 * j as f64;
                inputs.push(vec![x1, x2]);
                targets.push(-0.4 * x1 + 0.9 * x2 - 0.2);
            }
        }
        let data = SplitDataset {
            train: Dataset::from_rows(inputs, targets).unwrap(),
            validation: empty(2),
            test: empty(2),
            seed: 0,
        };
        let topology = Topology::new(2, vec![]);
        let model =
            NetworkModel::new(topology, vec![0.0; 3], NormParams::identity(2)).unwrap();
        (model, data)
    }

    #[test]
    fn accepted_steps_never_increase_the_loss() {
        let (model, data) = bowl_problem();
        let mut config = TrainConfig::new(Algorithm::Oss);
        config.max_epochs = 40;
        let (_, report) = train_oss(&model, &data, &config).unwrap();
        for pair in report.trace.windows(2) {
            assert!(
                pair[1].train_mse <= pair[0].train_mse + 1e-15,
                "loss rose: {} -> {}",
                pair[0].train_mse,
                pair[1].train_mse
            );
        }
    }

    #[test]
    fn converges_on_a_quadratic_bowl() {
        let (model, data) = bowl_problem();
        let mut config = TrainConfig::new(Algorithm::Oss);
        config.max_epochs = 60;
        let (trained, report) = train_oss(&model, &data, &config).unwrap();
        assert!(report.train_mse_norm < 1e-8, "mse {}", report.train_mse_norm);
        assert!((trained.weights[0] + 0.4).abs() < 1e-3);
    }

    #[test]
    fn outpaces_plain_gradient_descent_on_the_same_budget() {
        let (model, data) = bowl_problem();
        let mut config = TrainConfig::new(Algorithm::Oss);
        config.max_epochs = 30;
        let (_, oss_report) = train_oss(&model, &data, &config).unwrap();
        config.algorithm = Algorithm::Gd;
        let (_, gd_report) = super::super::train_gd(&model, &data, &config).unwrap();
        assert!(
            oss_report.train_mse_norm < gd_report.train_mse_norm,
            "oss {} !< gd {}",
            oss_report.train_mse_norm,
            gd_report.train_mse_norm
        );
    }

    #[test]
    fn stops_at_a_stationary_point() {
        let (mut model, data) = bowl_problem();
        model.weights = vec![-0.4, 0.9, -0.2];
        let config = TrainConfig::new(Algorithm::Oss);
        let (_, report) = train_oss(&model, &data, &config).unwrap();
        assert_eq!(report.stop_reason, StopReason::GradientVanished);
        assert_eq!(report.epochs_run, 0);
    }
}

//! Full-batch gradient descent, with and without momentum.

use super::{Algorithm, Session, StopReason, TrainConfig, TrainReport};
use crate::ann::{mse_gradient, NetworkModel};
use crate::dataset::SplitDataset;
use crate::error::Result;

/// Gradient descent: `w <- w - lr * grad`.
pub fn train_gd(
    model: &NetworkModel,
    data: &SplitDataset,
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainReport)> {
    let mut session = Session::new(model, data, config, true)?;
    let topology = &model.topology;
    let mut w = model.weights.clone();
    let lr = config.learning_rate;
    let mut reason = StopReason::MaxEpochs;
    for epoch in 1..=config.max_epochs {
        let grad = mse_gradient(topology, &w, &data.train);
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= lr * gi;
        }
        if let Some(stop) = session.record(epoch, &w) {
            reason = stop;
            break;
        }
    }
    Ok(session.conclude(Algorithm::Gd, model, data, w, reason, None))
}

/// Gradient descent with momentum: the update is a decaying sum of past
/// gradients, `v <- momentum * v - lr * grad; w <- w + v`. With momentum 0
/// the arithmetic reduces exactly to plain gradient descent.
pub fn train_gdm(
    model: &NetworkModel,
    data: &SplitDataset,
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainReport)> {
    let mut session = Session::new(model, data, config, true)?;
    let topology = &model.topology;
    let mut w = model.weights.clone();
    let mut velocity = vec![0.0; w.len()];
    let lr = config.learning_rate;
    let momentum = config.momentum;
    let mut reason = StopReason::MaxEpochs;
    for epoch in 1..=config.max_epochs {
        let grad = mse_gradient(topology, &w, &data.train);
        for ((wi, vi), gi) in w.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *vi = momentum * *vi - lr * gi;
            *wi += *vi;
        }
        if let Some(stop) = session.record(epoch, &w) {
            reason = stop;
            break;
        }
    }
    Ok(session.conclude(Algorithm::Gdm, model, data, w, reason, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::{network_mse, Topology};
    use crate::dataset::{Dataset, NormParams};

    /// Affine fit of y = 0.8 x - 0.2: a convex problem with a known optimum.
    fn line_problem() -> (NetworkModel, SplitDataset) {
        let xs: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let targets: Vec<f64> = xs.iter().map(|&x| 0.8 * x - 0.2).collect();
        let train = Dataset::from_rows(inputs, targets).unwrap();
        let data = SplitDataset {
            validation: Dataset::empty(vec!["x1".into()], "y".into()),
            test: Dataset::empty(vec!["x1".into()], "y".into()),
            train,
            seed: 0,
        };
        let topology = Topology::new(1, vec![]);
        let model =
            NetworkModel::new(topology, vec![0.0, 0.0], NormParams::identity(1)).unwrap();
        (model, data)
    }

    /// Validation targets deliberately contradict the training targets, so
    /// fitting the training set monotonically worsens validation error.
    fn conflicted_problem() -> (NetworkModel, SplitDataset) {
        let xs: Vec<f64> = (0..10).map(|i| -0.9 + 0.2 * i as f64).collect();
        let train = Dataset::from_rows(
            xs.iter().map(|&x| vec![x]).collect(),
            xs.iter().map(|&x| x).collect(),
        )
        .unwrap();
        let validation = Dataset::from_rows(
            xs.iter().map(|&x| vec![x]).collect(),
            xs.iter().map(|&x| -x).collect(),
        )
        .unwrap();
        let data = SplitDataset {
            test: Dataset::empty(vec!["x1".into()], "y".into()),
            train,
            validation,
            seed: 0,
        };
        let topology = Topology::new(1, vec![]);
        let model =
            NetworkModel::new(topology, vec![0.0, 0.0], NormParams::identity(1)).unwrap();
        (model, data)
    }

    #[test]
    fn gd_descends_to_the_line() {
        let (model, data) = line_problem();
        let mut config = TrainConfig::new(Algorithm::Gd);
        config.learning_rate = 0.5;
        config.max_epochs = 300;
        let (trained, report) = train_gd(&model, &data, &config).unwrap();
        assert!(report.train_mse_norm < 1e-3, "mse {}", report.train_mse_norm);
        assert!(report.trace[0].train_mse > report.trace.last().unwrap().train_mse);
        assert!((trained.weights[0] - 0.8).abs() < 0.1);
        assert!(!report.diverged);
    }

    #[test]
    fn gd_reports_divergence_at_absurd_learning_rate() {
        let (model, data) = line_problem();
        let mut config = TrainConfig::new(Algorithm::Gd);
        config.learning_rate = 1e6;
        config.max_epochs = 50;
        let (trained, report) = train_gd(&model, &data, &config).unwrap();
        assert!(report.diverged);
        assert_eq!(report.stop_reason, StopReason::Diverged);
        assert!(report.epochs_run < 50);
        // The returned weights are the best finite ones, not the blown-up set.
        assert!(trained.weights.iter().all(|w| w.is_finite()));
        assert!(report.train_mse.is_finite());
    }

    #[test]
    fn gdm_with_zero_momentum_retraces_gd_exactly() {
        let (model, data) = line_problem();
        let mut config = TrainConfig::new(Algorithm::Gd);
        config.learning_rate = 0.3;
        config.momentum = 0.0;
        config.max_epochs = 40;
        let (m_gd, r_gd) = train_gd(&model, &data, &config).unwrap();
        let (m_gdm, r_gdm) = train_gdm(&model, &data, &config).unwrap();
        assert_eq!(m_gd.weights, m_gdm.weights);
        let gd_losses: Vec<f64> = r_gd.trace.iter().map(|e| e.train_mse).collect();
        let gdm_losses: Vec<f64> = r_gdm.trace.iter().map(|e| e.train_mse).collect();
        assert_eq!(gd_losses, gdm_losses);
    }

    #[test]
    fn momentum_accelerates_the_same_budget() {
        let (model, data) = line_problem();
        let mut config = TrainConfig::new(Algorithm::Gdm);
        config.learning_rate = 0.05;
        config.momentum = 0.9;
        config.max_epochs = 60;
        let (_, with_momentum) = train_gdm(&model, &data, &config).unwrap();
        config.momentum = 0.0;
        let (_, without) = train_gdm(&model, &data, &config).unwrap();
        assert!(
            with_momentum.train_mse_norm < without.train_mse_norm,
            "{} !< {}",
            with_momentum.train_mse_norm,
            without.train_mse_norm
        );
    }

    #[test]
    fn validation_patience_stops_and_restores_best_weights() {
        let (model, data) = conflicted_problem();
        let mut config = TrainConfig::new(Algorithm::Gd);
        config.learning_rate = 0.2;
        config.max_epochs = 500;
        config.max_fail = 6;
        let (trained, report) = train_gd(&model, &data, &config).unwrap();
        assert_eq!(report.stop_reason, StopReason::ValidationPatience);
        assert_eq!(report.epochs_run, 6);
        // Every epoch hurt validation, so the best weights are the initial
        // zeros; the final trace entry must be worse than what was returned.
        let returned_val =
            network_mse(&trained.topology, &trained.weights, &data.validation);
        let last_val = report.trace.last().unwrap().validation_mse.unwrap();
        assert!(returned_val <= last_val);
        assert!((trained.weights[0] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn goal_stops_early() {
        let (model, data) = line_problem();
        let mut config = TrainConfig::new(Algorithm::Gd);
        config.learning_rate = 0.5;
        config.max_epochs = 1000;
        config.goal_mse = 1e-2;
        let (_, report) = train_gd(&model, &data, &config).unwrap();
        assert_eq!(report.stop_reason, StopReason::Goal);
        assert!(report.epochs_run < 1000);
        assert!(report.trace.last().unwrap().train_mse <= 1e-2);
    }
}

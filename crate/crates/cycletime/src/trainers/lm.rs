//! Levenberg-Marquardt: Gauss-Newton steps on the residual Jacobian with
//! adaptive diagonal damping. A rejected or numerically unsolvable step
//! raises the damping; an accepted step lowers it. Damping beyond its cap
//! ends the run.

use super::{Algorithm, Session, StopReason, TrainConfig, TrainReport};
use crate::ann::{network_mse, residual_jacobian, NetworkModel};
use crate::dataset::{Dataset, SplitDataset};
use crate::error::{Error, Result};
use crate::numerics::solve_spd;

fn sse(model_topology: &crate::ann::Topology, weights: &[f64], data: &Dataset) -> f64 {
    network_mse(model_topology, weights, data) * data.len() as f64
}

pub fn train_lm(
    model: &NetworkModel,
    data: &SplitDataset,
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainReport)> {
    let mut session = Session::new(model, data, config, true)?;
    let topology = &model.topology;
    let train = &data.train;

    let mut w = model.weights.clone();
    let mut mu = config.mu0;
    let mut reason = StopReason::MaxEpochs;
    let mut w_try = vec![0.0; w.len()];

    'epochs: for epoch in 1..=config.max_epochs {
        let (jac, residuals) = residual_jacobian(topology, &w, train);
        let current_sse: f64 = residuals.iter().map(|e| e * e).sum();
        let gram = jac.transpose_times_self();
        let jte = jac.transpose_times_vec(&residuals);

        // Raise damping until a step both solves and improves the fit.
        loop {
            let mut damped = gram.clone();
            damped.add_to_diagonal(mu);
            let delta = match solve_spd(&damped, &jte) {
                Ok(delta) => delta,
                Err(Error::NotPositiveDefinite) => {
                    mu *= config.mu_increase;
                    if mu > config.mu_max {
                        reason = StopReason::MuOverflow;
                        break 'epochs;
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            for i in 0..w.len() {
                w_try[i] = w[i] - delta[i];
            }
            let trial_sse = sse(topology, &w_try, train);
            if trial_sse.is_finite() && trial_sse < current_sse {
                w.copy_from_slice(&w_try);
                mu = (mu * config.mu_decrease).max(1e-300);
                break;
            }
            mu *= config.mu_increase;
            if mu > config.mu_max {
                reason = StopReason::MuOverflow;
                break 'epochs;
            }
        }

        if let Some(stop) = session.record(epoch, &w) {
            reason = stop;
            break;
        }
    }
    Ok(session.conclude(Algorithm::Lm, model, data, w, reason, None))
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

    fn linear_problem() -> (NetworkModel, SplitDataset) {
        let xs: Vec<f64> = (0..15).map(|i| -1.0 + i as f64 / 7.0).collect();
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let targets: Vec<f64> = xs.iter().map(|&x| 0.6 * x + 0.3).collect();
        let data = SplitDataset {
            train: Dataset::from_rows(inputs, targets).unwrap(),
            validation: empty(1),
            test: empty(1),
            seed: 0,
        };
        let topology = Topology::new(1, vec![]);
        let model =
            NetworkModel::new(topology, vec![0.0, 0.0], NormParams::identity(1)).unwrap();
        (model, data)
    }

    #[test]
    fn one_accepted_step_solves_a_consistent_linear_system() {
        // With negligible damping the step is pure Gauss-Newton, which is
        // exact for a linear model on consistent data.
        let (model, data) = linear_problem();
        let mut config = TrainConfig::new(Algorithm::Lm);
        config.mu0 = 1e-12;
        config.max_epochs = 1;
        let (trained, report) = train_lm(&model, &data, &config).unwrap();
        let n = data.train.len() as f64;
        assert!(
            report.train_mse_norm * n < 1e-20,
            "sse {}",
            report.train_mse_norm * n
        );
        assert!((trained.weights[0] - 0.6).abs() < 1e-9);
        assert!((trained.weights[1] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn duplicate_features_trip_the_damping_retry_and_still_converge() {
        // Two identical input columns over x in {1, -1} give the exact
        // normal matrix [[4,4,0],[4,4,0],[0,0,4]]. With a subnormal mu the
        // damping is absorbed (4 + mu rounds to 4) and the second Cholesky
        // pivot is exactly zero, so the solve must fail and the damping loop
        // must raise mu until a factorization succeeds.
        let xs = [1.0, -1.0, 1.0, -1.0];
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, x]).collect();
        let targets: Vec<f64> = xs.iter().map(|&x| 1.4 * x - 0.1).collect();
        let data = SplitDataset {
            train: Dataset::from_rows(inputs, targets).unwrap(),
            validation: empty(2),
            test: empty(2),
            seed: 0,
        };
        let topology = Topology::new(2, vec![]);
        let model =
            NetworkModel::new(topology, vec![0.0; 3], NormParams::identity(2)).unwrap();
        let mut config = TrainConfig::new(Algorithm::Lm);
        config.mu0 = 1e-300;
        config.max_epochs = 1;
        let (trained, report) = train_lm(&model, &data, &config).unwrap();
        // One accepted step reaches the exact fit (possibly hitting the
        // zero-MSE goal); what matters is that the singular solve was
        // survived and the answer is clean.
        assert!(matches!(
            report.stop_reason,
            StopReason::MaxEpochs | StopReason::Goal
        ));
        assert_eq!(report.epochs_run, 1);
        assert!(report.train_mse_norm < 1e-20, "mse {}", report.train_mse_norm);
        assert!(trained.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn unimprovable_fit_stops_with_damping_overflow() {
        // Identical inputs with contradictory targets: the best fit has zero
        // gradient but non-zero error, so no step can improve and damping
        // climbs past its cap.
        let data = SplitDataset {
            train: Dataset::from_rows(vec![vec![0.0], vec![0.0]], vec![-1.0, 1.0])
                .unwrap(),
            validation: empty(1),
            test: empty(1),
            seed: 0,
        };
        let topology = Topology::new(1, vec![]);
        let model =
            NetworkModel::new(topology, vec![0.0, 0.0], NormParams::identity(1)).unwrap();
        let config = TrainConfig::new(Algorithm::Lm);
        let (trained, report) = train_lm(&model, &data, &config).unwrap();
        assert_eq!(report.stop_reason, StopReason::MuOverflow);
        assert_eq!(report.epochs_run, 0);
        assert_eq!(trained.weights, vec![0.0, 0.0]);
    }

    #[test]
    fn fits_a_small_nonlinear_net_quickly() {
        let xs: Vec<f64> = (0..50).map(|i| -1.0 + i as f64 / 24.5).collect();
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let targets: Vec<f64> = xs.iter().map(|&x| 0.4 * (3.0 * x).tanh() - 0.2 * x).collect();
        let data = SplitDataset {
            train: Dataset::from_rows(inputs, targets).unwrap(),
            validation: empty(1),
            test: empty(1),
            seed: 0,
        };
        let topology = Topology::new(1, vec![4]);
        let model = NetworkModel::init(&topology, 5, NormParams::identity(1)).unwrap();
        let mut config = TrainConfig::new(Algorithm::Lm);
        config.max_epochs = 60;
        let (_, report) = train_lm(&model, &data, &config).unwrap();
        assert!(report.train_mse_norm < 1e-6, "mse {}", report.train_mse_norm);
        assert!(!report.diverged);
    }
}

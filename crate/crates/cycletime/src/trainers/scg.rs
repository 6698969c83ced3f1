//! Scaled conjugate gradient: conjugate directions with a model-trust
//! damping term instead of a line search. Curvature along the search
//! direction is estimated with a forward-differenced gradient, damped by
//! lambda until it is positive, and the step quality ratio steers lambda
//! up or down.

use super::{Algorithm, Session, StopReason, TrainConfig, TrainReport, GRADIENT_EPS};
use crate::ann::{mse_gradient, network_mse, NetworkModel};
use crate::dataset::SplitDataset;
use crate::error::Result;
use crate::numerics::{dot, norm_sq};

/// Perturbation scale for the finite-difference curvature estimate.
const SIGMA0: f64 = 5e-5;

/// Initial damping.
const LAMBDA0: f64 = 5e-7;

/// Damping ceiling; beyond this the step length underflows to nothing, so
/// growth is pointless.
const LAMBDA_MAX: f64 = 1e100;

pub fn train_scg(
    model: &NetworkModel,
    data: &SplitDataset,
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainReport)> {
    let mut session = Session::new(model, data, config, true)?;
    let topology = &model.topology;
    let train = &data.train;
    let nw = topology.weight_count();

    let mut w = model.weights.clone();
    let mut grad = mse_gradient(topology, &w, train);
    let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut p = r.clone();
    let mut e_cur = network_mse(topology, &w, train);
    let mut lambda = LAMBDA0;
    let mut lambda_bar = 0.0;
    let mut success = true;
    let mut delta = 0.0;
    let mut steps_since_restart = 0usize;
    let mut reason = StopReason::MaxEpochs;
    let mut s = vec![0.0; nw];
    let mut w_try = vec![0.0; nw];

    for epoch in 1..=config.max_epochs {
        if norm_sq(&grad).sqrt() < GRADIENT_EPS {
            reason = StopReason::GradientVanished;
            break;
        }
        let mut p_sq = norm_sq(&p);
        if !(p_sq > 0.0) || !p_sq.is_finite() {
            // Degenerate direction: restart from steepest descent, which is
            // non-zero because the gradient check above passed.
            p.copy_from_slice(&r);
            steps_since_restart = 0;
            p_sq = norm_sq(&p);
        }

        if success {
            // Second-order information along p via a forward difference.
            let sigma_k = SIGMA0 / p_sq.sqrt();
            for i in 0..nw {
                w_try[i] = w[i] + sigma_k * p[i];
            }
            let grad_plus = mse_gradient(topology, &w_try, train);
            for i in 0..nw {
                s[i] = (grad_plus[i] - grad[i]) / sigma_k;
            }
            delta = dot(&p, &s);
        }

        // Damp the curvature, forcing it positive if needed.
        delta += (lambda - lambda_bar) * p_sq;
        if delta <= 0.0 {
            lambda_bar = 2.0 * (lambda - delta / p_sq);
            delta = -delta + lambda * p_sq;
            lambda = lambda_bar;
        }

        let mu = dot(&p, &r);
        if mu.abs() < 1e-300 || !delta.is_finite() {
            // No descent component left along the direction set.
            reason = StopReason::GradientVanished;
            break;
        }
        let alpha = mu / delta;
        for i in 0..nw {
            w_try[i] = w[i] + alpha * p[i];
        }
        let e_new = network_mse(topology, &w_try, train);

        // Quality of the quadratic model prediction for this step.
        let comparison = 2.0 * delta * (e_cur - e_new) / (mu * mu);

        if comparison >= 0.0 && e_new.is_finite() {
            w.copy_from_slice(&w_try);
            e_cur = e_new;
            let grad_new = mse_gradient(topology, &w, train);
            let r_new: Vec<f64> = grad_new.iter().map(|g| -g).collect();
            lambda_bar = 0.0;
            success = true;
            steps_since_restart += 1;
            if steps_since_restart >= nw {
                // Periodic restart keeps the direction set conjugate.
                p.copy_from_slice(&r_new);
                steps_since_restart = 0;
            } else {
                let beta = (norm_sq(&r_new) - dot(&r_new, &r)) / mu;
                for i in 0..nw {
                    p[i] = r_new[i] + beta * p[i];
                }
            }
            r = r_new;
            grad = grad_new;
            if comparison >= 0.75 {
                lambda *= 0.25;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }

        if comparison.is_finite() {
            if comparison < 0.25 {
                lambda += delta * (1.0 - comparison) / p_sq;
            }
        } else {
            // The trial step overflowed the loss; grow damping directly.
            lambda = (lambda * 10.0).max(LAMBDA0);
        }
        if !lambda.is_finite() || lambda > LAMBDA_MAX {
            lambda = LAMBDA_MAX;
        }

        if let Some(stop) = session.record(epoch, &w) {
            reason = stop;
            break;
        }
    }
    Ok(session.conclude(Algorithm::Scg, model, data, w, reason, None))
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

    /// Convex two-input affine problem with known optimum (0.3, -0.7, 0.1).
    fn bowl_problem() -> (NetworkModel, SplitDataset) {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                let x1 = -1.0 + 0.4 * i as f64;
                let x2 = -1.0 + 0.4 * j as f64;
                inputs.push(vec![x1, x2]);
                targets.push(0.3 * x1 - 0.7 * x2 + 0.1);
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
    fn first_step_follows_the_negative_gradient() {
        let (model, data) = bowl_problem();
        let g0 = mse_gradient(&model.topology, &model.weights, &data.train);
        let mut config = TrainConfig::new(Algorithm::Scg);
        config.max_epochs = 1;
        let (trained, _) = train_scg(&model, &data, &config).unwrap();
        let step: Vec<f64> = trained
            .weights
            .iter()
            .zip(&model.weights)
            .map(|(a, b)| a - b)
            .collect();
        let cos = dot(&step, &g0) / (norm_sq(&step).sqrt() * norm_sq(&g0).sqrt());
        assert!((cos + 1.0).abs() < 1e-12, "cosine with -grad: {}", -cos);
    }

    #[test]
    fn converges_on_a_quadratic_bowl() {
        let (model, data) = bowl_problem();
        let mut config = TrainConfig::new(Algorithm::Scg);
        config.max_epochs = 50;
        let (trained, report) = train_scg(&model, &data, &config).unwrap();
        assert!(
            report.train_mse_norm < 1e-10,
            "mse {}",
            report.train_mse_norm
        );
        assert!((trained.weights[0] - 0.3).abs() < 1e-4);
        assert!((trained.weights[1] + 0.7).abs() < 1e-4);
    }

    #[test]
    fn stops_immediately_when_the_gradient_has_vanished() {
        let (mut model, data) = bowl_problem();
        model.weights = vec![0.3, -0.7, 0.1];
        let config = TrainConfig::new(Algorithm::Scg);
        let (trained, report) = train_scg(&model, &data, &config).unwrap();
        assert_eq!(report.stop_reason, StopReason::GradientVanished);
        assert_eq!(report.epochs_run, 0);
        assert_eq!(trained.weights, model.weights);
    }

    #[test]
    fn makes_strong_progress_on_a_small_nonlinear_net() {
        let xs: Vec<f64> = (0..40).map(|i| -1.0 + i as f64 / 19.5).collect();
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let targets: Vec<f64> = xs.iter().map(|&x| (2.0 * x).sin() * 0.5).collect();
        let data = SplitDataset {
            train: Dataset::from_rows(inputs, targets).unwrap(),
            validation: empty(1),
            test: empty(1),
            seed: 0,
        };
        let topology = Topology::new(1, vec![4]);
        let model = NetworkModel::init(&topology, 1, NormParams::identity(1)).unwrap();
        let initial = network_mse(&topology, &model.weights, &data.train);
        let mut config = TrainConfig::new(Algorithm::Scg);
        config.max_epochs = 200;
        let (_, report) = train_scg(&model, &data, &config).unwrap();
        assert!(
            report.train_mse_norm < initial / 100.0,
            "initial {initial}, final {}",
            report.train_mse_norm
        );
        assert!(!report.diverged);
    }
}

//! Bayesian regularization: Levenberg-Marquardt steps on the regularized
//! objective `F = beta * SSE + alpha * E_W` with `E_W = |w|^2 / 2`. The
//! hyperparameters alpha and beta are re-estimated every epoch from the
//! effective number of parameters `gamma = N_w - alpha * tr(H^-1)` with
//! `H = 2 * beta * J^T J + alpha * I`, the Gauss-Newton curvature of F
//! (the 2 comes from E_D being the full SSE). The validation set plays no
//! role in stopping or selection; instead every epoch's weights are scored
//! by the log marginal likelihood (evidence)
//!
//! `ln p(D) = -F - ln det(H) / 2 + N_w ln(alpha) / 2 + n ln(beta) / 2 + c`
//!
//! and the highest-evidence state seen is returned. The run ends when
//! gamma settles, damping overflows, or the epoch budget runs out.

use super::{
    Algorithm, BrHyperRecord, Session, StopReason, TrainConfig, TrainReport,
};
use crate::ann::{network_mse, residual_jacobian, NetworkModel};
use crate::dataset::SplitDataset;
use crate::error::{Error, Result};
use crate::numerics::{norm_sq, solve_spd, spd_inverse_trace_and_logdet, Matrix};

/// Initial weight-decay strength; small enough that the first step is
/// essentially unregularized but positive so every recorded alpha is.
const ALPHA0: f64 = 1e-8;

/// Initial inverse noise scale.
const BETA0: f64 = 1.0;

/// Epoch-over-epoch gamma change below this counts as stable.
const GAMMA_TOL: f64 = 1e-3;

/// Consecutive stable epochs required to stop.
const GAMMA_PATIENCE: usize = 10;

/// Floors that keep the hyperparameter updates finite and positive.
const TINY: f64 = 1e-300;

/// `tr(H^-1)` and `ln det H` for `H = scale * gram + alpha * I`, retrying
/// with a growing diagonal jitter if rounding makes the factorization fail.
/// Returns None when even the jittered factorizations fail.
fn curvature_stats(gram: &Matrix, scale: f64, alpha: f64) -> Option<(f64, f64)> {
    let n = gram.rows();
    let mean_diag: f64 =
        (0..n).map(|i| gram.get(i, i)).sum::<f64>() / n as f64;
    let mut jitter = 0.0;
    for _ in 0..4 {
        let mut h = gram.clone();
        h.scale(scale);
        h.add_to_diagonal(alpha + jitter);
        match spd_inverse_trace_and_logdet(&h) {
            Ok(stats) => return Some(stats),
            Err(_) => {
                jitter = if jitter == 0.0 {
                    1e-12 * scale * mean_diag.max(1.0)
                } else {
                    jitter * 100.0
                };
            }
        }
    }
    None
}

pub fn train_br(
    model: &NetworkModel,
    data: &SplitDataset,
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainReport)> {
    // Patience off: all rows except the test partition inform the fit here,
    // and stopping is governed by the evidence quantities instead.
    let mut session = Session::new(model, data, config, false)?;
    let topology = &model.topology;
    let train = &data.train;
    let n = train.len() as f64;
    let nw = topology.weight_count();
    let nw_f = nw as f64;

    let mut w = model.weights.clone();
    let mut mu = config.mu0;
    let mut alpha = ALPHA0;
    let mut beta = BETA0;
    let mut gamma = nw_f;
    let mut stable_epochs = 0usize;
    let mut first_epoch = true;
    let mut reason = StopReason::MaxEpochs;
    let mut hyper_trace: Vec<BrHyperRecord> = Vec::new();
    let mut w_try = vec![0.0; w.len()];
    let mut best_evidence = f64::NEG_INFINITY;
    let mut best_w = w.clone();

    'epochs: for epoch in 1..=config.max_epochs {
        let (jac, residuals) = residual_jacobian(topology, &w, train);
        let current_sse: f64 = residuals.iter().map(|e| e * e).sum();
        let e_w = 0.5 * norm_sq(&w);
        let gram = jac.transpose_times_self();
        let jte = jac.transpose_times_vec(&residuals);

        // Re-estimate the hyperparameters from the evidence at the current
        // point; the first epoch runs on the initial values. The curvature
        // of beta * SSE is 2 * beta * J^T J.
        if !first_epoch {
            if let Some((tr_inv, _)) = curvature_stats(&gram, 2.0 * beta, alpha) {
                let new_gamma = (nw_f - alpha * tr_inv).clamp(1e-12, nw_f);
                let gamma_delta = (new_gamma - gamma).abs();
                gamma = new_gamma;
                alpha = gamma / (2.0 * e_w.max(TINY));
                // gamma is capped below N so beta stays strictly positive.
                let effective = gamma.min(0.999 * n);
                beta = (n - effective) / (2.0 * current_sse.max(TINY));
                if gamma_delta < GAMMA_TOL {
                    stable_epochs += 1;
                } else {
                    stable_epochs = 0;
                }
            }
        }
        first_epoch = false;

        // Evidence of the current weights under the refreshed
        // hyperparameters; the returned model is the best-evidence state
        // seen along the run.
        let log_evidence =
            curvature_stats(&gram, 2.0 * beta, alpha).map(|(_, log_det)| {
                -beta * current_sse - alpha * e_w - 0.5 * log_det
                    + 0.5 * nw_f * alpha.ln()
                    + 0.5 * n * beta.ln()
            });
        if let Some(ev) = log_evidence {
            if ev.is_finite() && ev > best_evidence {
                best_evidence = ev;
                best_w.copy_from_slice(&w);
            }
        }
        hyper_trace.push(BrHyperRecord {
            epoch,
            alpha,
            beta,
            gamma,
            log_evidence,
        });
        if stable_epochs >= GAMMA_PATIENCE {
            reason = StopReason::GammaStabilized;
            break 'epochs;
        }

        let f_current = beta * current_sse + alpha * e_w;

        // Damped step on the regularized objective; the solve uses half the
        // gradient of F, which only rescales the damping path.
        loop {
            let mut damped = gram.clone();
            damped.scale(beta);
            damped.add_to_diagonal(alpha + mu);
            let mut rhs = vec![0.0; nw];
            for i in 0..nw {
                rhs[i] = beta * jte[i] + 0.5 * alpha * w[i];
            }
            let delta = match solve_spd(&damped, &rhs) {
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
            for i in 0..nw {
                w_try[i] = w[i] - delta[i];
            }
            let trial_sse =
                network_mse(topology, &w_try, train) * n;
            let trial_f = beta * trial_sse + alpha * 0.5 * norm_sq(&w_try);
            if trial_f.is_finite() && trial_f < f_current {
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
    let chosen = if best_evidence.is_finite() { best_w } else { w };
    Ok(session.conclude(Algorithm::Br, model, data, chosen, reason, Some(hyper_trace)))
}

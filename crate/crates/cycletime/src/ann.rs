//! Feedforward network with hyperbolic-tangent-sigmoid hidden layers and a
//! linear output neuron, plus the reverse-mode derivatives the trainers need.
//!
//! Weights live in one flat vector, laid out layer by layer; within a layer,
//! neuron by neuron; within a neuron, the fan-in weights followed by the
//! bias. Everything that differentiates the network (gradient, Jacobian)
//! shares one backward pass so the two stay consistent by construction.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormParams};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Hyperbolic tangent sigmoid, the hidden-layer activation.
#[inline]
pub fn tansig(n: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * n).exp()) - 1.0
}

/// Network shape: input width and hidden-layer widths. The output layer is
/// always a single linear neuron. An empty hidden list yields a plain affine
/// model, which is useful for exercising the trainers on problems with a
/// known solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
}

impl Topology {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>) -> Self {
        Topology {
            input_dim,
            hidden_widths,
        }
    }

    /// (fan_in, fan_out) per layer, output layer included.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.input_dim;
        for &w in &self.hidden_widths {
            shapes.push((fan_in, w));
            fan_in = w;
        }
        shapes.push((fan_in, 1));
        shapes
    }

    /// Total number of weights and biases.
    pub fn weight_count(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|(fan_in, fan_out)| (fan_in + 1) * fan_out)
            .sum()
    }

    fn activation_names(&self) -> Vec<String> {
        let mut names = vec!["tansig".to_string(); self.hidden_widths.len()];
        names.push("purelin".to_string());
        names
    }
}

/// Scratch buffers for forward and backward passes over one topology.
/// Reused across samples so hot loops do not allocate.
pub(crate) struct Evaluator {
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    /// acts[0] holds the input; acts[l + 1] holds layer l's outputs.
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Evaluator {
    pub fn new(topology: &Topology) -> Self {
        let shapes = topology.layer_shapes();
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut off = 0;
        for &(fan_in, fan_out) in &shapes {
            offsets.push(off);
            off += (fan_in + 1) * fan_out;
        }
        let mut acts = vec![vec![0.0; topology.input_dim]];
        let mut deltas = Vec::with_capacity(shapes.len());
        for &(_, fan_out) in &shapes {
            acts.push(vec![0.0; fan_out]);
            deltas.push(vec![0.0; fan_out]);
        }
        Evaluator {
            shapes,
            offsets,
            acts,
            deltas,
        }
    }

    /// Forward pass in normalized units.
    pub fn forward(&mut self, weights: &[f64], x: &[f64]) -> f64 {
        self.acts[0].copy_from_slice(x);
        let last = self.shapes.len() - 1;
        for (l, &(fan_in, fan_out)) in self.shapes.iter().enumerate() {
            let base = self.offsets[l];
            let (prev, rest) = self.acts.split_at_mut(l + 1);
            let input = &prev[l];
            let output = &mut rest[0];
            for j in 0..fan_out {
                let wrow = &weights[base + j * (fan_in + 1)..base + (j + 1) * (fan_in + 1)];
                let mut z = wrow[fan_in];
                for i in 0..fan_in {
                    z += wrow[i] * input[i];
                }
                output[j] = if l == last { z } else { tansig(z) };
            }
        }
        self.acts[last + 1][0]
    }

    /// Forward pass plus the derivative of the output with respect to every
    /// weight, written into `grad`. Returns the output.
    pub fn output_gradient(&mut self, weights: &[f64], x: &[f64], grad: &mut [f64]) -> f64 {
        let y = self.forward(weights, x);
        let last = self.shapes.len() - 1;
        self.deltas[last][0] = 1.0;
        for l in (0..last).rev() {
            let (fan_in_next, fan_out_next) = self.shapes[l + 1];
            let base_next = self.offsets[l + 1];
            let width = self.shapes[l].1;
            for i in 0..width {
                let mut acc = 0.0;
                for j in 0..fan_out_next {
                    acc += self.deltas[l + 1][j] * weights[base_next + j * (fan_in_next + 1) + i];
                }
                let a = self.acts[l + 1][i];
                self.deltas[l][i] = acc * (1.0 - a * a);
            }
        }
        for (l, &(fan_in, fan_out)) in self.shapes.iter().enumerate() {
            let base = self.offsets[l];
            let input = &self.acts[l];
            for j in 0..fan_out {
                let d = self.deltas[l][j];
                let row = &mut grad[base + j * (fan_in + 1)..base + (j + 1) * (fan_in + 1)];
                for i in 0..fan_in {
                    row[i] = d * input[i];
                }
                row[fan_in] = d;
            }
        }
        y
    }
}

/// Mean squared error of the network over a normalized dataset. Returns NaN
/// for an empty dataset.
pub fn network_mse(topology: &Topology, weights: &[f64], data: &Dataset) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut eval = Evaluator::new(topology);
    let mut sum = 0.0;
    for (x, y) in data.rows() {
        let e = y - eval.forward(weights, x);
        sum += e * e;
    }
    sum / data.len() as f64
}

/// Gradient of the mean squared error with respect to every weight, over a
/// normalized dataset.
pub fn mse_gradient(topology: &Topology, weights: &[f64], data: &Dataset) -> Vec<f64> {
    let mut eval = Evaluator::new(topology);
    let nw = topology.weight_count();
    let mut grad = vec![0.0; nw];
    let mut sample_grad = vec![0.0; nw];
    let scale = 2.0 / data.len() as f64;
    for (x, y) in data.rows() {
        let yhat = eval.output_gradient(weights, x, &mut sample_grad);
        let factor = scale * (yhat - y);
        for (g, s) in grad.iter_mut().zip(&sample_grad) {
            *g += factor * s;
        }
    }
    grad
}

/// Jacobian of the residuals `e_i = y_i - yhat_i` with respect to the
/// weights (one row per sample), together with the residual vector. The
/// MSE gradient equals `(2 / n) * J^T e`.
pub fn residual_jacobian(
    topology: &Topology,
    weights: &[f64],
    data: &Dataset,
) -> (Matrix, Vec<f64>) {
    let mut eval = Evaluator::new(topology);
    let nw = topology.weight_count();
    let mut jac = Matrix::zeros(data.len(), nw);
    let mut residuals = Vec::with_capacity(data.len());
    for (i, (x, y)) in data.rows().enumerate() {
        let yhat = eval.output_gradient(weights, x, jac.row_mut(i));
        for v in jac.row_mut(i) {
            *v = -*v;
        }
        residuals.push(y - yhat);
    }
    (jac, residuals)
}

/// A trained (or freshly initialized) network together with the
/// normalization that maps raw process settings into its input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub topology: Topology,
    pub weights: Vec<f64>,
    pub norm: NormParams,
}

const ANN_MODEL_KIND: &str = "ann";
const MODEL_SCHEMA_VERSION: u32 = 1;

/// On-disk form of a network model.
#[derive(Serialize, Deserialize)]
struct AnnModelFile {
    model_kind: String,
    schema_version: u32,
    topology: Topology,
    activations: Vec<String>,
    weights: Vec<f64>,
    norm: NormParams,
}

/// Reads just the `model_kind` tag, so a file of the wrong kind reports a
/// kind mismatch instead of a missing-field parse error.
pub fn model_kind_of(json: &str) -> Result<String> {
    #[derive(Deserialize)]
    struct KindProbe {
        model_kind: String,
    }
    let probe: KindProbe = serde_json::from_str(json)
        .map_err(|_| Error::Schema("not a model file: no model_kind field".to_string()))?;
    Ok(probe.model_kind)
}

impl NetworkModel {
    pub fn new(topology: Topology, weights: Vec<f64>, norm: NormParams) -> Result<Self> {
        if weights.len() != topology.weight_count() {
            return Err(Error::LengthMismatch {
                left: topology.weight_count(),
                right: weights.len(),
            });
        }
        if norm.input_dim() != topology.input_dim {
            return Err(Error::DimensionMismatch {
                expected: topology.input_dim,
                found: norm.input_dim(),
            });
        }
        Ok(NetworkModel {
            topology,
            weights,
            norm,
        })
    }

    /// Seeded Nguyen-Widrow initialization.
    ///
    /// Hidden-layer weight rows get a random direction scaled to magnitude
    /// `0.7 * fan_out^(1/fan_in)`, and biases spread the tanh transitions
    /// evenly across `[-1, 1]` along each unit's ridge direction, so the
    /// initial network already tiles the normalized input box instead of
    /// piling every transition at the origin. The linear output layer uses
    /// small uniform weights with a zero bias.
    pub fn init(topology: &Topology, seed: u64, norm: NormParams) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(topology.weight_count());
        let shapes = topology.layer_shapes();
        let last = shapes.len() - 1;
        for (layer, &(fan_in, fan_out)) in shapes.iter().enumerate() {
            if layer == last {
                let bound = 1.0 / (fan_in as f64).sqrt();
                for _ in 0..fan_out {
                    for _ in 0..fan_in {
                        weights.push(rng.random_range(-bound..bound));
                    }
                    weights.push(0.0);
                }
                continue;
            }
            let magnitude = 0.7 * (fan_out as f64).powf(1.0 / fan_in as f64);
            for unit in 0..fan_out {
                let mut row: Vec<f64> = (0..fan_in)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                let norm_len = row.iter().map(|w| w * w).sum::<f64>().sqrt().max(1e-12);
                for w in &mut row {
                    *w *= magnitude / norm_len;
                }
                // Transition offsets tile [-1, 1]; the sign keeps each
                // offset on the same side as the unit's leading weight so
                // the bend lands inside the box.
                let spread = if fan_out > 1 {
                    2.0 * unit as f64 / (fan_out as f64 - 1.0) - 1.0
                } else {
                    0.0
                };
                let bias = magnitude * spread * row[0].signum();
                weights.extend_from_slice(&row);
                weights.push(bias);
            }
        }
        NetworkModel::new(topology.clone(), weights, norm)
    }

    /// Output for an input already in normalized units.
    pub fn forward_normalized(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.topology.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.topology.input_dim,
                found: x.len(),
            });
        }
        let mut eval = Evaluator::new(&self.topology);
        Ok(eval.forward(&self.weights, x))
    }

    /// Predicted cycle time in seconds for raw process settings.
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        if raw.len() != self.topology.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.topology.input_dim,
                found: raw.len(),
            });
        }
        let x = self.norm.normalize_input(raw);
        let y = self.forward_normalized(&x)?;
        Ok(self.norm.denormalize_target(y))
    }

    /// Predictions in seconds over a dataset in raw units.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        if d.input_dim() != self.topology.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.topology.input_dim,
                found: d.input_dim(),
            });
        }
        let mut eval = Evaluator::new(&self.topology);
        let mut x = vec![0.0; d.input_dim()];
        let mut out = Vec::with_capacity(d.len());
        for (raw, _) in d.rows() {
            self.norm.normalize_input_into(raw, &mut x);
            out.push(self.norm.denormalize_target(eval.forward(&self.weights, &x)));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = AnnModelFile {
            model_kind: ANN_MODEL_KIND.to_string(),
            schema_version: MODEL_SCHEMA_VERSION,
            topology: self.topology.clone(),
            activations: self.topology.activation_names(),
            weights: self.weights.clone(),
            norm: self.norm.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let kind = model_kind_of(json)?;
        if kind != ANN_MODEL_KIND {
            return Err(Error::ModelKind {
                expected: ANN_MODEL_KIND,
                found: kind,
            });
        }
        let file: AnnModelFile = serde_json::from_str(json)?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model schema version {}",
                file.schema_version
            )));
        }
        if file.activations != file.topology.activation_names() {
            return Err(Error::Schema(
                "activation list does not match the topology".to_string(),
            ));
        }
        NetworkModel::new(file.topology, file.weights, file.norm)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        NetworkModel::from_json(&json)
    }
}

//! Training: target normalization, MAE loss, and the seeded mini-batch loop.

use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::adam_step;
use super::network::{Architecture, Network};
use super::NetError;
use crate::corpus::OneHotTensor;
use crate::seeding::{stream_rng, STREAM_SHUFFLE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_delta: f64,
}

/// Settings for building and training one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub architecture: Architecture,
    pub input_shape: (usize, usize, usize),
    pub output_count: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stopping: Option<EarlyStopping>,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.learning_rate <= 0.0 {
            return Err(NetError::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(NetError::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(NetError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.output_count == 0 {
            return Err(NetError::InvalidConfig("output_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch training losses (normalized scale) and wall-clock seconds.
#[derive(Debug, Clone, Default)]
pub struct TrainingHistory {
    pub losses: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
}

/// Per-output z-score statistics fitted on training targets. Outputs with
/// zero variance keep a standard deviation of 1 so they pass through
/// unscaled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetNormalizer {
    pub means: Array1<f64>,
    pub stds: Array1<f64>,
}

impl TargetNormalizer {
    pub fn fit(targets: &Array2<f64>) -> Self {
        let n = targets.nrows() as f64;
        let means = targets.sum_axis(ndarray::Axis(0)) / n;
        let mut stds = Array1::zeros(targets.ncols());
        for j in 0..targets.ncols() {
            let var = targets
                .column(j)
                .iter()
                .map(|&v| (v - means[j]) * (v - means[j]))
                .sum::<f64>()
                / n;
            let std = var.sqrt();
            stds[j] = if std > 1e-12 { std } else { 1.0 };
        }
        Self { means, stds }
    }

    pub fn normalize(&self, raw: &Array1<f64>) -> Array1<f64> {
        (raw - &self.means) / &self.stds
    }

    pub fn denormalize(&self, normalized: &Array1<f64>) -> Array1<f64> {
        normalized * &self.stds + &self.means
    }
}

/// Mean absolute error over all elements, with its gradient: sign(pred -
/// target) / N, zero at exact ties.
pub fn mae_loss(pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>), NetError> {
    if pred.dim() != target.dim() {
        return Err(NetError::ShapeMismatch(format!(
            "prediction shape {:?} does not match target shape {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(pred.dim());
    ndarray::Zip::from(&mut grad)
        .and(pred)
        .and(target)
        .for_each(|g, &p, &t| {
            let d = p - t;
            loss += d.abs();
            *g = if d > 0.0 {
                1.0 / n
            } else if d < 0.0 {
                -1.0 / n
            } else {
                0.0
            };
        });
    Ok((loss / n, grad))
}

/// Builds a network for the named architecture in the config.
pub fn build_network(config: &NetworkConfig) -> Result<Network, NetError> {
    config.validate()?;
    let specs = config.architecture.layer_specs(config.output_count);
    Network::new(
        config.architecture.name(),
        &specs,
        config.input_shape,
        config.seed,
    )
}

/// Builds and trains a network on (encoded level, target vector) pairs.
pub fn train(
    config: &NetworkConfig,
    examples: &[(OneHotTensor, Vec<f64>)],
) -> Result<(Network, TrainingHistory), NetError> {
    let mut network = build_network(config)?;
    let history = train_network(&mut network, config, examples)?;
    Ok((network, history))
}

/// Trains an existing network in place. Targets are z-score normalized with
/// statistics stored on the network; batches are reshuffled each epoch under
/// the config seed. Aborts with [`NetError::NonFiniteLoss`] the first time a
/// batch loss is not finite.
pub fn train_network(
    network: &mut Network,
    config: &NetworkConfig,
    examples: &[(OneHotTensor, Vec<f64>)],
) -> Result<TrainingHistory, NetError> {
    config.validate()?;
    let out = network.output_count();
    if examples.len() < config.batch_size {
        return Err(NetError::InvalidConfig(format!(
            "need at least batch_size ({}) training pairs, found {}",
            config.batch_size,
            examples.len()
        )));
    }
    for (tensor, target) in examples {
        if tensor.shape() != network.input_shape {
            return Err(NetError::ShapeMismatch(format!(
                "training tensor has shape {:?}, network expects {:?}",
                tensor.shape(),
                network.input_shape
            )));
        }
        if target.len() != out {
            return Err(NetError::ShapeMismatch(format!(
                "target has {} values, network outputs {out}",
                target.len()
            )));
        }
    }

    let n = examples.len();
    let raw_targets = Array2::from_shape_fn((n, out), |(i, j)| examples[i].1[j]);
    let normalizer = TargetNormalizer::fit(&raw_targets);
    let mut targets = Array2::zeros((n, out));
    for i in 0..n {
        let z = normalizer.normalize(&raw_targets.row(i).to_owned());
        targets.row_mut(i).assign(&z);
    }
    network.normalizer = Some(normalizer);

    let mut rng = stream_rng(config.seed, STREAM_SHUFFLE);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut history = TrainingHistory::default();
    let mut best_loss = f64::INFINITY;
    let mut epochs_without_improvement = 0usize;

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        indices.shuffle(&mut rng);
        let mut epoch_abs = 0.0;
        let mut epoch_elems = 0usize;
        for batch in indices.chunks(config.batch_size) {
            let batch_elems = (batch.len() * out) as f64;
            let mut grads = network.zero_gradients();
            let mut batch_abs = 0.0;
            for &i in batch {
                let cache = network.forward_cached(&examples[i].0.data)?;
                let mut grad = Array1::zeros(out);
                for j in 0..out {
                    let d = cache.output[j] - targets[[i, j]];
                    batch_abs += d.abs();
                    grad[j] = if d > 0.0 {
                        1.0 / batch_elems
                    } else if d < 0.0 {
                        -1.0 / batch_elems
                    } else {
                        0.0
                    };
                }
                network.backward_into(&cache, &grad, &mut grads)?;
            }
            if !batch_abs.is_finite() {
                return Err(NetError::NonFiniteLoss { epoch });
            }
            adam_step(network, &grads, config.learning_rate)?;
            epoch_abs += batch_abs;
            epoch_elems += batch.len() * out;
        }
        let loss = epoch_abs / epoch_elems as f64;
        if !loss.is_finite() {
            return Err(NetError::NonFiniteLoss { epoch });
        }
        history.losses.push(loss);
        history.epoch_seconds.push(start.elapsed().as_secs_f64());

        if let Some(stop) = &config.early_stopping {
            if loss < best_loss - stop.min_delta {
                best_loss = loss;
                epochs_without_improvement = 0;
            } else {
                epochs_without_improvement += 1;
                if epochs_without_improvement >= stop.patience {
                    break;
                }
            }
        }
    }
    Ok(history)
}

/// Forward pass de-normalized to raw target units.
pub fn predict_bcs(network: &Network, level: &OneHotTensor) -> Result<Vec<f64>, NetError> {
    let normalizer = network
        .normalizer
        .as_ref()
        .ok_or(NetError::NotTrained)?;
    let out = network.forward(&level.data)?;
    Ok(normalizer.denormalize(&out).to_vec())
}

const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    network: Network,
}

impl Network {
    /// Serializes the full model (architecture name, input shape, normalizer
    /// statistics, and parameter arrays in layer order) as version-tagged
    /// JSON.
    pub fn save_json(&self, path: &Path) -> Result<(), NetError> {
        let file = ModelFile {
            version: MODEL_VERSION,
            network: self.clone(),
        };
        let json = serde_json::to_string(&file).map_err(|e| NetError::Serde(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load_json(path: &Path) -> Result<Network, NetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| NetError::Serde(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(NetError::Serde(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        Ok(file.network)
    }
}

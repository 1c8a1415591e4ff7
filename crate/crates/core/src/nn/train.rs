use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{loss_mse, FusionNetwork, NetworkShape};
use super::optim::{AdamConfig, OptimizerState};
use super::NnError;
use crate::data::{Window, WindowedDataset};
use crate::linalg::Matrix;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NnError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Initializes a network from `config.seed` and trains it. Returns the
/// network and the mean training loss of every epoch.
pub fn train(
    shape: &NetworkShape,
    dataset: &WindowedDataset,
    config: &TrainConfig,
) -> Result<(FusionNetwork, Vec<f64>), NnError> {
    let mut net = FusionNetwork::init(shape, config.seed)?;
    let history = train_network(&mut net, dataset, config)?;
    Ok((net, history))
}

/// Mini-batch Adam on the mean squared error. Batches are reshuffled every
/// epoch from a stream seeded by `config.seed`. Per-sample gradients may be
/// computed in parallel but are summed in batch order, so results do not
/// depend on thread count.
pub fn train_network(
    net: &mut FusionNetwork,
    dataset: &WindowedDataset,
    config: &TrainConfig,
) -> Result<Vec<f64>, NnError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    net.check()?;
    let mut opt = OptimizerState::new(net, AdamConfig::with_learning_rate(config.learning_rate));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let model = &*net;
            let per_sample = parallel::map_slice(batch, |&i| sample_gradient(model, &dataset.windows[i]));
            let mut total = net.zeros_like();
            for result in per_sample {
                let (loss, grads) = result?;
                epoch_loss += loss;
                total.add_scaled(&grads, 1.0);
            }
            let scale = 1.0 / batch.len() as f64;
            let mut mean = net.zeros_like();
            mean.add_scaled(&total, scale);
            opt.step(net, &mean)?;
        }
        let epoch_loss = epoch_loss / dataset.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(NnError::NonFiniteLoss { epoch: epoch + 1 });
        }
        history.push(epoch_loss);
    }
    Ok(history)
}

fn sample_gradient(net: &FusionNetwork, w: &Window) -> Result<(f64, FusionNetwork), NnError> {
    let (pred, cache) = net.forward(&w.input)?;
    let grads = net.backward(&w.input, w.target, &cache)?;
    Ok((loss_mse(pred, w.target), grads))
}

/// One prediction per window, in order.
pub fn predict_series(net: &FusionNetwork, windows: &[Matrix]) -> Result<Vec<f64>, NnError> {
    parallel::map_slice(windows, |w| net.predict(w)).into_iter().collect()
}

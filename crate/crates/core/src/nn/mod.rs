//! Hybrid Conv1D + LSTM forecaster with hand-written backpropagation.
//!
//! Both branches read the same `L × F` window. The conv branch is a valid
//! (unpadded) cross-correlation followed by temporal mean pooling; the LSTM
//! branch runs from a zero state and exposes its last hidden vector. A linear
//! head combines the two:
//!
//! ```text
//! y = w_cnn · mean_t(conv(x))_t + w_lstm · h_L + b
//! ```

mod conv;
mod lstm;
mod network;
mod optim;
mod train;

pub use conv::{conv1d_forward, temporal_pool, ConvCache, ConvParams};
pub use lstm::{lstm_forward, lstm_step, Gate, LstmCache, LstmParams, LstmState, StepCache};
pub use network::{
    fusion_forward, loss_mse, loss_mse_grad, FusionNetwork, FusionParams, ForwardCache, Gradients,
    NetworkShape,
};
pub use optim::{AdamConfig, OptimizerState};
pub use train::{predict_series, train, train_network, TrainConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, got {found}")]
    Shape {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("window of {rows} rows is shorter than the kernel width {kernel}")]
    WindowTooShort { rows: usize, kernel: usize },
    #[error("nothing to pool: empty feature sequence")]
    EmptySequence,
    #[error("cache does not belong to this forward pass")]
    StaleCache,
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn shape_err(context: &'static str, expected: impl ToString, found: impl ToString) -> NnError {
    NnError::Shape {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

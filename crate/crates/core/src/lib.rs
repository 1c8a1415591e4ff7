//! Stock price forecasting from candlestick data fused with a daily tweet
//! sentiment index.
//!
//! The pipeline has three stages:
//!
//! 1. [`text`] turns tweets into TF-IDF vectors.
//! 2. [`forest`] classifies each vector as positive or negative with a
//!    bagged CART ensemble and sums the scores per day into a sentiment index.
//! 3. [`nn`] predicts the next close from a window of
//!    `(open, high, low, close, sentiment)` rows with a Conv1D branch and an
//!    LSTM branch joined by a linear head.
//!
//! [`data`] handles ingestion, alignment, scaling and windowing; [`metrics`]
//! provides the regression and classification scores; [`pipeline`] wires it
//! all together behind the commands exposed by the CLI.
//!
//! With the default `parallel` feature, tree growing, per-sample gradients and
//! seed sweeps run on rayon. Results are identical with the feature disabled.

pub mod data;
pub mod forest;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod parallel;
pub mod pipeline;
pub mod text;

pub use data::{AlignedSeries, Candle, Scaler, Sentiment, TweetRecord, WindowedDataset};
pub use forest::{ForestParams, RandomForest};
pub use metrics::{ConfusionMatrix, RegressionReport};
pub use nn::{FusionNetwork, NetworkShape, TrainConfig};
pub use text::TfIdfModel;

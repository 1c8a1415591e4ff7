//! End-to-end orchestration behind the CLI: configuration, model bundles,
//! synthetic data and the train / score / evaluate / compare commands.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod synth;

pub use bundle::{ModelBundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use commands::{
    compare, compare_sweep, evaluate, load_daily_index, prepare, score_tweets_daily, train_forecaster,
    train_sentiment, write_daily_index, write_predictions, ComparisonReport, DailyIndex, EvalSplit, Evaluation,
    ForecastRun, MetricRow, PredictionRow, Prepared, SentimentRun, Variant, VariantResult,
};
pub use config::{PipelineConfig, SentimentConfig, TrainingConfig};
pub use synth::{generate_synthetic, SynthSpec, SyntheticData};

use thiserror::Error;

use crate::data::DataError;
use crate::forest::ForestError;
use crate::metrics::MetricsError;
use crate::nn::NnError;
use crate::text::TextError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("model bundle: {0}")]
    Bundle(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// `1` for rejected input or configuration, `2` for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io(_) | PipelineError::Csv(_) => 2,
            PipelineError::Nn(NnError::NonFiniteLoss { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

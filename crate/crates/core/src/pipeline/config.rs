use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::data::NonTradingDays;
use crate::forest::{Criterion, ForestParams};
use crate::nn::{NetworkShape, TrainConfig};
use crate::text::{DEFAULT_MAX_TERMS, DEFAULT_MIN_DF};

/// Vectorizer caps and forest hyperparameters. The forest seed comes from
/// [`PipelineConfig::seed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SentimentConfig {
    pub min_df: usize,
    pub max_terms: usize,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: Option<usize>,
    pub criterion: Criterion,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        let f = ForestParams::default();
        Self {
            min_df: DEFAULT_MIN_DF,
            max_terms: DEFAULT_MAX_TERMS,
            n_trees: f.n_trees,
            max_depth: f.max_depth,
            min_samples_leaf: f.min_samples_leaf,
            features_per_split: f.features_per_split,
            criterion: f.criterion,
        }
    }
}

impl SentimentConfig {
    pub fn forest_params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features_per_split,
            criterion: self.criterion,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub candles: Option<PathBuf>,
    pub tweets: Option<PathBuf>,
    pub sentiment: SentimentConfig,
    pub network: NetworkShape,
    pub horizon: usize,
    pub training: TrainingConfig,
    pub train_fraction: f64,
    pub non_trading_days: NonTradingDays,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            candles: None,
            tweets: None,
            sentiment: SentimentConfig::default(),
            network: NetworkShape::default(),
            horizon: 1,
            training: TrainingConfig::default(),
            train_fraction: 0.8,
            non_trading_days: NonTradingDays::Drop,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if self.horizon == 0 {
            return bad("horizon must be ≥ 1".into());
        }
        if self.sentiment.min_df == 0 || self.sentiment.max_terms == 0 {
            return bad("min_df and max_terms must be ≥ 1".into());
        }
        self.sentiment
            .forest_params(self.seed)
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.network
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.train_config()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn forest_params(&self) -> ForestParams {
        self.sentiment.forest_params(self.seed)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            learning_rate: self.training.learning_rate,
            batch_size: self.training.batch_size,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_uses_defaults() {
        let c = PipelineConfig::from_json(r#"{"seed": 4, "network": {"hidden": 8, "filters": 4, "half_width": 1, "window": 6}}"#)
            .unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.network.hidden, 8);
        assert_eq!(c.train_fraction, 0.8);
        assert_eq!(c.sentiment.n_trees, 100);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            PipelineConfig::from_json(r#"{"sed": 4}"#),
            Err(PipelineError::Config(_))
        ));
        assert!(PipelineConfig::from_json(r#"{"training": {"epoch": 3}}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_json(r#"{"train_fraction": 1.0}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"sentiment": {"n_trees": 0}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"network": {"hidden": 4, "filters": 2, "half_width": 3, "window": 5}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"training": {"batch_size": 0}}"#).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let c = PipelineConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(PipelineConfig::from_json(&s).unwrap(), c);
    }
}

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bundle::ModelBundle;
use super::config::PipelineConfig;
use super::synth::{generate_synthetic, SynthSpec};
use super::{PipelineError, Result};
use crate::data::{
    align_daily_with, make_windows_targeting, split_point, AlignedSeries, Candle, Scaler, ScaledSeries,
    Sentiment, TweetRecord, WindowedDataset,
};
use crate::forest::{daily_sentiment_index, score_tweets, RandomForest};
use crate::linalg::Matrix;
use crate::metrics::{
    classification_report, confusion, regression_report, ClassificationReport, ConfusionMatrix,
    RegressionReport,
};
use crate::nn::{predict_series, train, FusionNetwork};
use crate::parallel;
use crate::text::{tokenize, TfIdfModel};

/// Fraction of each class kept for training by [`train_sentiment`].
pub const SENTIMENT_TRAIN_FRACTION: f64 = 0.8;
pub const MIN_SENTIMENT_SAMPLES: usize = 10;

/// Summed sentiment score per calendar day.
pub type DailyIndex = BTreeMap<NaiveDate, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithNlp,
    WithoutNlp,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::WithNlp => "with_nlp",
            Variant::WithoutNlp => "without_nlp",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with_nlp" | "with-nlp" => Ok(Variant::WithNlp),
            "without_nlp" | "without-nlp" => Ok(Variant::WithoutNlp),
            other => Err(PipelineError::Input(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentRun {
    pub vectorizer: TfIdfModel,
    pub forest: RandomForest,
    pub train_size: usize,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SentimentSummary {
    pub train_size: usize,
    pub holdout_size: usize,
    pub vocabulary: usize,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
}

impl SentimentRun {
    pub fn summary(&self) -> SentimentSummary {
        SentimentSummary {
            train_size: self.train_size,
            holdout_size: self.confusion.total(),
            vocabulary: self.vectorizer.dimension(),
            confusion: self.confusion,
            report: self.report,
        }
    }
}

/// Fits the vectorizer and forest on a stratified 80/20 split of the
/// labeled tweets and scores the held-out part.
pub fn train_sentiment(config: &PipelineConfig, tweets: &[TweetRecord]) -> Result<SentimentRun> {
    let labeled: Vec<(&TweetRecord, Sentiment)> =
        tweets.iter().filter_map(|t| t.label.map(|l| (t, l))).collect();
    if labeled.len() < MIN_SENTIMENT_SAMPLES {
        return Err(PipelineError::Input(format!(
            "need at least {MIN_SENTIMENT_SAMPLES} labeled tweets, got {}",
            labeled.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut train_idx = Vec::new();
    let mut holdout_idx = Vec::new();
    for class in [Sentiment::Positive, Sentiment::Negative] {
        let mut members: Vec<usize> = (0..labeled.len()).filter(|&i| labeled[i].1 == class).collect();
        if members.is_empty() {
            return Err(PipelineError::Input("labeled tweets contain a single class".into()));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let keep = ((n as f64 * SENTIMENT_TRAIN_FRACTION).ceil() as usize).clamp(1, n.saturating_sub(1).max(1));
        train_idx.extend_from_slice(&members[..keep]);
        holdout_idx.extend_from_slice(&members[keep..]);
    }
    train_idx.sort_unstable();
    holdout_idx.sort_unstable();

    let docs: Vec<Vec<String>> = train_idx.iter().map(|&i| tokenize(&labeled[i].0.text)).collect();
    let (vectorizer, x) = TfIdfModel::fit_transform(&docs, config.sentiment.min_df, config.sentiment.max_terms)?;
    let y: Vec<Sentiment> = train_idx.iter().map(|&i| labeled[i].1).collect();
    let forest = RandomForest::fit(&x, &y, &config.forest_params())?;

    let (pred, truth): (Vec<Sentiment>, Vec<Sentiment>) = if holdout_idx.is_empty() {
        (vec![], vec![])
    } else {
        let holdout: Vec<TweetRecord> = holdout_idx.iter().map(|&i| labeled[i].0.clone()).collect();
        let scored = score_tweets(&forest, &vectorizer, &holdout)?;
        (
            scored.into_iter().map(|(_, s)| s).collect(),
            holdout_idx.iter().map(|&i| labeled[i].1).collect(),
        )
    };
    let confusion = confusion(&pred, &truth)?;
    let report = classification_report(&confusion)?;
    Ok(SentimentRun {
        vectorizer,
        forest,
        train_size: train_idx.len(),
        confusion,
        report,
    })
}

/// Scores every tweet and sums per day.
pub fn score_tweets_daily(bundle: &ModelBundle, tweets: &[TweetRecord]) -> Result<DailyIndex> {
    let (vectorizer, forest) = bundle.sentiment_model()?;
    let scored = score_tweets(forest, vectorizer, tweets)?;
    Ok(daily_sentiment_index(&scored))
}

pub fn write_daily_index<W: Write>(sink: W, index: &DailyIndex) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "index"])?;
    for (d, v) in index {
        w.write_record([d.format("%Y-%m-%d").to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_daily_index<R: Read>(source: R) -> Result<DailyIndex> {
    let mut r = csv::Reader::from_reader(source);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header != ["date", "index"] {
        return Err(PipelineError::Input(format!(
            "daily index header must be date,index, got {}",
            header.join(",")
        )));
    }
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |m: String| PipelineError::Input(format!("daily index line {line}: {m}"));
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d").map_err(|e| bad(e.to_string()))?;
        let value: i64 = rec[1].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        if out.insert(date, value).is_some() {
            return Err(bad(format!("duplicate date {date}")));
        }
    }
    Ok(out)
}

/// Aligned, split, scaled and windowed data for one variant.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub series: AlignedSeries,
    /// Index of the first test row.
    pub cut: usize,
    pub scaler: Scaler,
    pub scaled: ScaledSeries,
    /// Windows whose target row is a training row.
    pub train: WindowedDataset,
    /// Windows whose target row is a test row; inputs may reach back into
    /// the training rows but never past the window's own last day.
    pub test: WindowedDataset,
}

pub fn prepare(
    config: &PipelineConfig,
    candles: &[Candle],
    daily_index: &DailyIndex,
    variant: Variant,
) -> Result<Prepared> {
    config.validate()?;
    let aligned = align_daily_with(candles, daily_index, config.non_trading_days);
    let series = match variant {
        Variant::WithNlp => aligned,
        Variant::WithoutNlp => aligned.without_sentiment(),
    };
    let (train_rows, _) = crate::data::chronological_split(&series, config.train_fraction)?;
    let cut = train_rows.len();
    let scaler = Scaler::fit(&train_rows)?;
    let scaled = scaler.apply(&series);
    let l = config.network.window;
    let h = config.horizon;
    let train = make_windows_targeting(&scaled, l, h, 0..cut)?;
    let test = make_windows_targeting(&scaled, l, h, cut..scaled.len())?;
    if train.is_empty() {
        return Err(PipelineError::Input(format!(
            "training part ({cut} rows) too short for window {l} + horizon {h}"
        )));
    }
    Ok(Prepared {
        series,
        cut,
        scaler,
        scaled,
        train,
        test,
    })
}

#[derive(Debug, Clone)]
pub struct ForecastRun {
    pub bundle: ModelBundle,
    pub history: Vec<f64>,
    pub prepared: Prepared,
}

/// Trains the forecaster on the training windows of `variant`.
pub fn train_forecaster(
    config: &PipelineConfig,
    candles: &[Candle],
    daily_index: &DailyIndex,
    variant: Variant,
) -> Result<ForecastRun> {
    let prepared = prepare(config, candles, daily_index, variant)?;
    let (network, history) = train(&config.network, &prepared.train, &config.train_config())?;
    let mut bundle = ModelBundle::new(config.clone());
    bundle.variant = Some(variant);
    bundle.scaler = Some(prepared.scaler.clone());
    bundle.network = Some(network);
    Ok(ForecastRun {
        bundle,
        history,
        prepared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalSplit {
    Train,
    #[default]
    Test,
    All,
}

impl std::str::FromStr for EvalSplit {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(EvalSplit::Train),
            "test" => Ok(EvalSplit::Test),
            "all" => Ok(EvalSplit::All),
            other => Err(PipelineError::Input(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rows: Vec<PredictionRow>,
    pub report: RegressionReport,
}

fn predict_rows(
    net: &FusionNetwork,
    scaler: &Scaler,
    series: &AlignedSeries,
    windows: &WindowedDataset,
) -> Result<Vec<PredictionRow>> {
    let inputs: Vec<Matrix> = windows.windows.iter().map(|w| w.input.clone()).collect();
    let preds = predict_series(net, &inputs)?;
    Ok(windows
        .windows
        .iter()
        .zip(preds)
        .map(|(w, p)| {
            let row = &series.rows[w.start + windows.window_length + windows.horizon - 1];
            debug_assert_eq!(row.date, w.target_date);
            PredictionRow {
                date: w.target_date,
                actual: row.close,
                predicted: scaler.invert_close(p),
            }
        })
        .collect())
}

/// Predictions in price space for the chosen split of `candles`. The bundle's
/// scaler is reused; the split point comes from the bundle's config.
pub fn predict(
    bundle: &ModelBundle,
    candles: &[Candle],
    daily_index: &DailyIndex,
    split: EvalSplit,
) -> Result<Vec<PredictionRow>> {
    let (scaler, net) = bundle.forecaster()?;
    let cfg = &bundle.config;
    let variant = bundle.variant.unwrap_or(Variant::WithNlp);
    if net.window != cfg.network.window {
        return Err(PipelineError::Bundle("network window disagrees with config".into()));
    }
    let aligned = align_daily_with(candles, daily_index, cfg.non_trading_days);
    let series = match variant {
        Variant::WithNlp => aligned,
        Variant::WithoutNlp => aligned.without_sentiment(),
    };
    let cut = split_point(series.len(), cfg.train_fraction);
    let range = match split {
        EvalSplit::Train => 0..cut,
        EvalSplit::Test => cut..series.len(),
        EvalSplit::All => 0..series.len(),
    };
    let scaled = scaler.apply(&series);
    let windows = make_windows_targeting(&scaled, net.window, cfg.horizon, range)?;
    if windows.is_empty() {
        return Err(PipelineError::Input("no windows to evaluate in the chosen split".into()));
    }
    predict_rows(net, scaler, &series, &windows)
}

pub fn evaluate(
    bundle: &ModelBundle,
    candles: &[Candle],
    daily_index: &DailyIndex,
    split: EvalSplit,
) -> Result<Evaluation> {
    let rows = predict(bundle, candles, daily_index, split)?;
    let report = report_for(&rows)?;
    Ok(Evaluation { rows, report })
}

pub fn report_for(rows: &[PredictionRow]) -> Result<RegressionReport> {
    let pred: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let actual: Vec<f64> = rows.iter().map(|r| r.actual).collect();
    Ok(regression_report(&pred, &actual)?)
}

pub fn write_predictions<W: Write>(sink: W, rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "actual", "predicted"])?;
    for r in rows {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_predictions<R: Read>(source: R) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |m: String| PipelineError::Input(format!("predictions: {m}"));
        out.push(PredictionRow {
            date: NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| bad(e.to_string()))?,
            actual: rec[1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            predicted: rec[2].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
        });
    }
    Ok(out)
}

/// The four table metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRow {
    pub mse: f64,
    pub rmse: f64,
    pub r_squared: Option<f64>,
    pub msle: f64,
}

impl From<RegressionReport> for MetricRow {
    fn from(r: RegressionReport) -> Self {
        Self {
            mse: r.mse,
            rmse: r.rmse,
            r_squared: r.r_squared,
            msle: r.msle,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantResult {
    pub metrics: MetricRow,
    pub n: usize,
    pub final_train_loss: f64,
    pub predictions: Vec<PredictionRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub config: PipelineConfig,
    pub sentiment: SentimentSummary,
    pub test_dates: Vec<NaiveDate>,
    pub with_nlp: VariantResult,
    pub without_nlp: VariantResult,
}

impl ComparisonReport {
    pub fn with_nlp_wins(&self) -> bool {
        self.with_nlp.metrics.mse < self.without_nlp.metrics.mse
    }

    /// Plain-text side-by-side table.
    pub fn table(&self) -> String {
        let fmt_r2 = |r: Option<f64>| r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let mut s = format!("{:<12} {:>12} {:>10} {:>10} {:>10}\n", "", "MSE", "RMSE", "R-Square", "MSLE");
        for (name, v) in [("Without NLP", &self.without_nlp), ("With NLP", &self.with_nlp)] {
            s.push_str(&format!(
                "{:<12} {:>12.4} {:>10.4} {:>10} {:>10.6}\n",
                name,
                v.metrics.mse,
                v.metrics.rmse,
                fmt_r2(v.metrics.r_squared),
                v.metrics.msle
            ));
        }
        s
    }
}

fn run_variant(
    config: &PipelineConfig,
    candles: &[Candle],
    index: &DailyIndex,
    variant: Variant,
) -> Result<(VariantResult, Vec<NaiveDate>)> {
    let run = train_forecaster(config, candles, index, variant)?;
    let (scaler, net) = run.bundle.forecaster()?;
    let rows = predict_rows(net, scaler, &run.prepared.series, &run.prepared.test)?;
    let report = report_for(&rows)?;
    let dates = rows.iter().map(|r| r.date).collect();
    Ok((
        VariantResult {
            metrics: report.into(),
            n: report.n,
            final_train_loss: run.history.last().copied().unwrap_or(f64::NAN),
            predictions: rows,
        },
        dates,
    ))
}

/// Full ablation: one sentiment model shared by both variants, identical
/// split and seed; the variants differ only in the sentiment column.
pub fn compare(config: &PipelineConfig, candles: &[Candle], tweets: &[TweetRecord]) -> Result<ComparisonReport> {
    config.validate()?;
    let sentiment = train_sentiment(config, tweets)?;
    let scored = score_tweets(&sentiment.forest, &sentiment.vectorizer, tweets)?;
    let index = daily_sentiment_index(&scored);

    let variants = [Variant::WithNlp, Variant::WithoutNlp];
    let mut results = parallel::map_slice(&variants, |&v| run_variant(config, candles, &index, v))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (without, without_dates) = results.pop().unwrap();
    let (with, with_dates) = results.pop().unwrap();
    if with_dates != without_dates {
        return Err(PipelineError::Input("variants were evaluated on different test dates".into()));
    }
    Ok(ComparisonReport {
        seed: config.seed,
        config: config.clone(),
        sentiment: sentiment.summary(),
        test_dates: with_dates,
        with_nlp: with,
        without_nlp: without,
    })
}

/// Runs [`compare`] on freshly generated synthetic data for each seed, in
/// parallel. The seed drives both the generator and the pipeline.
pub fn compare_sweep(config: &PipelineConfig, spec: &SynthSpec, seeds: &[u64]) -> Result<Vec<ComparisonReport>> {
    parallel::map_slice(seeds, |&seed| {
        let data = generate_synthetic(&SynthSpec { seed, ..*spec })?;
        let cfg = PipelineConfig {
            seed,
            ..config.clone()
        };
        compare(&cfg, &data.candles, &data.tweets)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_variant_and_split_names() {
        assert_eq!("with_nlp".parse::<Variant>().unwrap(), Variant::WithNlp);
        assert_eq!("without-nlp".parse::<Variant>().unwrap(), Variant::WithoutNlp);
        assert!("both".parse::<Variant>().is_err());
        assert_eq!("all".parse::<EvalSplit>().unwrap(), EvalSplit::All);
        assert!("holdout".parse::<EvalSplit>().is_err());
        assert_eq!(serde_json::to_string(&Variant::WithoutNlp).unwrap(), "\"without_nlp\"");
    }

    #[test]
    fn stratified_split_keeps_both_classes_in_holdout() {
        let date = NaiveDate::from_ymd_opt(2020, 3, 2).unwrap();
        let tweets: Vec<TweetRecord> = (0..12)
            .map(|i| TweetRecord {
                date,
                text: if i < 9 { format!("gain up record {i}") } else { format!("loss down weak {i}") },
                label: Some(if i < 9 { Sentiment::Positive } else { Sentiment::Negative }),
            })
            .collect();
        let mut cfg = PipelineConfig::default();
        cfg.sentiment.min_df = 1;
        cfg.sentiment.n_trees = 5;
        let run = train_sentiment(&cfg, &tweets).unwrap();
        // ceil(0.8·9) = 8 and ceil(0.8·3) = 3 capped at 2.
        assert_eq!(run.train_size, 10);
        assert_eq!(run.confusion.total(), 2);
        assert_eq!(run.confusion.tp + run.confusion.fn_, 1);
    }

    #[test]
    fn metric_row_drops_count() {
        let r = regression_report(&[1.0, 2.0], &[1.0, 3.0]).unwrap();
        let row = MetricRow::from(r);
        assert_eq!(row.mse, 0.5);
        assert_eq!(row.rmse, r.rmse);
    }
}

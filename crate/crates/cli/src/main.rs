use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sentforecast::data::{load_candles, load_tweets, write_candles, write_tweets, Candle, TweetRecord};
use sentforecast::pipeline::commands::{self, EvalSplit, Variant};
use sentforecast::pipeline::{
    generate_synthetic, load_daily_index, DailyIndex, ModelBundle, PipelineConfig, PipelineError, Result, SynthSpec,
};

#[derive(Parser)]
#[command(name = "sentforecast", version, about = "Sentiment-aware stock close forecasting")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the TF-IDF vectorizer and forest on labeled tweets.
    TrainSentiment {
        #[arg(long)]
        tweets: Option<PathBuf>,
    },
    /// Score tweets with a sentiment bundle and write daily_index.csv.
    ScoreTweets {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        tweets: Option<PathBuf>,
    },
    /// Train the forecaster for one variant.
    TrainForecaster {
        #[arg(long)]
        candles: Option<PathBuf>,
        /// daily_index.csv; required for with_nlp.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, default_value = "with_nlp")]
        variant: Variant,
        /// Bundle whose sentiment model is copied into the output.
        #[arg(long)]
        sentiment_bundle: Option<PathBuf>,
    },
    /// Write predictions.csv for a split.
    Predict(EvalArgs),
    /// Write predictions.csv and metrics.json for a split.
    Evaluate(EvalArgs),
    /// Run both variants with a shared sentiment model and write comparison.json.
    Compare {
        #[arg(long)]
        candles: Option<PathBuf>,
        #[arg(long)]
        tweets: Option<PathBuf>,
    },
    /// Generate synthetic candles.csv and tweets.csv.
    GenSynth {
        #[arg(long, default_value_t = 400)]
        days: usize,
        #[arg(long, default_value_t = 0.2)]
        shock_probability: f64,
        #[arg(long, default_value_t = 0.02)]
        shock_magnitude: f64,
        #[arg(long, default_value_t = 0.005)]
        noise: f64,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    candles: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: EvalSplit,
}

fn config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn pick<'a>(flag: &'a Option<PathBuf>, configured: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    flag.as_deref()
        .or(configured.as_deref())
        .ok_or_else(|| PipelineError::Input(format!("no {what} path given on the command line or in the config")))
}

fn read_candles(path: &Path) -> Result<Vec<Candle>> {
    Ok(load_candles(File::open(path)?)?)
}

fn read_tweets(path: &Path) -> Result<Vec<TweetRecord>> {
    Ok(load_tweets(File::open(path)?)?)
}

fn read_index(path: Option<&Path>) -> Result<DailyIndex> {
    match path {
        Some(p) => load_daily_index(File::open(p)?),
        None => Ok(DailyIndex::new()),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json<T: serde::Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(create(out, name)?, value)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli.common)?;
    let out = cli.common.out.as_path();
    std::fs::create_dir_all(out)?;

    match cli.command {
        Command::TrainSentiment { tweets } => {
            let tweets = read_tweets(pick(&tweets, &cfg.tweets, "tweets")?)?;
            let run = commands::train_sentiment(&cfg, &tweets)?;
            let summary = run.summary();
            let mut bundle = ModelBundle::new(cfg);
            bundle.vectorizer = Some(run.vectorizer);
            bundle.forest = Some(run.forest);
            let checksum = bundle.save(&out.join("model.bundle"))?;
            write_json(out, "metrics.json", &summary)?;
            println!(
                "holdout accuracy {:.4} on {} tweets; bundle sha256 {checksum}",
                summary.report.accuracy, summary.holdout_size
            );
        }
        Command::ScoreTweets { bundle, tweets } => {
            let bundle = ModelBundle::load(&bundle)?;
            let tweets = read_tweets(pick(&tweets, &cfg.tweets, "tweets")?)?;
            let index = commands::score_tweets_daily(&bundle, &tweets)?;
            commands::write_daily_index(create(out, "daily_index.csv")?, &index)?;
            println!("scored {} tweets over {} days", tweets.len(), index.len());
        }
        Command::TrainForecaster {
            candles,
            index,
            variant,
            sentiment_bundle,
        } => {
            if variant == Variant::WithNlp && index.is_none() {
                return Err(PipelineError::Input("with_nlp needs --index".into()));
            }
            let candles = read_candles(pick(&candles, &cfg.candles, "candles")?)?;
            let index = read_index(index.as_deref())?;
            let run = commands::train_forecaster(&cfg, &candles, &index, variant)?;
            let mut bundle = run.bundle;
            if let Some(p) = sentiment_bundle {
                let s = ModelBundle::load(&p)?;
                bundle.vectorizer = s.vectorizer;
                bundle.forest = s.forest;
            }
            let checksum = bundle.save(&out.join("model.bundle"))?;
            write_json(out, "metrics.json", &serde_json::json!({ "history": run.history }))?;
            println!(
                "trained {} for {} epochs, final loss {:.6e}; bundle sha256 {checksum}",
                variant.name(),
                run.history.len(),
                run.history.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Predict(args) => {
            let (bundle, candles, index) = eval_inputs(&cfg, &args)?;
            let rows = commands::predict(&bundle, &candles, &index, args.split)?;
            commands::write_predictions(create(out, "predictions.csv")?, &rows)?;
            println!("wrote {} predictions", rows.len());
        }
        Command::Evaluate(args) => {
            let (bundle, candles, index) = eval_inputs(&cfg, &args)?;
            let eval = commands::evaluate(&bundle, &candles, &index, args.split)?;
            commands::write_predictions(create(out, "predictions.csv")?, &eval.rows)?;
            write_json(out, "metrics.json", &eval.report)?;
            println!(
                "n={} mse={:.6} rmse={:.6} msle={:.6e}",
                eval.report.n, eval.report.mse, eval.report.rmse, eval.report.msle
            );
        }
        Command::Compare { candles, tweets } => {
            let candles = read_candles(pick(&candles, &cfg.candles, "candles")?)?;
            let tweets = read_tweets(pick(&tweets, &cfg.tweets, "tweets")?)?;
            let report = commands::compare(&cfg, &candles, &tweets)?;
            write_json(out, "comparison.json", &report)?;
            commands::write_predictions(create(out, "predictions_with_nlp.csv")?, &report.with_nlp.predictions)?;
            commands::write_predictions(
                create(out, "predictions_without_nlp.csv")?,
                &report.without_nlp.predictions,
            )?;
            print!("{}", report.table());
        }
        Command::GenSynth {
            days,
            shock_probability,
            shock_magnitude,
            noise,
        } => {
            let spec = SynthSpec {
                days,
                shock_probability,
                shock_magnitude,
                noise,
                seed: cfg.seed,
                ..Default::default()
            };
            let data = generate_synthetic(&spec)?;
            write_candles(create(out, "candles.csv")?, &data.candles)?;
            write_tweets(create(out, "tweets.csv")?, &data.tweets)?;
            println!("{} candles, {} tweets", data.candles.len(), data.tweets.len());
        }
    }
    Ok(())
}

fn eval_inputs(
    cfg: &PipelineConfig,
    args: &EvalArgs,
) -> Result<(ModelBundle, Vec<Candle>, DailyIndex)> {
    let bundle = ModelBundle::load(&args.bundle)?;
    let candles = read_candles(pick(&args.candles, &cfg.candles, "candles")?)?;
    if bundle.variant == Some(Variant::WithNlp) && args.index.is_none() {
        return Err(PipelineError::Input("with_nlp bundle needs --index".into()));
    }
    let index = read_index(args.index.as_deref())?;
    Ok((bundle, candles, index))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Seeded synthetic market with planted sentiment shocks.
//!
//! Closes follow a geometric random walk with Gaussian log-returns of scale
//! `noise`. On an event day a burst of tweets with a common polarity is
//! emitted and the *next* day's log-return is shifted by
//! `polarity × shock_magnitude`. Every day also carries a balanced pair of
//! background tweets, so the daily index is near zero outside events.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::data::{Candle, Sentiment, TweetRecord};

const POSITIVE_WORDS: &[&str] = &["surge", "beat", "rally", "bullish", "upgrade", "record", "strong", "soar"];
const NEGATIVE_WORDS: &[&str] = &["drop", "miss", "selloff", "bearish", "downgrade", "weak", "plunge", "slump"];
const FILLER_WORDS: &[&str] = &[
    "stock", "shares", "today", "market", "company", "earnings", "traders", "price", "quarter", "news",
    "investors", "session", "analysts", "volume", "week",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub days: usize,
    pub shock_probability: f64,
    /// Log-return shift applied the day after an event.
    pub shock_magnitude: f64,
    /// Standard deviation of the daily log-return.
    pub noise: f64,
    pub tweets_per_event: usize,
    /// Background tweets per day, alternating polarity.
    pub background_tweets: usize,
    pub start_price: f64,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            days: 400,
            shock_probability: 0.2,
            shock_magnitude: 0.02,
            noise: 0.005,
            tweets_per_event: 5,
            background_tweets: 2,
            start_price: 100.0,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PipelineError::Input(format!("synthetic spec: {m}")));
        if self.days < 50 {
            return bad("days must be ≥ 50");
        }
        if !(0.0..=1.0).contains(&self.shock_probability) {
            return bad("shock_probability must be in [0, 1]");
        }
        if !(self.shock_magnitude.is_finite() && self.shock_magnitude >= 0.0) {
            return bad("shock_magnitude must be finite and ≥ 0");
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad("noise must be finite and ≥ 0");
        }
        if !(self.start_price.is_finite() && self.start_price > 0.0) {
            return bad("start_price must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub candles: Vec<Candle>,
    pub tweets: Vec<TweetRecord>,
    /// Polarity of the event on each day, if any.
    pub events: Vec<Option<Sentiment>>,
}

fn trading_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

/// A tweet containing the anchor word (`gain` / `loss`), one more polarity
/// word and some filler, in random order.
pub fn planted_tweet<R: Rng>(polarity: Sentiment, rng: &mut R) -> String {
    let (anchor, pool) = match polarity {
        Sentiment::Positive => ("gain", POSITIVE_WORDS),
        Sentiment::Negative => ("loss", NEGATIVE_WORDS),
    };
    let mut words = vec![anchor, pool.choose(rng).unwrap()];
    let fill = rng.random_range(3..=5);
    words.extend((0..fill).map(|_| *FILLER_WORDS.choose(rng).unwrap()));
    words.shuffle(rng);
    words.join(" ")
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dates = trading_days(spec.start_date, spec.days);
    let mut candles = Vec::with_capacity(spec.days);
    let mut tweets = Vec::new();
    let mut events = Vec::with_capacity(spec.days);

    let mut prev_close = spec.start_price;
    let mut pending_shift = 0.0;
    for (day, &date) in dates.iter().enumerate() {
        let z: f64 = rng.sample(StandardNormal);
        let gap: f64 = rng.sample(StandardNormal);
        let up: f64 = rng.sample(StandardNormal);
        let down: f64 = rng.sample(StandardNormal);

        let open = prev_close * (0.2 * spec.noise * gap).exp();
        let close = prev_close * (spec.noise * z + pending_shift).exp();
        let high = open.max(close) * (0.5 * spec.noise * up.abs()).exp();
        let low = open.min(close) * (-0.5 * spec.noise * down.abs()).exp();
        candles.push(Candle::new(date, open, high, low, close)?);
        prev_close = close;

        let event = (day + 1 < spec.days && rng.random_bool(spec.shock_probability)).then(|| {
            if rng.random_bool(0.5) {
                Sentiment::Positive
            } else {
                Sentiment::Negative
            }
        });
        pending_shift = event.map_or(0.0, |p| p.score() as f64 * spec.shock_magnitude);
        events.push(event);

        for k in 0..spec.background_tweets {
            let polarity = if k % 2 == 0 { Sentiment::Positive } else { Sentiment::Negative };
            tweets.push(TweetRecord {
                date,
                text: planted_tweet(polarity, &mut rng),
                label: Some(polarity),
            });
        }
        if let Some(p) = event {
            for _ in 0..spec.tweets_per_event {
                tweets.push(TweetRecord {
                    date,
                    text: planted_tweet(p, &mut rng),
                    label: Some(p),
                });
            }
        }
    }
    Ok(SyntheticData {
        candles,
        tweets,
        events,
    })
}

/// Labeled corpus of `per_class` positive and `per_class` negative tweets.
pub fn planted_corpus(per_class: usize, seed: u64) -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let date = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
    (0..2 * per_class)
        .map(|i| {
            let p = if i % 2 == 0 { Sentiment::Positive } else { Sentiment::Negative };
            TweetRecord {
                date,
                text: planted_tweet(p, &mut rng),
                label: Some(p),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candles_satisfy_ohlc_over_1000_days() {
        let data = generate_synthetic(&SynthSpec {
            days: 1000,
            shock_magnitude: 0.05,
            noise: 0.03,
            seed: 17,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(data.candles.len(), 1000);
        for c in &data.candles {
            c.validate().unwrap();
        }
        assert!(data.candles.windows(2).all(|w| w[0].date < w[1].date));
        assert!(data.candles.iter().all(|c| c.date.weekday().num_days_from_monday() < 5));
    }

    #[test]
    fn shocks_move_next_close() {
        let spec = SynthSpec {
            noise: 0.0,
            shock_probability: 0.3,
            seed: 5,
            ..Default::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        for t in 1..data.candles.len() {
            let r = (data.candles[t].close / data.candles[t - 1].close).ln();
            let expected = data.events[t - 1].map_or(0.0, |p| p.score() as f64 * 0.02);
            assert!((r - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_and_labeled() {
        let spec = SynthSpec::default();
        let a = generate_synthetic(&spec).unwrap();
        assert_eq!(a, generate_synthetic(&spec).unwrap());
        assert!(a.tweets.iter().all(|t| t.label.is_some()));
        let pos = a.tweets.iter().filter(|t| t.label == Some(Sentiment::Positive));
        assert!(pos.into_iter().all(|t| t.text.split(' ').any(|w| w == "gain")));
    }

    #[test]
    fn rejects_short_spec() {
        assert!(generate_synthetic(&SynthSpec {
            days: 49,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn planted_corpus_balanced() {
        let c = planted_corpus(200, 1);
        assert_eq!(c.len(), 400);
        assert_eq!(c.iter().filter(|t| t.label == Some(Sentiment::Positive)).count(), 200);
    }
}

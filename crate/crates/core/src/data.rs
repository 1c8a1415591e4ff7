//! Domain types and ingestion: candles, tweets, daily alignment, chronological
//! splitting, min-max scaling and sliding windows.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

/// Number of input features per row: open, high, low, close, sentiment.
pub const FEATURES: usize = 5;
/// Column of the close price inside a feature row.
pub const CLOSE: usize = 3;
/// Column of the sentiment index inside a feature row.
pub const SENTIMENT: usize = 4;
pub const FEATURE_NAMES: [&str; FEATURES] = ["open", "high", "low", "close", "sentiment"];

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("line {line}: malformed row: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: unexpected header {found:?}, expected {expected:?}")]
    Header {
        line: u64,
        found: String,
        expected: String,
    },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("{date}: OHLC invariant violated ({reason})")]
    OhlcInvariant { date: NaiveDate, reason: String },
    #[error("line {line}: empty text")]
    EmptyText { line: u64 },
    #[error("line {line}: label must be +1 or -1, got {value:?}")]
    BadLabel { line: u64, value: String },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("split of {rows} rows at fraction {fraction} leaves an empty side")]
    EmptySplit { rows: usize, fraction: f64 },
    #[error("cannot fit a scaler on an empty training set")]
    EmptyTrainingSet,
    #[error("series too short: {len} rows, need at least {needed} (window {window} + horizon {horizon})")]
    SeriesTooShort {
        len: usize,
        needed: usize,
        window: usize,
        horizon: usize,
    },
    #[error("window length and horizon must be positive")]
    ZeroWindow,
    #[error("scaler was fitted on {expected} features, got {found}")]
    ScalerShape { expected: usize, found: usize },
}

/// One daily OHLC bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Candle {
    pub fn new(
        date: NaiveDate,
        open: f64,
        high: f64,
        low: f64,
        close: f64,
    ) -> Result<Self, DataError> {
        let c = Self {
            date,
            open,
            high,
            low,
            close,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |reason: &str| {
            Err(DataError::OhlcInvariant {
                date: self.date,
                reason: reason.to_string(),
            })
        };
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return fail("prices must be finite and positive");
        }
        if self.low > self.high {
            return fail("low > high");
        }
        if self.open < self.low || self.open > self.high {
            return fail("open outside [low, high]");
        }
        if self.close < self.low || self.close > self.high {
            return fail("close outside [low, high]");
        }
        Ok(())
    }
}

/// Tweet polarity. Serialized as the integer score `+1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sentiment {
    Negative,
    Positive,
}

impl Sentiment {
    pub fn score(self) -> i64 {
        match self {
            Sentiment::Positive => 1,
            Sentiment::Negative => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sentiment::Positive => Sentiment::Negative,
            Sentiment::Negative => Sentiment::Positive,
        }
    }
}

impl TryFrom<i8> for Sentiment {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Sentiment::Positive),
            -1 => Ok(Sentiment::Negative),
            other => Err(format!("label must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sentiment> for i8 {
    fn from(s: Sentiment) -> i8 {
        s.score() as i8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub date: NaiveDate,
    pub text: String,
    pub label: Option<Sentiment>,
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate, DataError> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).map_err(|e| DataError::Malformed {
        line,
        reason: format!("bad date {s:?}: {e}"),
    })
}

fn parse_price(s: &str, field: &str, line: u64) -> Result<f64, DataError> {
    s.trim().parse::<f64>().map_err(|e| DataError::Malformed {
        line,
        reason: format!("bad {field} {s:?}: {e}"),
    })
}

fn check_header(
    reader: &mut csv::Reader<impl Read>,
    expected: &[&str],
) -> Result<(), DataError> {
    let header = reader.headers().map_err(|e| DataError::Malformed {
        line: 1,
        reason: e.to_string(),
    })?;
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(DataError::Header {
            line: 1,
            found: found.join(","),
            expected: expected.join(","),
        });
    }
    Ok(())
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn csv_error_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

/// Reads `date,open,high,low,close` rows and returns candles sorted by date.
pub fn load_candles<R: Read>(source: R) -> Result<Vec<Candle>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    check_header(&mut reader, &["date", "open", "high", "low", "close"])?;

    let mut candles = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| DataError::Malformed {
            line: csv_error_line(&e),
            reason: e.to_string(),
        })?;
        let line = record_line(&rec);
        let date = parse_date(&rec[0], line)?;
        let open = parse_price(&rec[1], "open", line)?;
        let high = parse_price(&rec[2], "high", line)?;
        let low = parse_price(&rec[3], "low", line)?;
        let close = parse_price(&rec[4], "close", line)?;
        candles.push(Candle::new(date, open, high, low, close)?);
    }
    candles.sort_by_key(|c| c.date);
    if let Some(w) = candles.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(DataError::DuplicateDate(w[0].date));
    }
    Ok(candles)
}

/// Reads `date,text,label` rows; the label column may be empty.
pub fn load_tweets<R: Read>(source: R) -> Result<Vec<TweetRecord>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    check_header(&mut reader, &["date", "text", "label"])?;

    let mut tweets = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| DataError::Malformed {
            line: csv_error_line(&e),
            reason: e.to_string(),
        })?;
        let line = record_line(&rec);
        let date = parse_date(&rec[0], line)?;
        let text = &rec[1];
        if text.trim().is_empty() {
            return Err(DataError::EmptyText { line });
        }
        let label = match rec[2].trim() {
            "" => None,
            "1" | "+1" => Some(Sentiment::Positive),
            "-1" => Some(Sentiment::Negative),
            other => {
                return Err(DataError::BadLabel {
                    line,
                    value: other.to_string(),
                })
            }
        };
        tweets.push(TweetRecord {
            date,
            text: text.to_string(),
            label,
        });
    }
    Ok(tweets)
}

/// Writes candles in the same CSV layout [`load_candles`] reads.
pub fn write_candles<W: std::io::Write>(sink: W, candles: &[Candle]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "open", "high", "low", "close"])?;
    for c in candles {
        w.write_record([
            c.date.format(DATE_FORMAT).to_string(),
            c.open.to_string(),
            c.high.to_string(),
            c.low.to_string(),
            c.close.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes tweets in the same CSV layout [`load_tweets`] reads.
pub fn write_tweets<W: std::io::Write>(sink: W, tweets: &[TweetRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "text", "label"])?;
    for t in tweets {
        let label = t.label.map(|l| l.score().to_string()).unwrap_or_default();
        w.write_record([t.date.format(DATE_FORMAT).to_string(), t.text.clone(), label])?;
    }
    w.flush()?;
    Ok(())
}

/// One trading day with its aggregated sentiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedRow {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub sentiment: i64,
}

impl AlignedRow {
    pub fn features(&self) -> [f64; FEATURES] {
        [
            self.open,
            self.high,
            self.low,
            self.close,
            self.sentiment as f64,
        ]
    }
}

/// Candles joined with the daily sentiment index, ordered by date.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlignedSeries {
    pub rows: Vec<AlignedRow>,
}

impl AlignedSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.rows.iter().map(|r| r.date)
    }

    /// Copy of the series with the sentiment column forced to zero.
    pub fn without_sentiment(&self) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| AlignedRow { sentiment: 0, ..*r })
                .collect(),
        }
    }
}

/// What to do with sentiment dated on a day that has no candle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonTradingDays {
    /// Ignore the entry.
    #[default]
    Drop,
    /// Add it to the next trading day (entries after the last candle are dropped).
    RollForward,
}

/// Joins candles with a daily sentiment index. Dates missing from the index
/// get sentiment 0; index dates without a candle are dropped.
pub fn align_daily(candles: &[Candle], daily_index: &BTreeMap<NaiveDate, i64>) -> AlignedSeries {
    align_daily_with(candles, daily_index, NonTradingDays::Drop)
}

pub fn align_daily_with(
    candles: &[Candle],
    daily_index: &BTreeMap<NaiveDate, i64>,
    policy: NonTradingDays,
) -> AlignedSeries {
    let mut rows: Vec<AlignedRow> = candles
        .iter()
        .map(|c| AlignedRow {
            date: c.date,
            open: c.open,
            high: c.high,
            low: c.low,
            close: c.close,
            sentiment: daily_index.get(&c.date).copied().unwrap_or(0),
        })
        .collect();

    if policy == NonTradingDays::RollForward {
        for (date, value) in daily_index {
            let idx = rows.partition_point(|r| r.date < *date);
            if let Some(row) = rows.get_mut(idx) {
                if row.date != *date {
                    row.sentiment += value;
                }
            }
        }
    }
    AlignedSeries { rows }
}

/// Splits off the first `⌊n·fraction⌋` rows as the training part.
pub fn chronological_split(
    series: &AlignedSeries,
    train_fraction: f64,
) -> Result<(AlignedSeries, AlignedSeries), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::BadFraction(train_fraction));
    }
    let n = series.len();
    let cut = split_point(n, train_fraction);
    if cut == 0 || cut == n {
        return Err(DataError::EmptySplit {
            rows: n,
            fraction: train_fraction,
        });
    }
    Ok((
        AlignedSeries {
            rows: series.rows[..cut].to_vec(),
        },
        AlignedSeries {
            rows: series.rows[cut..].to_vec(),
        },
    ))
}

/// Number of rows that go to the training part.
pub fn split_point(n: usize, train_fraction: f64) -> usize {
    (n as f64 * train_fraction).floor() as usize
}

/// Per-feature min-max scaler to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: [f64; FEATURES],
    pub max: [f64; FEATURES],
}

impl Scaler {
    pub fn fit(train: &AlignedSeries) -> Result<Self, DataError> {
        if train.is_empty() {
            return Err(DataError::EmptyTrainingSet);
        }
        let mut min = [f64::INFINITY; FEATURES];
        let mut max = [f64::NEG_INFINITY; FEATURES];
        for row in &train.rows {
            for (j, v) in row.features().into_iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn scale(&self, feature: usize, x: f64) -> f64 {
        let span = self.max[feature] - self.min[feature];
        if span > 0.0 {
            (x - self.min[feature]) / span
        } else {
            0.0
        }
    }

    #[inline]
    pub fn unscale(&self, feature: usize, y: f64) -> f64 {
        let span = self.max[feature] - self.min[feature];
        if span > 0.0 {
            y * span + self.min[feature]
        } else {
            self.min[feature]
        }
    }

    pub fn apply(&self, series: &AlignedSeries) -> ScaledSeries {
        ScaledSeries {
            dates: series.dates().collect(),
            rows: series
                .rows
                .iter()
                .map(|r| {
                    let mut f = r.features();
                    for (j, v) in f.iter_mut().enumerate() {
                        *v = self.scale(j, *v);
                    }
                    f
                })
                .collect(),
        }
    }

    /// Maps a scaled close back to price space.
    pub fn invert_close(&self, y: f64) -> f64 {
        self.unscale(CLOSE, y)
    }
}

/// Scaled feature rows, one per trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSeries {
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<[f64; FEATURES]>,
}

impl ScaledSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `L × 5` matrix of scaled features.
    pub input: Matrix,
    /// Scaled close at the target row.
    pub target: f64,
    /// Row index of the first input row.
    pub start: usize,
    pub target_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub windows: Vec<Window>,
    pub window_length: usize,
    pub horizon: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Sliding windows with stride 1 over the whole series.
pub fn make_windows(
    series: &ScaledSeries,
    window_length: usize,
    horizon: usize,
) -> Result<WindowedDataset, DataError> {
    make_windows_targeting(series, window_length, horizon, 0..series.len())
}

/// Sliding windows whose target row falls inside `targets`. Input rows may
/// precede `targets.start`; they never reach past the window's own last row.
pub fn make_windows_targeting(
    series: &ScaledSeries,
    window_length: usize,
    horizon: usize,
    targets: std::ops::Range<usize>,
) -> Result<WindowedDataset, DataError> {
    if window_length == 0 || horizon == 0 {
        return Err(DataError::ZeroWindow);
    }
    let n = series.len();
    let needed = window_length + horizon;
    if n < needed {
        return Err(DataError::SeriesTooShort {
            len: n,
            needed,
            window: window_length,
            horizon,
        });
    }
    let offset = window_length + horizon - 1;
    let windows = (0..=n - needed)
        .filter(|start| targets.contains(&(start + offset)))
        .map(|start| {
            let rows = &series.rows[start..start + window_length];
            Window {
                input: Matrix::from_rows(rows),
                target: series.rows[start + offset][CLOSE],
                start,
                target_date: series.dates[start + offset],
            }
        })
        .collect();
    Ok(WindowedDataset {
        windows,
        window_length,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn series(n: usize) -> AlignedSeries {
        let start = d("2020-01-01");
        AlignedSeries {
            rows: (0..n)
                .map(|i| AlignedRow {
                    date: start + chrono::Days::new(i as u64),
                    open: 10.0 + i as f64,
                    high: 12.0 + i as f64,
                    low: 9.0 + i as f64,
                    close: 11.0 + i as f64,
                    sentiment: i as i64 % 3 - 1,
                })
                .collect(),
        }
    }

    fn scaled(n: usize) -> ScaledSeries {
        let s = series(n);
        Scaler::fit(&s).unwrap().apply(&s)
    }

    #[test]
    fn parses_candle_row() {
        let csv = "date,open,high,low,close\n2020-01-02,100,110,95,105\n";
        let c = load_candles(csv.as_bytes()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].date, d("2020-01-02"));
        assert_eq!((c[0].open, c[0].high, c[0].low, c[0].close), (100.0, 110.0, 95.0, 105.0));
    }

    #[test]
    fn candles_sorted_ascending() {
        let csv = "date,open,high,low,close\n2020-01-03,1,2,1,2\n2020-01-02,1,2,1,2\n";
        let c = load_candles(csv.as_bytes()).unwrap();
        assert!(c[0].date < c[1].date);
    }

    #[test]
    fn rejects_ohlc_violation() {
        let csv = "date,open,high,low,close\n2020-01-02,100,110,120,105\n";
        let err = load_candles(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::OhlcInvariant { .. }));
        assert!(err.to_string().contains("OHLC invariant violated"));
    }

    #[test]
    fn rejects_duplicate_date() {
        let csv = "date,open,high,low,close\n2020-01-02,1,2,1,2\n2020-01-02,1,2,1,2\n";
        let err = load_candles(csv.as_bytes()).unwrap_err();
        assert_eq!(err, DataError::DuplicateDate(d("2020-01-02")));
        assert!(err.to_string().contains("duplicate date"));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "date,open,high,low,close\n2020-01-02,1,2,1,2\n2020-01-03,1,x,1,2\n";
        match load_candles(csv.as_bytes()).unwrap_err() {
            DataError::Malformed { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn tweets_parse_and_validate() {
        let ok = "date,text,label\n2020-01-02,\"great quarter\",1\n2020-01-02,meh,\n";
        let t = load_tweets(ok.as_bytes()).unwrap();
        assert_eq!(t[0].label, Some(Sentiment::Positive));
        assert_eq!(t[0].text, "great quarter");
        assert_eq!(t[1].label, None);

        let empty = "date,text,label\n2020-01-02,\"\",1\n";
        let err = load_tweets(empty.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("empty text"));

        let zero = "date,text,label\n2020-01-02,hello,0\n";
        let err = load_tweets(zero.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("label must be +1 or -1"));
    }

    #[test]
    fn align_fills_zero_and_drops_non_trading() {
        let candles: Vec<Candle> = ["2020-01-02", "2020-01-03", "2020-01-06"]
            .iter()
            .map(|s| Candle::new(d(s), 1.0, 2.0, 1.0, 2.0).unwrap())
            .collect();
        let mut idx = BTreeMap::new();
        idx.insert(d("2020-01-03"), 2);
        let a = align_daily(&candles, &idx);
        assert_eq!(a.rows.iter().map(|r| r.sentiment).collect::<Vec<_>>(), [0, 2, 0]);

        assert!(align_daily(&candles, &BTreeMap::new())
            .rows
            .iter()
            .all(|r| r.sentiment == 0));

        // 2020-01-04 is a Saturday.
        idx.insert(d("2020-01-04"), 7);
        let a = align_daily(&candles, &idx);
        assert_eq!(a.rows.iter().map(|r| r.sentiment).collect::<Vec<_>>(), [0, 2, 0]);
        let rolled = align_daily_with(&candles, &idx, NonTradingDays::RollForward);
        assert_eq!(rolled.rows.iter().map(|r| r.sentiment).collect::<Vec<_>>(), [0, 2, 7]);
    }

    #[test]
    fn split_floor_arithmetic() {
        let (tr, te) = chronological_split(&series(10), 0.8).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr, te) = chronological_split(&series(5), 0.5).unwrap();
        assert_eq!((tr.len(), te.len()), (2, 3));
        assert!(chronological_split(&series(5), 1.0).is_err());
        assert!(chronological_split(&series(5), 0.0).is_err());
        assert!(matches!(
            chronological_split(&series(1), 0.5),
            Err(DataError::EmptySplit { .. })
        ));
    }

    #[test]
    fn scaler_examples() {
        let mut s = series(3);
        for (r, v) in s.rows.iter_mut().zip([10.0, 20.0, 30.0]) {
            r.close = v;
            r.sentiment = 5;
        }
        let sc = Scaler::fit(&s).unwrap();
        let out = sc.apply(&s);
        assert_eq!(out.rows.iter().map(|r| r[CLOSE]).collect::<Vec<_>>(), [0.0, 0.5, 1.0]);
        assert!(out.rows.iter().all(|r| r[SENTIMENT] == 0.0));
        let x = 17.3;
        assert!((sc.unscale(CLOSE, sc.scale(CLOSE, x)) - x).abs() <= 1e-9 * x);
        assert_eq!(Scaler::fit(&AlignedSeries::default()), Err(DataError::EmptyTrainingSet));
    }

    #[test]
    fn window_examples() {
        assert_eq!(make_windows(&scaled(10), 3, 1).unwrap().len(), 7);
        assert!(matches!(
            make_windows(&scaled(4), 4, 1),
            Err(DataError::SeriesTooShort { .. })
        ));
        let s = scaled(2);
        let w = make_windows(&s, 1, 1).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.windows[0].target, s.rows[1][CLOSE]);
        assert_eq!(w.windows[0].input.row(0), &s.rows[0]);
    }

    #[test]
    fn window_count_matches_enumeration() {
        for n in 1..=12 {
            for l in 1..=5 {
                for h in 1..=3 {
                    let brute = (0..n).filter(|start| start + l + h - 1 < n).count();
                    match make_windows(&scaled(n), l, h) {
                        Ok(ds) => {
                            assert_eq!(ds.len(), brute, "n={n} l={l} h={h}");
                            for w in &ds.windows {
                                assert_eq!(w.target_date, series(n).rows[w.start + l + h - 1].date);
                            }
                        }
                        Err(_) => assert_eq!(brute, 0, "n={n} l={l} h={h}"),
                    }
                }
            }
        }
    }

    #[test]
    fn targeted_windows_partition_full_set() {
        let s = scaled(20);
        let all = make_windows(&s, 4, 1).unwrap();
        let a = make_windows_targeting(&s, 4, 1, 0..15).unwrap();
        let b = make_windows_targeting(&s, 4, 1, 15..20).unwrap();
        assert_eq!(a.len() + b.len(), all.len());
        assert_eq!(b.len(), 5);
    }

    proptest! {
        #[test]
        fn split_preserves_order(n in 2usize..60, frac in 0.05f64..0.95) {
            let s = series(n);
            if let Ok((tr, te)) = chronological_split(&s, frac) {
                let mut joined = tr.rows.clone();
                joined.extend(te.rows);
                prop_assert_eq!(joined, s.rows);
            }
        }

        #[test]
        fn scaler_round_trip(lo in -1e6f64..1e6, span in 1e-3f64..1e6, t in -2.0f64..3.0) {
            let mut s = series(2);
            s.rows[0].open = lo;
            s.rows[1].open = lo + span;
            let sc = Scaler::fit(&s).unwrap();
            let x = lo + t * span;
            let back = sc.unscale(0, sc.scale(0, x));
            prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(span).max(1.0));
        }

        #[test]
        fn align_zero_exactly_off_index(mask in proptest::collection::vec(any::<bool>(), 1..30)) {
            let start = d("2021-03-01");
            let candles: Vec<Candle> = (0..mask.len())
                .map(|i| Candle::new(start + chrono::Days::new(i as u64), 1.0, 2.0, 1.0, 2.0).unwrap())
                .collect();
            let idx: BTreeMap<NaiveDate, i64> = candles
                .iter()
                .zip(&mask)
                .filter(|(_, m)| **m)
                .map(|(c, _)| (c.date, 3))
                .collect();
            let a = align_daily(&candles, &idx);
            for row in &a.rows {
                prop_assert_eq!(row.sentiment == 0, !idx.contains_key(&row.date));
            }
        }
    }
}

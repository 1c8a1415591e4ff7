//! Tokenization and TF-IDF weighting.
//!
//! `tfidf(w, d) = tf(w, d) · idf(w)` with `tf(w, d) = count(w, d) / |d|` and
//! `idf(w) = ln(N / df(w))`. No smoothing is applied; terms only enter the
//! vocabulary with `df ≥ 1`, so the ratio is always defined.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default minimum document frequency for a term to enter the vocabulary.
pub const DEFAULT_MIN_DF: usize = 2;
/// Default vocabulary cap.
pub const DEFAULT_MAX_TERMS: usize = 5000;
/// Tag recorded with every fitted model; IDF uses the natural logarithm.
pub const IDF_LOG_BASE: &str = "e";

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("cannot fit a vectorizer on an empty corpus")]
    EmptyCorpus,
    #[error("no term reaches min_df={min_df} (max_terms={max_terms})")]
    EmptyVocabulary { min_df: usize, max_terms: usize },
}

/// Lowercases, splits on runs of non-alphanumeric characters and drops URL
/// fragments and one-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let lower = word.to_lowercase();
        if lower.starts_with("http") && lower.contains("://") || lower.starts_with("www.") {
            continue;
        }
        tokens.extend(
            lower
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| t.chars().count() >= 2)
                .map(str::to_owned),
        );
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn new(terms: Vec<String>, document_frequency: Vec<usize>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            terms,
            document_frequency,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.document_frequency[i])
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// Fitted vocabulary plus per-term IDF weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    corpus_size: usize,
    log_base: String,
}

impl TfIdfModel {
    /// Fits on pre-tokenized documents. Terms need `df ≥ min_df`; if more
    /// than `max_terms` survive, the highest-df ones are kept with ties
    /// broken lexicographically. Columns are ordered lexicographically.
    pub fn fit<D: AsRef<[String]>>(
        corpus: &[D],
        min_df: usize,
        max_terms: usize,
    ) -> Result<Self, TextError> {
        if corpus.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.as_ref().iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        kept.truncate(max_terms);
        if kept.is_empty() {
            return Err(TextError::EmptyVocabulary { min_df, max_terms });
        }
        kept.sort_by(|a, b| a.0.cmp(b.0));

        let n = corpus.len();
        let idf = kept
            .iter()
            .map(|&(_, c)| (n as f64 / c as f64).ln())
            .collect();
        let vocabulary = Vocabulary::new(
            kept.iter().map(|(t, _)| t.to_string()).collect(),
            kept.iter().map(|&(_, c)| c).collect(),
        );
        Ok(Self {
            vocabulary,
            idf,
            corpus_size: n,
            log_base: IDF_LOG_BASE.to_string(),
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn dimension(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn log_base(&self) -> &str {
        &self.log_base
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.index_of(term).map(|i| self.idf[i])
    }

    /// `count(w, d) / |d|` per vocabulary term, where `|d|` counts every token
    /// including out-of-vocabulary ones. An empty document gives zeros.
    pub fn term_frequency(&self, tokens: &[String]) -> Vec<f64> {
        let mut tf = vec![0.0; self.dimension()];
        if tokens.is_empty() {
            return tf;
        }
        let mut counts = vec![0usize; self.dimension()];
        for t in tokens {
            if let Some(i) = self.vocabulary.index_of(t) {
                counts[i] += 1;
            }
        }
        let len = tokens.len() as f64;
        for (f, c) in tf.iter_mut().zip(counts) {
            *f = c as f64 / len;
        }
        tf
    }

    pub fn vectorize(&self, tokens: &[String]) -> Vec<f64> {
        let mut v = self.term_frequency(tokens);
        for (x, idf) in v.iter_mut().zip(&self.idf) {
            *x *= idf;
        }
        v
    }

    pub fn vectorize_text(&self, text: &str) -> Vec<f64> {
        self.vectorize(&tokenize(text))
    }

    /// Fits on `corpus` and vectorizes every document against the result.
    pub fn fit_transform<D: AsRef<[String]>>(
        corpus: &[D],
        min_df: usize,
        max_terms: usize,
    ) -> Result<(Self, Vec<Vec<f64>>), TextError> {
        let model = Self::fit(corpus, min_df, max_terms)?;
        let rows = corpus.iter().map(|d| model.vectorize(d.as_ref())).collect();
        Ok((model, rows))
    }

    /// Restores lookup tables after deserialization.
    pub(crate) fn reindex(&mut self) {
        self.vocabulary.rebuild_index();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn corpus() -> Vec<Vec<String>> {
        vec![
            toks(&["stock", "up"]),
            toks(&["stock", "down"]),
            toks(&["up", "up"]),
        ]
    }

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize("Stock UP, up!"), toks(&["stock", "up", "up"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("buy https://t.co/x now"), toks(&["buy", "now"]));
        assert_eq!(tokenize("a b cd"), toks(&["cd"]));
    }

    #[test]
    fn document_frequencies() {
        let m = TfIdfModel::fit(&corpus(), 1, 100).unwrap();
        let v = m.vocabulary();
        assert_eq!(v.document_frequency("stock"), Some(2));
        assert_eq!(v.document_frequency("up"), Some(2));
        assert_eq!(v.document_frequency("down"), Some(1));
        for (i, t) in v.terms().iter().enumerate() {
            assert_eq!(v.index_of(t), Some(i));
        }

        let m2 = TfIdfModel::fit(&corpus(), 2, 100).unwrap();
        assert_eq!(m2.vocabulary().index_of("down"), None);
        assert_eq!(m2.dimension(), 2);
    }

    #[test]
    fn term_in_every_document_has_zero_idf() {
        let c = vec![toks(&["aa", "bb"]), toks(&["aa"]), toks(&["aa", "cc"])];
        let m = TfIdfModel::fit(&c, 1, 10).unwrap();
        assert_eq!(m.idf_of("aa"), Some(0.0));
        let v = m.vectorize(&toks(&["aa", "aa"]));
        assert_eq!(v[m.vocabulary().index_of("aa").unwrap()], 0.0);
    }

    #[test]
    fn max_terms_keeps_highest_df_then_lexicographic() {
        let c = vec![toks(&["zz", "yy", "xx"]), toks(&["zz", "yy"]), toks(&["zz", "ww"])];
        let m = TfIdfModel::fit(&c, 1, 2).unwrap();
        assert_eq!(m.vocabulary().terms(), &toks(&["yy", "zz"]));
        let m = TfIdfModel::fit(&c, 1, 3).unwrap();
        // df(ww) = df(xx) = 1; "ww" wins the tie.
        assert_eq!(m.vocabulary().terms(), &toks(&["ww", "yy", "zz"]));
    }

    #[test]
    fn fit_errors() {
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(TfIdfModel::fit(&empty, 1, 10), Err(TextError::EmptyCorpus));
        assert!(matches!(
            TfIdfModel::fit(&[toks(&["only"])], 2, 10),
            Err(TextError::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn term_frequency_examples() {
        let m = TfIdfModel::fit(&corpus(), 1, 100).unwrap();
        let idx = |t: &str| m.vocabulary().index_of(t).unwrap();
        let tf = m.term_frequency(&toks(&["stock", "up"]));
        assert_eq!(tf[idx("stock")], 0.5);
        assert_eq!(tf[idx("up")], 0.5);
        assert_eq!(tf[idx("down")], 0.0);
        assert_eq!(m.term_frequency(&toks(&["up", "up"]))[idx("up")], 1.0);
        assert!(m.term_frequency(&toks(&["zzz", "qqq"])).iter().all(|&x| x == 0.0));
        assert!(m.term_frequency(&[]).iter().all(|&x| x == 0.0));
        // OOV tokens still count in the denominator.
        assert_eq!(m.term_frequency(&toks(&["up", "oov", "oov", "oov"]))[idx("up")], 0.25);
    }

    #[test]
    fn single_document_corpus_collapses_to_zero() {
        let (m, rows) = TfIdfModel::fit_transform(&[toks(&["hello", "world"])], 1, 10).unwrap();
        assert!(m.idf().iter().all(|&x| x == 0.0));
        assert!(rows[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identical_documents_identical_rows() {
        let d = toks(&["aa", "bb", "aa"]);
        let (_, rows) = TfIdfModel::fit_transform(&[d.clone(), d.clone(), d], 1, 10).unwrap();
        assert_eq!(rows[0], rows[1]);
        assert_eq!(rows[1], rows[2]);
    }

    #[test]
    fn idf_strictly_decreasing_in_df() {
        for n in 1..=50usize {
            for df1 in 1..=n {
                for df2 in (df1 + 1)..=n {
                    let a = (n as f64 / df1 as f64).ln();
                    let b = (n as f64 / df2 as f64).ln();
                    assert!(a > b, "n={n} df1={df1} df2={df2}");
                }
            }
        }
        // Same ordering observed through a fitted model.
        let c = vec![toks(&["aa", "bb"]), toks(&["aa"]), toks(&["aa", "cc", "bb"]), toks(&["dd"])];
        let m = TfIdfModel::fit(&c, 1, 10).unwrap();
        assert!(m.idf_of("cc").unwrap() > m.idf_of("bb").unwrap());
        assert!(m.idf_of("bb").unwrap() > m.idf_of("aa").unwrap());
    }

    fn word() -> impl Strategy<Value = String> {
        proptest::sample::select(vec!["aa", "bb", "cc", "dd", "ee", "ff"]).prop_map(String::from)
    }

    proptest! {
        #[test]
        fn coordinates_nonnegative_and_finite(
            docs in proptest::collection::vec(proptest::collection::vec(word(), 0..8), 1..12)
        ) {
            if let Ok((_, rows)) = TfIdfModel::fit_transform(&docs, 1, 100) {
                for r in rows {
                    prop_assert!(r.iter().all(|x| x.is_finite() && *x >= 0.0));
                }
            }
        }

        #[test]
        fn bag_of_words(
            docs in proptest::collection::vec(proptest::collection::vec(word(), 1..8), 2..8),
            doc in proptest::collection::vec(word(), 0..10),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let m = TfIdfModel::fit(&docs, 1, 100).unwrap();
            let mut shuffled = doc.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(m.vectorize(&doc), m.vectorize(&shuffled));
        }

        #[test]
        fn fit_transform_rows_match_vectorize(
            docs in proptest::collection::vec(proptest::collection::vec(word(), 1..8), 1..8)
        ) {
            let (m, rows) = TfIdfModel::fit_transform(&docs, 1, 100).unwrap();
            for (d, r) in docs.iter().zip(&rows) {
                prop_assert_eq!(&m.vectorize(d), r);
            }
        }
    }
}

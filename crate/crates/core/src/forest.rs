//! CART classification trees and a bagged random forest over `±1` labels,
//! plus tweet scoring and the daily sentiment index.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Sentiment, TweetRecord};
use crate::parallel;
use crate::text::{tokenize, TfIdfModel};

/// A split must lower the weighted impurity by more than this to be used,
/// and must beat the current best by more than this to replace it.
pub const MIN_IMPURITY_DECREASE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("impurity of an empty node is undefined")]
    EmptyNode,
    #[error("cannot grow a tree from zero samples")]
    NoSamples,
    #[error("training set needs both classes")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} samples but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("invalid forest parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

impl ClassCounts {
    pub fn new(positive: usize, negative: usize) -> Self {
        Self { positive, negative }
    }

    pub fn of<'a>(labels: impl IntoIterator<Item = &'a Sentiment>) -> Self {
        let mut c = Self::default();
        for l in labels {
            c.add(*l);
        }
        c
    }

    #[inline]
    pub fn add(&mut self, label: Sentiment) {
        match label {
            Sentiment::Positive => self.positive += 1,
            Sentiment::Negative => self.negative += 1,
        }
    }

    #[inline]
    pub fn total(&self) -> usize {
        self.positive + self.negative
    }

    pub fn is_pure(&self) -> bool {
        self.positive == 0 || self.negative == 0
    }

    /// Majority label; ties go to `Positive`.
    pub fn majority(&self) -> Sentiment {
        if self.positive >= self.negative {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        }
    }

    fn proportions(&self) -> [f64; 2] {
        let n = self.total() as f64;
        [self.positive as f64 / n, self.negative as f64 / n]
    }
}

/// `1 − Σ p²`.
pub fn gini(counts: &ClassCounts) -> Result<f64, ForestError> {
    if counts.total() == 0 {
        return Err(ForestError::EmptyNode);
    }
    Ok(gini_unchecked(counts))
}

/// `−Σ p·log₂ p` with `0·log 0 = 0`.
pub fn entropy(counts: &ClassCounts) -> Result<f64, ForestError> {
    if counts.total() == 0 {
        return Err(ForestError::EmptyNode);
    }
    Ok(entropy_unchecked(counts))
}

fn gini_unchecked(counts: &ClassCounts) -> f64 {
    1.0 - counts.proportions().iter().map(|p| p * p).sum::<f64>()
}

fn entropy_unchecked(counts: &ClassCounts) -> f64 {
    -counts
        .proportions()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

impl Criterion {
    pub fn impurity(self, counts: &ClassCounts) -> Result<f64, ForestError> {
        match self {
            Criterion::Gini => gini(counts),
            Criterion::Entropy => entropy(counts),
        }
    }

    fn impurity_unchecked(self, counts: &ClassCounts) -> f64 {
        match self {
            Criterion::Gini => gini_unchecked(counts),
            Criterion::Entropy => entropy_unchecked(counts),
        }
    }
}

/// Count-weighted impurity decrease of splitting `left ∪ right`.
/// Both sides must be non-empty.
pub fn impurity_decrease(left: &ClassCounts, right: &ClassCounts, criterion: Criterion) -> f64 {
    let parent = ClassCounts::new(left.positive + right.positive, left.negative + right.negative);
    let n = parent.total() as f64;
    criterion.impurity_unchecked(&parent)
        - (left.total() as f64 / n) * criterion.impurity_unchecked(left)
        - (right.total() as f64 / n) * criterion.impurity_unchecked(right)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// Threshold halfway between two consecutive distinct values, kept strictly
/// below `hi` so the routing rule `x ≤ t` still separates them.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Exhaustive search over `candidate_features` and the midpoints between
/// consecutive distinct values. Ties go to the lower feature, then the lower
/// threshold; decreases within [`MIN_IMPURITY_DECREASE`] of each other tie.
/// `None` when no split lowers the impurity.
pub fn best_split(
    samples: &[(Vec<f64>, Sentiment)],
    candidate_features: &[usize],
    criterion: Criterion,
) -> Option<Split> {
    if samples.len() < 2 {
        return None;
    }
    let x: Vec<&[f64]> = samples.iter().map(|(v, _)| v.as_slice()).collect();
    let y: Vec<Sentiment> = samples.iter().map(|(_, l)| *l).collect();
    let idx: Vec<usize> = (0..samples.len()).collect();
    let mut feats = candidate_features.to_vec();
    feats.sort_unstable();
    feats.dedup();
    SplitSearch {
        x: &x,
        y: &y,
        criterion,
        min_leaf: 1,
    }
    .best(&idx, &feats)
}

struct SplitSearch<'a, R: AsRef<[f64]>> {
    x: &'a [R],
    y: &'a [Sentiment],
    criterion: Criterion,
    min_leaf: usize,
}

impl<R: AsRef<[f64]>> SplitSearch<'_, R> {
    /// `features` must be sorted ascending.
    fn best(&self, idx: &[usize], features: &[usize]) -> Option<Split> {
        let n = idx.len();
        if n < 2 * self.min_leaf.max(1) {
            return None;
        }
        let total = ClassCounts::of(idx.iter().map(|&i| &self.y[i]));
        if total.is_pure() {
            return None;
        }
        let mut best: Option<Split> = None;
        let mut column: Vec<(f64, Sentiment)> = Vec::with_capacity(n);
        for &f in features {
            column.clear();
            column.extend(idx.iter().map(|&i| (self.x[i].as_ref()[f], self.y[i])));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = ClassCounts::default();
            for i in 0..n - 1 {
                left.add(column[i].1);
                let (lo, hi) = (column[i].0, column[i + 1].0);
                if lo == hi {
                    continue;
                }
                let n_left = i + 1;
                if n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let right = ClassCounts::new(
                    total.positive - left.positive,
                    total.negative - left.negative,
                );
                let dec = impurity_decrease(&left, &right, self.criterion);
                if dec > MIN_IMPURITY_DECREASE
                    && best.is_none_or(|b| dec > b.impurity_decrease + MIN_IMPURITY_DECREASE)
                {
                    best = Some(Split {
                        feature: f,
                        threshold: midpoint(lo, hi),
                        impurity_decrease: dec,
                    });
                }
            }
        }
        best
    }

    fn is_constant(&self, idx: &[usize], feature: usize) -> bool {
        let first = self.x[idx[0]].as_ref()[feature];
        idx[1..].iter().all(|&i| self.x[i].as_ref()[feature] == first)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: ClassCounts,
        label: Sentiment,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Non-constant features examined per node; `None` examines all of them.
    pub features_per_split: Option<usize>,
    pub criterion: Criterion,
}

/// CART tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    params: TreeParams,
}

impl DecisionTree {
    /// Grows a tree on the rows of `x` listed in `samples` (duplicates allowed).
    pub fn grow<R: AsRef<[f64]>, G: Rng>(
        x: &[R],
        y: &[Sentiment],
        samples: &[usize],
        params: &TreeParams,
        rng: &mut G,
    ) -> Result<Self, ForestError> {
        if samples.is_empty() {
            return Err(ForestError::NoSamples);
        }
        if x.len() != y.len() {
            return Err(ForestError::LengthMismatch(x.len(), y.len()));
        }
        let n_features = x[samples[0]].as_ref().len();
        let search = SplitSearch {
            x,
            y,
            criterion: params.criterion,
            min_leaf: params.min_samples_leaf.max(1),
        };
        let mut tree = Self {
            nodes: Vec::new(),
            n_features,
            params: *params,
        };
        let mut order: Vec<usize> = (0..n_features).collect();
        tree.grow_node(&search, samples.to_vec(), 0, &mut order, rng);
        Ok(tree)
    }

    fn grow_node<R: AsRef<[f64]>, G: Rng>(
        &mut self,
        search: &SplitSearch<'_, R>,
        idx: Vec<usize>,
        depth: usize,
        order: &mut [usize],
        rng: &mut G,
    ) -> usize {
        let counts = ClassCounts::of(idx.iter().map(|&i| &search.y[i]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            counts,
            label: counts.majority(),
        });
        if depth >= self.params.max_depth || counts.is_pure() || idx.len() < 2 * search.min_leaf {
            return id;
        }

        let features = self.draw_features(search, &idx, order, rng);
        let Some(split) = search.best(&idx, &features) else {
            return id;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| search.x[i].as_ref()[split.feature] <= split.threshold);
        let left = self.grow_node(search, left_idx, depth + 1, order, rng);
        let right = self.grow_node(search, right_idx, depth + 1, order, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    /// Visits features in a random order until `features_per_split` of them
    /// vary on this node, and returns those sorted.
    fn draw_features<R: AsRef<[f64]>, G: Rng>(
        &self,
        search: &SplitSearch<'_, R>,
        idx: &[usize],
        order: &mut [usize],
        rng: &mut G,
    ) -> Vec<usize> {
        let wanted = self.params.features_per_split.unwrap_or(self.n_features);
        let mut picked = Vec::with_capacity(wanted.min(self.n_features));
        for k in 0..order.len() {
            if picked.len() >= wanted {
                break;
            }
            let j = rng.random_range(k..order.len());
            order.swap(k, j);
            let f = order[k];
            if !search.is_constant(idx, f) {
                picked.push(f);
            }
        }
        picked.sort_unstable();
        picked
    }

    pub fn predict(&self, x: &[f64]) -> Sentiment {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ClassCounts> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts, .. } => Some(counts),
            Node::Split { .. } => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Defaults to `⌈√V⌉` when absent.
    pub features_per_split: Option<usize>,
    pub criterion: Criterion,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
            criterion: Criterion::Gini,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidParams("n_trees must be ≥ 1".into()));
        }
        if self.max_depth == 0 {
            return Err(ForestError::InvalidParams("max_depth must be ≥ 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ForestError::InvalidParams("min_samples_leaf must be ≥ 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(ForestError::InvalidParams("features_per_split must be ≥ 1".into()));
        }
        Ok(())
    }

    fn tree_params(&self, n_features: usize) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: Some(
                self.features_per_split
                    .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
                    .max(1),
            ),
            criterion: self.criterion,
        }
    }
}

/// Independent RNG stream for tree `index`.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_features: usize,
    params: ForestParams,
}

impl RandomForest {
    /// Bagged forest: tree `i` sees `n` rows drawn with replacement using
    /// [`tree_rng`]`(seed, i)`. Trees are grown in parallel when enabled.
    pub fn fit<R: AsRef<[f64]> + Sync>(
        x: &[R],
        y: &[Sentiment],
        params: &ForestParams,
    ) -> Result<Self, ForestError> {
        params.validate()?;
        if x.len() != y.len() {
            return Err(ForestError::LengthMismatch(x.len(), y.len()));
        }
        if x.is_empty() {
            return Err(ForestError::NoSamples);
        }
        let n_features = x[0].as_ref().len();
        if let Some(bad) = x.iter().find(|r| r.as_ref().len() != n_features) {
            return Err(ForestError::DimensionMismatch {
                expected: n_features,
                found: bad.as_ref().len(),
            });
        }
        if ClassCounts::of(y).is_pure() {
            return Err(ForestError::SingleClass);
        }

        let tree_params = params.tree_params(n_features);
        let n = x.len();
        let trees = parallel::map_range(params.n_trees, |i| {
            let mut rng = tree_rng(params.seed, i);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            DecisionTree::grow(x, y, &bootstrap, &tree_params, &mut rng)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            trees,
            n_features,
            params: *params,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    /// Mean of the `±1` tree outputs.
    pub fn vote_mean(&self, x: &[f64]) -> Result<f64, ForestError> {
        self.check_dim(x)?;
        Ok(self.vote_sum(x) as f64 / self.trees.len() as f64)
    }

    fn vote_sum(&self, x: &[f64]) -> i64 {
        self.trees.iter().map(|t| t.predict(x).score()).sum()
    }

    /// Sign of the mean vote; a tied vote gives `Positive`.
    pub fn predict(&self, x: &[f64]) -> Result<Sentiment, ForestError> {
        self.check_dim(x)?;
        Ok(if self.vote_sum(x) >= 0 {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Vectorizes and classifies each tweet; output order follows input order.
pub fn score_tweets(
    forest: &RandomForest,
    model: &TfIdfModel,
    tweets: &[TweetRecord],
) -> Result<Vec<(NaiveDate, Sentiment)>, ForestError> {
    parallel::map_slice(tweets, |t| {
        let v = model.vectorize(&tokenize(&t.text));
        forest.predict(&v).map(|s| (t.date, s))
    })
    .into_iter()
    .collect()
}

/// Sums scores per calendar day. Days without tweets are absent.
pub fn daily_sentiment_index(scored: &[(NaiveDate, Sentiment)]) -> BTreeMap<NaiveDate, i64> {
    let mut index = BTreeMap::new();
    for (date, s) in scored {
        *index.entry(*date).or_insert(0) += s.score();
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Sentiment::{Negative as N, Positive as P};

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&ClassCounts::new(8, 0)).unwrap(), 0.0);
        assert_eq!(gini(&ClassCounts::new(4, 4)).unwrap(), 0.5);
        assert!((gini(&ClassCounts::new(6, 2)).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(gini(&ClassCounts::default()), Err(ForestError::EmptyNode));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&ClassCounts::new(5, 0)).unwrap(), 0.0);
        assert_eq!(entropy(&ClassCounts::new(1, 1)).unwrap(), 1.0);
        // -(0.75 log2 0.75 + 0.25 log2 0.25)
        assert!((entropy(&ClassCounts::new(3, 1)).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert_eq!(entropy(&ClassCounts::default()), Err(ForestError::EmptyNode));
    }

    #[test]
    fn best_split_one_dimensional() {
        let s: Vec<(Vec<f64>, Sentiment)> = vec![
            (vec![0.0], N),
            (vec![1.0], N),
            (vec![2.0], P),
            (vec![3.0], P),
        ];
        let split = best_split(&s, &[0], Criterion::Gini).unwrap();
        assert_eq!(split.feature, 0);
        assert_eq!(split.threshold, 1.5);
        assert_eq!(split.impurity_decrease, 0.5);
    }

    #[test]
    fn best_split_none_cases() {
        let same: Vec<(Vec<f64>, Sentiment)> = vec![(vec![1.0, 2.0], N), (vec![1.0, 2.0], P)];
        assert_eq!(best_split(&same, &[0, 1], Criterion::Gini), None);
        let pure: Vec<(Vec<f64>, Sentiment)> = vec![(vec![0.0], P), (vec![1.0], P)];
        assert_eq!(best_split(&pure, &[0], Criterion::Entropy), None);
    }

    #[test]
    fn tie_prefers_lower_feature() {
        let s: Vec<(Vec<f64>, Sentiment)> = vec![(vec![0.0, 0.0], N), (vec![1.0, 1.0], P)];
        let split = best_split(&s, &[1, 0], Criterion::Gini).unwrap();
        assert_eq!(split.feature, 0);
    }

    fn params(max_depth: usize) -> TreeParams {
        TreeParams {
            max_depth,
            min_samples_leaf: 1,
            features_per_split: None,
            criterion: Criterion::Gini,
        }
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![N, N];
        let t = DecisionTree::grow(&x, &y, &[0, 1], &params(5), &mut tree_rng(0, 0)).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[0.5]), N);
    }

    #[test]
    fn depth_zero_is_majority_leaf() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![N, P, P];
        let t = DecisionTree::grow(&x, &y, &[0, 1, 2], &params(0), &mut tree_rng(0, 0)).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[0.0]), P);
    }

    #[test]
    fn separable_set_gives_depth_one_tree() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.7]).collect();
        let y: Vec<Sentiment> = (0..8).map(|i| if i < 3 { N } else { P }).collect();
        let idx: Vec<usize> = (0..8).collect();
        let t = DecisionTree::grow(&x, &y, &idx, &params(10), &mut tree_rng(1, 0)).unwrap();
        assert_eq!(t.depth(), 1);
        assert!(x.iter().zip(&y).all(|(xi, yi)| t.predict(xi) == *yi));
        // Oracle: the best single threshold among all midpoints.
        let samples: Vec<_> = x.iter().cloned().zip(y.iter().copied()).collect();
        let s = best_split(&samples, &[0], Criterion::Gini).unwrap();
        assert!(matches!(t.nodes()[0], Node::Split { threshold, .. } if threshold == s.threshold));
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y: Vec<Sentiment> = (0..20).map(|i| if i % 3 == 0 { P } else { N }).collect();
        let idx: Vec<usize> = (0..20).collect();
        let p = TreeParams {
            max_depth: 6,
            min_samples_leaf: 3,
            features_per_split: None,
            criterion: Criterion::Entropy,
        };
        let t = DecisionTree::grow(&x, &y, &idx, &p, &mut tree_rng(3, 0)).unwrap();
        assert!(t.leaves().all(|c| c.total() >= 3));
        assert!(t.depth() <= 6);
    }

    #[test]
    fn forest_vote_rules() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![N, N, P, P];
        let mut f = RandomForest::fit(
            &x,
            &y,
            &ForestParams {
                n_trees: 3,
                ..Default::default()
            },
        )
        .unwrap();
        // Hand-built trees with fixed votes.
        let leaf = |label| DecisionTree {
            nodes: vec![Node::Leaf {
                counts: ClassCounts::default(),
                label,
            }],
            n_features: 1,
            params: params(1),
        };
        f.trees = vec![leaf(P), leaf(P), leaf(N)];
        assert_eq!(f.vote_mean(&[0.0]).unwrap(), 1.0 / 3.0);
        assert_eq!(f.predict(&[0.0]).unwrap(), P);
        f.trees = vec![leaf(N), leaf(N), leaf(N)];
        assert_eq!(f.predict(&[0.0]).unwrap(), N);
        f.trees = vec![leaf(P), leaf(N)];
        assert_eq!(f.vote_mean(&[0.0]).unwrap(), 0.0);
        assert_eq!(f.predict(&[0.0]).unwrap(), P);
        assert!(matches!(
            f.predict(&[0.0, 1.0]),
            Err(ForestError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fit_rejects_bad_input() {
        let x = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            RandomForest::fit(&x, &[P, P], &ForestParams::default()),
            Err(ForestError::SingleClass)
        );
        assert_eq!(
            RandomForest::fit(&x, &[P], &ForestParams::default()),
            Err(ForestError::LengthMismatch(2, 1))
        );
        let ragged = vec![vec![0.0], vec![1.0, 2.0]];
        assert!(matches!(
            RandomForest::fit(&ragged, &[P, N], &ForestParams::default()),
            Err(ForestError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn daily_index_sums() {
        let d1 = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
        let d2 = NaiveDate::from_ymd_opt(2020, 1, 3).unwrap();
        let mut scored = vec![(d1, P), (d1, N), (d1, P)];
        scored.extend(std::iter::repeat_n((d2, P), 5));
        scored.extend(std::iter::repeat_n((d2, N), 2));
        let idx = daily_sentiment_index(&scored);
        assert_eq!(idx[&d1], 1);
        assert_eq!(idx[&d2], 3);
        assert_eq!(idx.len(), 2);
        assert!(daily_sentiment_index(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn impurity_bounds(pos in 0usize..5000, neg in 0usize..5000) {
            prop_assume!(pos + neg > 0);
            let c = ClassCounts::new(pos, neg);
            let g = gini(&c).unwrap();
            let e = entropy(&c).unwrap();
            prop_assert!((0.0..=0.5).contains(&g));
            prop_assert!((0.0..=1.0 + 1e-15).contains(&e) && e >= 0.0);
        }

        #[test]
        fn index_total_matches_scores(scores in proptest::collection::vec((0u32..20, any::<bool>()), 0..200)) {
            let base = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
            let scored: Vec<_> = scores
                .iter()
                .map(|(d, p)| (base + chrono::Days::new(*d as u64), if *p { P } else { N }))
                .collect();
            let idx = daily_sentiment_index(&scored);
            let total: i64 = scored.iter().map(|(_, s)| s.score()).sum();
            prop_assert_eq!(idx.values().sum::<i64>(), total);
        }
    }
}

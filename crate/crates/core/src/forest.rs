//! Decision trees with Gini or entropy splits, and bagged random forests.
//!
//! Trees split on `x[feature] <= threshold` (left) versus `>` (right), with
//! thresholds at midpoints between consecutive distinct observed values. A
//! node splits only if the count-weighted impurity of its children is strictly
//! below its own.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::AccountCategory;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::sparse::SparseVector;
use crate::textprep::FeatureSpace;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("impurity of an empty node is undefined")]
    EmptyNode,
    #[error("no training rows")]
    EmptyData,
    #[error("{rows} rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("vector has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed forest file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-class counts of the training rows reaching a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeClassCounts {
    counts: Vec<u32>,
}

impl NodeClassCounts {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Index of the largest count; ties go to the lower index.
    pub fn argmax(&self) -> usize {
        argmax_first(&self.counts)
    }

    pub fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0).count() <= 1
    }
}

fn argmax_first<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn gini_of(counts: &[u32], total: f64) -> f64 {
    counts
        .iter()
        .map(|&c| {
            let p = f64::from(c) / total;
            p * (1.0 - p)
        })
        .sum()
}

fn entropy_of(counts: &[u32], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = f64::from(c) / total;
            p * p.log2()
        })
        .fold(0.0, |acc, x| acc - x)
}

/// `Σ p(1 − p)` over classes.
pub fn gini(counts: &NodeClassCounts) -> Result<f64, ForestError> {
    match counts.total() {
        0 => Err(ForestError::EmptyNode),
        t => Ok(gini_of(&counts.counts, t as f64)),
    }
}

/// `−Σ p log₂ p` over classes, with `0 log 0 = 0`.
pub fn entropy(counts: &NodeClassCounts) -> Result<f64, ForestError> {
    match counts.total() {
        0 => Err(ForestError::EmptyNode),
        t => Ok(entropy_of(&counts.counts, t as f64)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Impurity {
    Gini,
    Entropy,
}

impl Impurity {
    fn eval(self, counts: &[u32], total: u32) -> f64 {
        if total == 0 {
            return 0.0;
        }
        match self {
            Impurity::Gini => gini_of(counts, f64::from(total)),
            Impurity::Entropy => entropy_of(counts, f64::from(total)),
        }
    }
}

impl FromStr for Impurity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gini" => Ok(Impurity::Gini),
            "entropy" => Ok(Impurity::Entropy),
            other => Err(format!("unknown impurity `{other}` (expected gini or entropy)")),
        }
    }
}

impl fmt::Display for Impurity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Impurity::Gini => "gini",
            Impurity::Entropy => "entropy",
        })
    }
}

/// Training rows with class indices in `[0, n_classes)`.
#[derive(Clone, Copy, Debug)]
pub struct Samples<'a> {
    pub rows: &'a [SparseVector],
    pub labels: &'a [usize],
    pub n_classes: usize,
}

impl Samples<'_> {
    fn counts(&self, members: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &i in members {
            c[self.labels[i]] += 1;
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Parent impurity minus the size-weighted mean child impurity.
    pub impurity_decrease: f64,
}

const MIN_DECREASE: f64 = 1e-12;

/// Best split of `members` over `candidate_features` (ascending), or `None`
/// when no split lowers the weighted child impurity. Children smaller than
/// `min_leaf` are not considered. Ties keep the lowest feature, then the
/// lowest threshold.
pub fn best_split(
    samples: &Samples<'_>,
    members: &[usize],
    candidate_features: &[usize],
    impurity: Impurity,
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = members.len() as u32;
    if n < 2 || candidate_features.is_empty() {
        return None;
    }
    let parent = samples.counts(members);
    let parent_imp = impurity.eval(&parent, n);
    if parent_imp <= MIN_DECREASE {
        return None;
    }

    let mut buckets: Vec<Vec<(f64, usize)>> = vec![Vec::new(); candidate_features.len()];
    for &i in members {
        let label = samples.labels[i];
        for (f, v) in samples.rows[i].iter() {
            if let Ok(slot) = candidate_features.binary_search(&f) {
                buckets[slot].push((v, label));
            }
        }
    }

    let k = samples.n_classes;
    let min_leaf = min_leaf.max(1) as u32;
    let mut best: Option<SplitChoice> = None;
    let mut entries: Vec<(f64, usize, u32)> = Vec::new();
    let mut left = vec![0u32; k];
    let mut right = vec![0u32; k];
    for (slot, bucket) in buckets.into_iter().enumerate() {
        entries.clear();
        let mut zeros = parent.clone();
        for &(v, label) in &bucket {
            zeros[label] -= 1;
            entries.push((v, label, 1));
        }
        for (label, &z) in zeros.iter().enumerate() {
            if z > 0 {
                entries.push((0.0, label, z));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));

        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&parent);
        let mut n_left = 0u32;
        for i in 0..entries.len() - 1 {
            let (v, label, w) = entries[i];
            left[label] += w;
            right[label] -= w;
            n_left += w;
            let next = entries[i + 1].0;
            if next <= v {
                continue;
            }
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let child = (f64::from(n_left) * impurity.eval(&left, n_left)
                + f64::from(n_right) * impurity.eval(&right, n_right))
                / f64::from(n);
            let decrease = parent_imp - child;
            if decrease > MIN_DECREASE && best.is_none_or(|b| decrease > b.impurity_decrease) {
                let mid = v + (next - v) / 2.0;
                let threshold = if mid < next { mid } else { v };
                best = Some(SplitChoice { feature: candidate_features[slot], threshold, impurity_decrease: decrease });
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        counts: NodeClassCounts,
        /// Class index; argmax of `counts`.
        prediction: usize,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &SparseVector) -> usize {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Internal { feature, threshold, left, right } => {
                    node = if x.get(*feature) <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeConfig {
    /// Features drawn per node; `None` means all.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub impurity: Impurity,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { mtry: None, max_depth: None, min_leaf: 1, impurity: Impurity::Gini }
    }
}

/// Grow one tree over `members` (indices into `samples`, repeats allowed).
pub fn grow_tree(
    samples: &Samples<'_>,
    members: &[usize],
    n_features: usize,
    config: &TreeConfig,
    rng: &mut Rng,
) -> Result<TreeNode, ForestError> {
    if members.is_empty() {
        return Err(ForestError::EmptyData);
    }
    let mtry = config.mtry.unwrap_or(n_features);
    if n_features > 0 && (mtry == 0 || mtry > n_features) {
        return Err(ForestError::InvalidConfig(format!("mtry {mtry} not in [1, {n_features}]")));
    }
    Ok(grow(samples, members.to_vec(), n_features, mtry, config, 0, rng))
}

fn grow(
    samples: &Samples<'_>,
    members: Vec<usize>,
    n_features: usize,
    mtry: usize,
    config: &TreeConfig,
    depth: usize,
    rng: &mut Rng,
) -> TreeNode {
    let counts = NodeClassCounts::new(samples.counts(&members));
    let leaf = |counts: NodeClassCounts| {
        let prediction = counts.argmax();
        TreeNode::Leaf { counts, prediction }
    };
    if counts.is_pure() || config.max_depth.is_some_and(|d| depth >= d) {
        return leaf(counts);
    }
    let candidates: Vec<usize> = if mtry >= n_features {
        (0..n_features).collect()
    } else {
        let mut c = rand::seq::index::sample(rng, n_features, mtry).into_vec();
        c.sort_unstable();
        c
    };
    let Some(split) = best_split(samples, &members, &candidates, config.impurity, config.min_leaf) else {
        return leaf(counts);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = members
        .iter()
        .partition(|&&i| samples.rows[i].get(split.feature) <= split.threshold);
    TreeNode::Internal {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(samples, l, n_features, mtry, config, depth + 1, rng)),
        right: Box::new(grow(samples, r, n_features, mtry, config, depth + 1, rng)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features drawn per split; `None` means ⌈√V⌉.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub impurity: Impurity,
    pub seed: u64,
    /// Resample rows with replacement for each tree.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            mtry: None,
            max_depth: None,
            min_leaf: 1,
            impurity: Impurity::Gini,
            seed: 0,
            bootstrap: true,
        }
    }
}

pub fn default_mtry(n_features: usize) -> usize {
    ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features.max(1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub classes: Vec<AccountCategory>,
    pub feature_space: FeatureSpace,
    pub trees: Vec<TreeNode>,
}

/// Train a forest. Classes are the distinct labels in declaration order.
/// Tree `t` draws from its own generator seeded by `(seed, t)`.
pub fn train_forest(
    rows: &[SparseVector],
    labels: &[AccountCategory],
    feature_space: FeatureSpace,
    config: &ForestConfig,
) -> Result<ForestModel, ForestError> {
    if rows.is_empty() {
        return Err(ForestError::EmptyData);
    }
    if rows.len() != labels.len() {
        return Err(ForestError::LabelCountMismatch { rows: rows.len(), labels: labels.len() });
    }
    let v = feature_space.n_features;
    if let Some(r) = rows.iter().find(|r| r.dim() != v) {
        return Err(ForestError::DimensionMismatch { expected: v, got: r.dim() });
    }
    if config.n_trees == 0 {
        return Err(ForestError::InvalidConfig("n_trees must be positive".into()));
    }
    if config.min_leaf == 0 {
        return Err(ForestError::InvalidConfig("min_leaf must be positive".into()));
    }
    let mut classes: Vec<AccountCategory> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let class_idx: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).unwrap()).collect();
    let samples = Samples { rows, labels: &class_idx, n_classes: classes.len() };
    let tree_config = TreeConfig {
        mtry: Some(config.mtry.unwrap_or_else(|| default_mtry(v))),
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
        impurity: config.impurity,
    };
    let n = rows.len();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(config.seed, t as u64));
            let members: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(&samples, &members, v, &tree_config, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForestModel { classes, feature_space, trees })
}

impl ForestModel {
    /// Majority vote over trees; ties go to the earlier class.
    pub fn predict(&self, x: &SparseVector) -> Result<(AccountCategory, Vec<usize>), ForestError> {
        if x.dim() != self.feature_space.n_features {
            return Err(ForestError::DimensionMismatch { expected: self.feature_space.n_features, got: x.dim() });
        }
        let mut votes = vec![0usize; self.classes.len()];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        Ok((self.classes[argmax_first(&votes)], votes))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), ForestError> {
        writeln!(w, "trollkit-forest v1")?;
        let names: Vec<&str> = self.classes.iter().map(|c| c.as_str()).collect();
        writeln!(w, "classes {}", names.join(","))?;
        writeln!(w, "{}", self.feature_space.header_line())?;
        writeln!(w, "trees {}", self.trees.len())?;
        for t in &self.trees {
            writeln!(w, "tree")?;
            write_node(&mut w, t)?;
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, ForestError> {
        let bad = |m: &str| ForestError::Malformed(m.to_string());
        let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
        let mut it = lines.iter().map(String::as_str);
        if it.next() != Some("trollkit-forest v1") {
            return Err(bad("missing header"));
        }
        let classes = parse_classes(it.next().ok_or_else(|| bad("missing classes"))?)
            .ok_or_else(|| bad("bad classes line"))?;
        let feature_space = it
            .next()
            .and_then(FeatureSpace::parse_header_line)
            .ok_or_else(|| bad("bad features line"))?;
        let n_trees: usize = it
            .next()
            .and_then(|l| l.strip_prefix("trees "))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| bad("bad trees line"))?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            if it.next() != Some("tree") {
                return Err(bad("expected `tree`"));
            }
            trees.push(read_node(&mut it, classes.len()).ok_or_else(|| bad("bad node"))?);
        }
        if it.next() != Some("end") {
            return Err(bad("missing end"));
        }
        Ok(Self { classes, feature_space, trees })
    }
}

pub(crate) fn parse_classes(line: &str) -> Option<Vec<AccountCategory>> {
    line.strip_prefix("classes ")?
        .split(',')
        .map(|s| s.parse().ok())
        .collect()
}

fn write_node<W: Write>(w: &mut W, node: &TreeNode) -> std::io::Result<()> {
    match node {
        TreeNode::Internal { feature, threshold, left, right } => {
            writeln!(w, "I {feature} {threshold:?}")?;
            write_node(w, left)?;
            write_node(w, right)
        }
        TreeNode::Leaf { counts, prediction } => {
            let c: Vec<String> = counts.counts().iter().map(u32::to_string).collect();
            writeln!(w, "L {prediction} {}", c.join(" "))
        }
    }
}

fn read_node<'a, I: Iterator<Item = &'a str>>(it: &mut I, n_classes: usize) -> Option<TreeNode> {
    let line = it.next()?;
    let mut parts = line.split(' ');
    match parts.next()? {
        "I" => {
            let feature = parts.next()?.parse().ok()?;
            let threshold: f64 = parts.next()?.parse().ok()?;
            if !threshold.is_finite() {
                return None;
            }
            let left = Box::new(read_node(it, n_classes)?);
            let right = Box::new(read_node(it, n_classes)?);
            Some(TreeNode::Internal { feature, threshold, left, right })
        }
        "L" => {
            let prediction: usize = parts.next()?.parse().ok()?;
            let counts: Vec<u32> = parts.map(|c| c.parse().ok()).collect::<Option<_>>()?;
            (counts.len() == n_classes && prediction < n_classes)
                .then(|| TreeNode::Leaf { counts: NodeClassCounts::new(counts), prediction })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::Weighting;
    use proptest::prelude::*;

    fn dense_rows(rows: &[&[f64]]) -> Vec<SparseVector> {
        rows.iter().map(|r| SparseVector::from_dense(r)).collect()
    }

    fn nc(c: &[u32]) -> NodeClassCounts {
        NodeClassCounts::new(c.to_vec())
    }

    #[test]
    fn impurity_examples() {
        assert_eq!(gini(&nc(&[10, 0])).unwrap(), 0.0);
        assert_eq!(gini(&nc(&[5, 5])).unwrap(), 0.5);
        assert!((gini(&nc(&[1, 1, 1])).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(entropy(&nc(&[5, 5])).unwrap(), 1.0);
        assert_eq!(entropy(&nc(&[10, 0])).unwrap(), 0.0);
        assert!((entropy(&nc(&[3, 1])).unwrap() - 0.811_278_124_459_132_9).abs() < 1e-4);
        assert!(matches!(gini(&nc(&[0, 0])), Err(ForestError::EmptyNode)));
        assert!(matches!(entropy(&nc(&[])), Err(ForestError::EmptyNode)));
    }

    proptest! {
        #[test]
        fn impurity_bounds(counts in prop::collection::vec(0u32..20, 2..6)) {
            let c = nc(&counts);
            prop_assume!(c.total() > 0);
            let k = counts.len() as f64;
            let g = gini(&c).unwrap();
            let e = entropy(&c).unwrap();
            prop_assert!((-1e-12..=1.0 - 1.0 / k + 1e-12).contains(&g));
            prop_assert!((-1e-12..=k.log2() + 1e-12).contains(&e));
            prop_assert_eq!(g.abs() < 1e-12, c.is_pure());
            prop_assert_eq!(e.abs() < 1e-12, c.is_pure());
        }
    }

    #[test]
    fn perfect_single_feature_split() {
        let rows = dense_rows(&[&[0.0], &[1.0]]);
        let s = Samples { rows: &rows, labels: &[0, 1], n_classes: 2 };
        let split = best_split(&s, &[0, 1], &[0], Impurity::Gini, 1).unwrap();
        assert_eq!(split.feature, 0);
        assert_eq!(split.threshold, 0.5);
        assert_eq!(split.impurity_decrease, 0.5);
    }

    #[test]
    fn identical_rows_do_not_split() {
        let rows = dense_rows(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        let s = Samples { rows: &rows, labels: &[0, 1, 0], n_classes: 2 };
        assert!(best_split(&s, &[0, 1, 2], &[0, 1], Impurity::Gini, 1).is_none());
    }

    /// Dense brute force over every feature and every midpoint threshold.
    fn oracle_best(rows: &[Vec<f64>], labels: &[usize], k: usize, imp: Impurity) -> Option<(usize, f64, f64)> {
        let n = rows.len() as f64;
        let measure = |idx: &[usize]| -> f64 {
            if idx.is_empty() {
                return 0.0;
            }
            let mut c = vec![0.0; k];
            for &i in idx {
                c[labels[i]] += 1.0;
            }
            let t = idx.len() as f64;
            match imp {
                Impurity::Gini => c.iter().map(|x| (x / t) * (1.0 - x / t)).sum(),
                Impurity::Entropy => c.iter().filter(|&&x| x > 0.0).map(|x| -(x / t) * (x / t).log2()).sum(),
            }
        };
        let all: Vec<usize> = (0..rows.len()).collect();
        let parent = measure(&all);
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..rows[0].len() {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| rows[i][f] <= t);
                let child = (l.len() as f64 * measure(&l) + r.len() as f64 * measure(&r)) / n;
                let dec = parent - child;
                if dec > 1e-12 && best.is_none_or(|b| dec > b.2 + 1e-12) {
                    best = Some((f, t, dec));
                }
            }
        }
        best
    }

    #[test]
    fn chooses_perfectly_separating_feature() {
        let dense = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 3.0],
            vec![1.0, 2.0],
            vec![2.0, 0.0],
            vec![0.0, 5.0],
        ];
        let labels = [0, 0, 1, 1, 0, 1];
        let rows: Vec<SparseVector> = dense.iter().map(|r| SparseVector::from_dense(r)).collect();
        let s = Samples { rows: &rows, labels: &labels, n_classes: 2 };
        for imp in [Impurity::Gini, Impurity::Entropy] {
            let got = best_split(&s, &[0, 1, 2, 3, 4, 5], &[0, 1], imp, 1).unwrap();
            let want = oracle_best(&dense, &labels, 2, imp).unwrap();
            assert_eq!(got.feature, 1);
            assert_eq!((got.feature, got.threshold), (want.0, want.1));
            assert!((got.impurity_decrease - want.2).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn best_split_matches_brute_force(
            data in prop::collection::vec((prop::collection::vec(0u8..4, 3), 0usize..3), 2..25),
        ) {
            let dense: Vec<Vec<f64>> = data.iter().map(|(r, _)| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let labels: Vec<usize> = data.iter().map(|d| d.1).collect();
            let rows: Vec<SparseVector> = dense.iter().map(|r| SparseVector::from_dense(r)).collect();
            let s = Samples { rows: &rows, labels: &labels, n_classes: 3 };
            let members: Vec<usize> = (0..rows.len()).collect();
            let got = best_split(&s, &members, &[0, 1, 2], Impurity::Gini, 1);
            let want = oracle_best(&dense, &labels, 3, Impurity::Gini);
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(w)) => prop_assert!((g.impurity_decrease - w.2).abs() < 1e-9),
                (g, w) => prop_assert!(false, "got {:?} want {:?}", g, w),
            }
        }
    }

    fn fs(v: usize) -> FeatureSpace {
        FeatureSpace::anonymous(v, Weighting::Counts)
    }

    #[test]
    fn grow_tree_cases() {
        let rows = dense_rows(&[&[0.0, 1.0], &[1.0, 0.0], &[3.0, 0.0]]);
        let mut rng = rng_from_seed(0);
        let s = Samples { rows: &rows, labels: &[1, 1, 1], n_classes: 2 };
        let t = grow_tree(&s, &[0, 1, 2], 2, &TreeConfig::default(), &mut rng).unwrap();
        assert!(matches!(t, TreeNode::Leaf { prediction: 1, .. }));

        let s = Samples { rows: &rows, labels: &[0, 1, 1], n_classes: 2 };
        let t = grow_tree(&s, &[0, 1, 2], 2, &TreeConfig::default(), &mut rng).unwrap();
        let TreeNode::Internal { feature, .. } = t else { panic!("expected split") };
        assert_eq!(feature, 0);

        let capped = TreeConfig { max_depth: Some(0), ..TreeConfig::default() };
        let s = Samples { rows: &rows, labels: &[0, 1, 1], n_classes: 2 };
        let t = grow_tree(&s, &[0, 1, 2], 2, &capped, &mut rng).unwrap();
        assert_eq!(t, TreeNode::Leaf { counts: nc(&[1, 2]), prediction: 1 });

        assert!(matches!(grow_tree(&s, &[], 2, &capped, &mut rng), Err(ForestError::EmptyData)));
    }

    fn leaf_members(node: &TreeNode, s: &Samples<'_>, members: &[usize], out: &mut Vec<Vec<usize>>) {
        match node {
            TreeNode::Leaf { .. } => out.push(members.to_vec()),
            TreeNode::Internal { feature, threshold, left, right } => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    members.iter().partition(|&&i| s.rows[i].get(*feature) <= *threshold);
                leaf_members(left, s, &l, out);
                leaf_members(right, s, &r, out);
            }
        }
    }

    #[test]
    fn unique_rows_with_separable_features_fit_exactly() {
        let rows = dense_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 1.0], &[3.0, 1.0], &[4.0, 2.0]]);
        let labels = [0, 1, 1, 0, 2];
        let s = Samples { rows: &rows, labels: &labels, n_classes: 3 };
        let t = grow_tree(&s, &[0, 1, 2, 3, 4], 2, &TreeConfig::default(), &mut rng_from_seed(0)).unwrap();
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(t.predict(r), l);
        }
    }

    /// Four distinct XOR rows: every single split leaves both children
    /// half-and-half, so the strict-decrease rule keeps the root a leaf.
    #[test]
    fn xor_rows_stay_unsplit() {
        let rows = dense_rows(&[&[0.0, 0.0], &[1.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let labels = [0, 0, 1, 1];
        let s = Samples { rows: &rows, labels: &labels, n_classes: 2 };
        let t = grow_tree(&s, &[0, 1, 2, 3], 2, &TreeConfig::default(), &mut rng_from_seed(0)).unwrap();
        assert_eq!(t.n_leaves(), 1);
    }

    fn check_internal_nodes(node: &TreeNode, s: &Samples<'_>, members: &[usize], imp: Impurity) {
        if let TreeNode::Internal { feature, threshold, left, right } = node {
            let (l, r): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| s.rows[i].get(*feature) <= *threshold);
            let n = members.len() as u32;
            let parent = imp.eval(&s.counts(members), n);
            let child = (l.len() as f64 * imp.eval(&s.counts(&l), l.len() as u32)
                + r.len() as f64 * imp.eval(&s.counts(&r), r.len() as u32))
                / f64::from(n);
            assert!(child < parent);
            check_internal_nodes(left, s, &l, imp);
            check_internal_nodes(right, s, &r, imp);
        }
    }

    proptest! {
        /// A fully grown tree reproduces every training label except at
        /// leaves where no single split lowers impurity (XOR-shaped nodes).
        #[test]
        fn full_tree_fits_unique_rows(
            data in prop::collection::btree_map(prop::collection::vec(0u8..5, 4), 0usize..3, 1..40),
            entropy_split in any::<bool>(),
        ) {
            let dense: Vec<Vec<f64>> = data.keys().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let labels: Vec<usize> = data.values().copied().collect();
            let rows: Vec<SparseVector> = dense.iter().map(|r| SparseVector::from_dense(r)).collect();
            let s = Samples { rows: &rows, labels: &labels, n_classes: 3 };
            let members: Vec<usize> = (0..rows.len()).collect();
            let imp = if entropy_split { Impurity::Entropy } else { Impurity::Gini };
            let cfg = TreeConfig { impurity: imp, ..TreeConfig::default() };
            let t = grow_tree(&s, &members, 4, &cfg, &mut rng_from_seed(1)).unwrap();
            let mut leaves = Vec::new();
            leaf_members(&t, &s, &members, &mut leaves);
            for leaf in leaves {
                if leaf.iter().any(|&i| t.predict(&rows[i]) != labels[i]) {
                    prop_assert!(best_split(&s, &leaf, &[0, 1, 2, 3], imp, 1).is_none());
                }
            }
            check_internal_nodes(&t, &s, &members, imp);
        }

        #[test]
        fn single_tree_ignores_row_order(
            data in prop::collection::vec((prop::collection::vec(0u8..4, 3), 0usize..2), 2..30),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let rows: Vec<SparseVector> = data.iter()
                .map(|(r, _)| SparseVector::from_dense(&r.iter().map(|&v| f64::from(v)).collect::<Vec<_>>()))
                .collect();
            let labels: Vec<AccountCategory> = data.iter().map(|d| [AccountCategory::LeftTroll, AccountCategory::RightTroll][d.1]).collect();
            let cfg = ForestConfig { n_trees: 1, mtry: Some(3), bootstrap: false, ..ForestConfig::default() };
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.shuffle(&mut rng_from_seed(seed));
            let prow: Vec<SparseVector> = order.iter().map(|&i| rows[i].clone()).collect();
            let plab: Vec<AccountCategory> = order.iter().map(|&i| labels[i]).collect();
            let a = train_forest(&rows, &labels, fs(3), &cfg).unwrap();
            let b = train_forest(&prow, &plab, fs(3), &cfg).unwrap();
            prop_assert_eq!(a.trees, b.trees);
        }
    }

    fn noisy_task(seed: u64, n: usize) -> (Vec<SparseVector>, Vec<AccountCategory>) {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..6).map(|_| f64::from(rng.random_range(0u8..4))).collect();
            let label = if x[0] + x[1] > 3.0 { AccountCategory::LeftTroll } else { AccountCategory::RightTroll };
            rows.push(SparseVector::from_dense(&x));
            labels.push(label);
        }
        (rows, labels)
    }

    #[test]
    fn degenerate_forest_matches_tree() {
        let (rows, labels) = noisy_task(3, 60);
        let cfg = ForestConfig { n_trees: 1, mtry: Some(6), bootstrap: false, seed: 11, ..ForestConfig::default() };
        let forest = train_forest(&rows, &labels, fs(6), &cfg).unwrap();
        let idx: Vec<usize> = labels.iter().map(|l| forest.classes.binary_search(l).unwrap()).collect();
        let s = Samples { rows: &rows, labels: &idx, n_classes: forest.classes.len() };
        let members: Vec<usize> = (0..rows.len()).collect();
        let tree = grow_tree(&s, &members, 6, &TreeConfig { mtry: Some(6), ..TreeConfig::default() }, &mut rng_from_seed(0)).unwrap();
        for r in &rows {
            assert_eq!(forest.predict(r).unwrap().0, forest.classes[tree.predict(r)]);
        }
    }

    #[test]
    fn forest_deterministic_and_round_trips() {
        let (rows, labels) = noisy_task(5, 80);
        let cfg = ForestConfig { n_trees: 7, seed: 99, ..ForestConfig::default() };
        let a = train_forest(&rows, &labels, fs(6), &cfg).unwrap();
        let b = train_forest(&rows, &labels, fs(6), &cfg).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write(&mut buf).unwrap();
        let back = ForestModel::read(buf.as_slice()).unwrap();
        assert_eq!(back, a);
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    fn stump(prediction: usize) -> TreeNode {
        let mut c = vec![0, 0];
        c[prediction] = 1;
        TreeNode::Leaf { counts: nc(&c), prediction }
    }

    #[test]
    fn voting() {
        let classes = vec![AccountCategory::LeftTroll, AccountCategory::RightTroll];
        let x = SparseVector::zeros(1);
        let m = ForestModel { classes: classes.clone(), feature_space: fs(1), trees: vec![stump(0), stump(0), stump(1)] };
        assert_eq!(m.predict(&x).unwrap(), (AccountCategory::LeftTroll, vec![2, 1]));
        let m = ForestModel { classes: classes.clone(), feature_space: fs(1), trees: vec![stump(1), stump(0)] };
        assert_eq!(m.predict(&x).unwrap().0, AccountCategory::LeftTroll);
        let m = ForestModel { classes, feature_space: fs(1), trees: vec![stump(1); 4] };
        assert_eq!(m.predict(&x).unwrap().0, AccountCategory::RightTroll);
        assert!(matches!(m.predict(&SparseVector::zeros(2)), Err(ForestError::DimensionMismatch { .. })));
    }

    #[test]
    fn config_errors() {
        let (rows, labels) = noisy_task(1, 10);
        let bad = ForestConfig { mtry: Some(7), ..ForestConfig::default() };
        assert!(matches!(train_forest(&rows, &labels, fs(6), &bad), Err(ForestError::InvalidConfig(_))));
        assert!(matches!(train_forest(&[], &[], fs(6), &ForestConfig::default()), Err(ForestError::EmptyData)));
        assert!(matches!(train_forest(&rows, &labels, fs(5), &ForestConfig::default()), Err(ForestError::DimensionMismatch { .. })));
    }
}

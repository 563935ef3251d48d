//! Entropy decision tree predicting archetype from personal characteristics.

mod evaluate;

pub use evaluate::{
    cross_validate, evaluate, kfold_indices, report_from_labels, run_pipeline, train_test_split, weighted_f1,
    ClassifierRun, CvResult, EvalReport, HyperGrid, Split, DEFAULT_FOLDS, DEFAULT_TEST_FRACTION,
};

use std::fmt::Write as _;

use thiserror::Error;

use crate::profile::{CharacteristicsProfile, PREDICTIVE_DIMENSIONS};
use crate::Archetype;

const GAIN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("row has {got} features, dataset declares {expected}")]
    RaggedRow { expected: usize, got: usize },
    #[error("rows ({rows}) and labels ({labels}) differ in length")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("missing feature '{0}'")]
    MissingFeature(String),
    #[error("tree text line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Labeled feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Archetype>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<Archetype>,
    ) -> Result<Self, ClassifierError> {
        if rows.len() != labels.len() {
            return Err(ClassifierError::LabelMismatch { rows: rows.len(), labels: labels.len() });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != feature_names.len()) {
            return Err(ClassifierError::RaggedRow { expected: feature_names.len(), got: r.len() });
        }
        Ok(Self { feature_names, rows, labels })
    }

    /// The seven predictive dimensions of each profile.
    pub fn from_profiles(profiles: &[CharacteristicsProfile], labels: &[Archetype]) -> Result<Self, ClassifierError> {
        Self::new(
            PREDICTIVE_DIMENSIONS.iter().map(|s| s.to_string()).collect(),
            profiles.iter().map(|p| p.predictive_row()).collect(),
            labels.to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: 6, min_samples_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize, counts: [usize; 3] },
    Leaf { counts: [usize; 3] },
}

impl Node {
    pub fn counts(&self) -> [usize; 3] {
        match self {
            Node::Split { counts, .. } | Node::Leaf { counts } => *counts,
        }
    }
}

/// Majority class; ties go to the lower class index.
pub fn majority(counts: &[usize; 3]) -> Archetype {
    let mut best = 0;
    for c in 1..3 {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    Archetype::ALL[best]
}

/// Shannon entropy in bits of a class histogram.
pub fn entropy(counts: &[usize; 3]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Tree nodes in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub feature_names: Vec<String>,
    pub nodes: Vec<Node>,
}

/// The chosen split at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn histogram(labels: &[Archetype], idx: &[usize]) -> [usize; 3] {
    let mut c = [0; 3];
    for &i in idx {
        c[labels[i].index()] += 1;
    }
    c
}

/// Highest-gain split of `idx` with both sides holding at least
/// `min_samples_leaf` samples. Thresholds are midpoints between consecutive
/// distinct values; ties resolve to the lowest feature, then lowest threshold.
pub fn best_split(data: &Dataset, idx: &[usize], min_samples_leaf: usize) -> Option<SplitChoice> {
    let parent = histogram(&data.labels, idx);
    let parent_h = entropy(&parent);
    let n = idx.len() as f64;
    let min_leaf = min_samples_leaf.max(1);
    let mut best: Option<SplitChoice> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
    for f in 0..data.feature_names.len() {
        sorted.clear();
        sorted.extend(idx.iter().map(|&i| (data.rows[i][f], data.labels[i].index())));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 3];
        for k in 0..sorted.len().saturating_sub(1) {
            left[sorted[k].1] += 1;
            let (lo, hi) = (sorted[k].0, sorted[k + 1].0);
            if lo == hi {
                continue;
            }
            let nl = k + 1;
            let nr = sorted.len() - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1], parent[2] - left[2]];
            let gain = parent_h - (nl as f64 / n) * entropy(&left) - (nr as f64 / n) * entropy(&right);
            if best.is_none_or(|b| gain > b.gain + GAIN_TIE_TOL) {
                best = Some(SplitChoice { feature: f, threshold: 0.5 * (lo + hi), gain });
            }
        }
    }
    best
}

/// Grow a tree by greedy information-gain splitting.
///
/// A node becomes a leaf at `max_depth`, when pure, when it cannot be split
/// into two children of `min_samples_leaf`, or when the best gain is zero.
pub fn train_tree(data: &Dataset, config: &TreeConfig) -> Result<DecisionTree, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let mut tree = DecisionTree { feature_names: data.feature_names.clone(), nodes: Vec::new() };
    let all: Vec<usize> = (0..data.len()).collect();
    grow(data, config, &all, 0, &mut tree.nodes);
    Ok(tree)
}

fn grow(data: &Dataset, config: &TreeConfig, idx: &[usize], depth: usize, nodes: &mut Vec<Node>) -> usize {
    let counts = histogram(&data.labels, idx);
    let id = nodes.len();
    nodes.push(Node::Leaf { counts });
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if depth >= config.max_depth || pure {
        return id;
    }
    let Some(split) = best_split(data, idx, config.min_samples_leaf) else {
        return id;
    };
    if split.gain <= GAIN_TIE_TOL {
        return id;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.rows[i][split.feature] <= split.threshold);
    let left = grow(data, config, &l, depth + 1, nodes);
    let right = grow(data, config, &r, depth + 1, nodes);
    nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right, counts };
    id
}

impl DecisionTree {
    /// A one-leaf tree.
    pub fn leaf(feature_names: Vec<String>, counts: [usize; 3]) -> Self {
        Self { feature_names, nodes: vec![Node::Leaf { counts }] }
    }

    /// Descend from the root; values equal to a threshold go left.
    pub fn predict_row(&self, row: &[f64]) -> Result<Archetype, ClassifierError> {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { counts } => return Ok(majority(counts)),
                Node::Split { feature, threshold, left, right, .. } => {
                    let v = *row
                        .get(*feature)
                        .ok_or_else(|| ClassifierError::MissingFeature(self.feature_names[*feature].clone()))?;
                    id = if v <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Predict from a profile, looking features up by name.
    pub fn predict_profile(&self, profile: &CharacteristicsProfile) -> Result<Archetype, ClassifierError> {
        let row = self
            .feature_names
            .iter()
            .map(|n| profile.get(n).ok_or_else(|| ClassifierError::MissingFeature(n.clone())))
            .collect::<Result<Vec<f64>, _>>()?;
        self.predict_row(&row)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[usize; 3]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(counts),
            Node::Split { .. } => None,
        })
    }

    /// Line-oriented text form:
    ///
    /// ```text
    /// #features masculinity,positive_affect,...
    /// 0 split neuroticism 3.05 1 2
    /// 1 leaf - - 12 3 0
    /// ```
    ///
    /// Leaf lines carry the (BDM, disbeliever, oscillator) training counts.
    pub fn to_text(&self) -> String {
        let mut out = format!("#features {}\n", self.feature_names.join(","));
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Split { feature, threshold, left, right, .. } => {
                    let _ = writeln!(out, "{id} split {} {threshold} {left} {right}", self.feature_names[*feature]);
                }
                Node::Leaf { counts } => {
                    let _ = writeln!(out, "{id} leaf - - {} {} {}", counts[0], counts[1], counts[2]);
                }
            }
        }
        out
    }

    /// Parse [`DecisionTree::to_text`] output. Split-node counts are rebuilt
    /// from the leaves.
    pub fn from_text(text: &str) -> Result<Self, ClassifierError> {
        let err = |line: usize, message: &str| ClassifierError::Parse { line, message: message.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty tree file"))?;
        let names = header.strip_prefix("#features ").ok_or_else(|| err(1, "missing #features header"))?;
        let feature_names: Vec<String> = names.split(',').map(|s| s.trim().to_string()).collect();
        let mut nodes = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 && f.len() != 7 {
                return Err(err(lineno, "expected 6 or 7 fields"));
            }
            let id: usize = f[0].parse().map_err(|_| err(lineno, "bad node id"))?;
            if id != nodes.len() {
                return Err(err(lineno, "node ids must be consecutive from 0"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(lineno, "bad integer"));
            match f[1] {
                "split" if f.len() == 6 => {
                    let feature = feature_names
                        .iter()
                        .position(|n| n == f[2])
                        .ok_or_else(|| ClassifierError::MissingFeature(f[2].to_string()))?;
                    let threshold: f64 = f[3].parse().map_err(|_| err(lineno, "bad threshold"))?;
                    nodes.push(Node::Split { feature, threshold, left: num(f[4])?, right: num(f[5])?, counts: [0; 3] });
                }
                "leaf" if f.len() == 7 => {
                    nodes.push(Node::Leaf { counts: [num(f[4])?, num(f[5])?, num(f[6])?] });
                }
                _ => return Err(err(lineno, "unknown node kind")),
            }
        }
        if nodes.is_empty() {
            return Err(err(1, "tree has no nodes"));
        }
        for (id, n) in nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = n {
                if *left <= id || *right <= id || *left >= nodes.len() || *right >= nodes.len() {
                    return Err(err(id + 2, "child id out of range"));
                }
            }
        }
        fn fill(nodes: &mut [Node], id: usize) -> [usize; 3] {
            match nodes[id].clone() {
                Node::Leaf { counts } => counts,
                Node::Split { left, right, .. } => {
                    let l = fill(nodes, left);
                    let r = fill(nodes, right);
                    let total = [l[0] + r[0], l[1] + r[1], l[2] + r[2]];
                    if let Node::Split { counts, .. } = &mut nodes[id] {
                        *counts = total;
                    }
                    total
                }
            }
        }
        fill(&mut nodes, 0);
        Ok(Self { feature_names, nodes })
    }
}

//! Train/test splitting, k-fold model selection and test-set scoring.

use rand::seq::SliceRandom;

use super::{train_tree, ClassifierError, Dataset, DecisionTree, TreeConfig};
use crate::sampling::rng_for_stream;
use crate::Archetype;

const SPLIT_STREAM: u64 = 0;
const FOLD_STREAM: u64 = 1;
const F1_TIE_TOL: f64 = 1e-12;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; 3]; 3],
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub per_class_recall: [f64; 3],
}

/// Per-class F1 weighted by true-class support. Classes absent from the
/// truth carry zero weight; a class never predicted has precision 0.
pub fn weighted_f1(confusion: &[[usize; 3]; 3]) -> f64 {
    let total: usize = confusion.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for c in 0..3 {
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..3).map(|r| confusion[r][c]).sum();
        let tp = confusion[c][c] as f64;
        if support == 0 || tp == 0.0 {
            continue;
        }
        let precision = tp / predicted as f64;
        let recall = tp / support as f64;
        acc += support as f64 * 2.0 * precision * recall / (precision + recall);
    }
    acc / total as f64
}

fn report_from_confusion(confusion: [[usize; 3]; 3]) -> EvalReport {
    let total: usize = confusion.iter().flatten().sum();
    let trace: usize = (0..3).map(|c| confusion[c][c]).sum();
    let per_class_recall = std::array::from_fn(|c| {
        let support: usize = confusion[c].iter().sum();
        if support == 0 {
            0.0
        } else {
            confusion[c][c] as f64 / support as f64
        }
    });
    EvalReport {
        confusion,
        accuracy: if total == 0 { 0.0 } else { trace as f64 / total as f64 },
        weighted_f1: weighted_f1(&confusion),
        per_class_recall,
    }
}

/// Score paired truth/prediction labels.
pub fn report_from_labels(truth: &[Archetype], predicted: &[Archetype]) -> EvalReport {
    let mut confusion = [[0usize; 3]; 3];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.index()][p.index()] += 1;
    }
    report_from_confusion(confusion)
}

/// Predict every test row and score against its label.
pub fn evaluate(tree: &DecisionTree, test: &Dataset) -> Result<EvalReport, ClassifierError> {
    let predicted = test.rows.iter().map(|r| tree.predict_row(r)).collect::<Result<Vec<_>, _>>()?;
    Ok(report_from_labels(&test.labels, &predicted))
}

/// Sorted train and test row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded random split with `round(test_fraction * n)` test rows. With
/// `stratify`, each class contributes `round(test_fraction * n_class)`.
pub fn train_test_split(labels: &[Archetype], test_fraction: f64, seed: u64, stratify: bool) -> Split {
    let mut rng = rng_for_stream(seed, SPLIT_STREAM);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let groups: Vec<Vec<usize>> = if stratify {
        Archetype::ALL.iter().map(|a| (0..labels.len()).filter(|&i| labels[i] == *a).collect()).collect()
    } else {
        vec![(0..labels.len()).collect()]
    };
    for mut g in groups {
        g.shuffle(&mut rng);
        let n_test = ((test_fraction * g.len() as f64).round() as usize).min(g.len());
        test.extend_from_slice(&g[..n_test]);
        train.extend_from_slice(&g[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Split { train, test }
}

/// Seeded partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let k = k.clamp(1, n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for_stream(seed, FOLD_STREAM));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let size = n / k + usize::from(j < n % k);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    folds
}

/// Depth × min-leaf grid of tree configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub depths: Vec<usize>,
    pub min_leaves: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self { depths: (2..=8).collect(), min_leaves: vec![1, 2, 4, 8] }
    }
}

impl HyperGrid {
    pub fn points(&self) -> Vec<TreeConfig> {
        self.depths
            .iter()
            .flat_map(|&max_depth| {
                self.min_leaves.iter().map(move |&min_samples_leaf| TreeConfig { max_depth, min_samples_leaf })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best: TreeConfig,
    /// Mean validation weighted F1 per grid point, in grid order.
    pub scores: Vec<(TreeConfig, f64)>,
}

/// Select the grid point with the highest mean weighted F1 over seeded
/// 5-fold validation; ties go to smaller depth, then larger min leaf.
pub fn cross_validate(data: &Dataset, grid: &[TreeConfig], seed: u64) -> CvResult {
    assert!(!grid.is_empty(), "hyperparameter grid is empty");
    let folds = kfold_indices(data.len(), DEFAULT_FOLDS, seed);
    let scores: Vec<(TreeConfig, f64)> = grid
        .iter()
        .map(|cfg| {
            if folds.len() < 2 {
                return (*cfg, 0.0);
            }
            let mut total = 0.0;
            for (j, val) in folds.iter().enumerate() {
                let train: Vec<usize> =
                    folds.iter().enumerate().filter(|(i, _)| *i != j).flat_map(|(_, f)| f.iter().copied()).collect();
                let tree = train_tree(&data.subset(&train), cfg).expect("training folds are non-empty");
                let report = evaluate(&tree, &data.subset(val)).expect("rows match the dataset width");
                total += report.weighted_f1;
            }
            (*cfg, total / folds.len() as f64)
        })
        .collect();
    let mut best = scores[0];
    for &(cfg, f1) in &scores[1..] {
        let better = f1 > best.1 + F1_TIE_TOL
            || ((f1 - best.1).abs() <= F1_TIE_TOL
                && (cfg.max_depth, std::cmp::Reverse(cfg.min_samples_leaf))
                    < (best.0.max_depth, std::cmp::Reverse(best.0.min_samples_leaf)));
        if better {
            best = (cfg, f1);
        }
    }
    CvResult { best: best.0, scores }
}

/// Everything the split → CV → train → evaluate chain produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierRun {
    pub split: Split,
    pub cv: CvResult,
    pub tree: DecisionTree,
    pub report: EvalReport,
}

/// 80:20 split, 5-fold CV over `grid` on the training rows, refit of the
/// selected configuration on all training rows, and test-set scoring.
pub fn run_pipeline(
    data: &Dataset,
    grid: &[TreeConfig],
    seed: u64,
    stratify: bool,
) -> Result<ClassifierRun, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let split = train_test_split(&data.labels, DEFAULT_TEST_FRACTION, seed, stratify);
    let train = data.subset(&split.train);
    let cv = cross_validate(&train, grid, seed);
    let tree = train_tree(&train, &cv.best)?;
    let report = evaluate(&tree, &data.subset(&split.test))?;
    Ok(ClassifierRun { split, cv, tree, report })
}

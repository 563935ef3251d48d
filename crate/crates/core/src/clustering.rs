//! Trajectory features, seeded k-means with elbow selection, and archetype
//! labeling of the three-cluster solution.

use rand::Rng;
use thiserror::Error;

use crate::sampling::{derive_seed, rng_from_seed};
use crate::Archetype;

pub const MAX_LLOYD_ITERATIONS: usize = 300;
pub const DEFAULT_K_MAX: usize = 8;
/// Independent k-means++ restarts per k when building a scree curve.
pub const DEFAULT_RESTARTS: usize = 10;
const LABEL_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("reports ({reports}) and predictions ({predictions}) differ in length")]
    LengthMismatch { reports: usize, predictions: usize },
    #[error("need at least k = {k} points, got {points}")]
    TooFewPoints { k: usize, points: usize },
    #[error("labeling needs exactly 3 centroids, got {0}")]
    WrongK(usize),
    #[error("two centroids tie on {0}; labels are ambiguous")]
    AmbiguousLabeling(&'static str),
}

/// The two clustering coordinates of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryFeatures {
    pub avg_log_trust: f64,
    pub rmse: f64,
}

impl TrajectoryFeatures {
    pub fn to_point(self) -> [f64; 2] {
        [self.avg_log_trust, self.rmse]
    }

    pub fn from_point(p: [f64; 2]) -> Self {
        Self { avg_log_trust: p[0], rmse: p[1] }
    }
}

/// Mean log reported trust and the RMSE between reports and predictions.
pub fn compute_features(reports: &[f64], predictions: &[f64]) -> Result<TrajectoryFeatures, ClusterError> {
    if reports.len() != predictions.len() || reports.is_empty() {
        return Err(ClusterError::LengthMismatch { reports: reports.len(), predictions: predictions.len() });
    }
    let n = reports.len() as f64;
    let avg_log_trust = reports.iter().map(|t| t.ln()).sum::<f64>() / n;
    let mse = reports.iter().zip(predictions).map(|(t, p)| (t - p).powi(2)).sum::<f64>() / n;
    Ok(TrajectoryFeatures { avg_log_trust, rmse: mse.sqrt() })
}

/// Per-coordinate z-scoring. A constant coordinate keeps unit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; 2],
    pub sd: [f64; 2],
}

impl Standardizer {
    pub fn fit(points: &[[f64; 2]]) -> Self {
        let n = points.len().max(1) as f64;
        let mut mean = [0.0; 2];
        let mut sd = [0.0; 2];
        for d in 0..2 {
            mean[d] = points.iter().map(|p| p[d]).sum::<f64>() / n;
            let var = points.iter().map(|p| (p[d] - mean[d]).powi(2)).sum::<f64>() / n;
            sd[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, sd }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [(p[0] - self.mean[0]) / self.sd[0], (p[1] - self.mean[1]) / self.sd[1]]
    }

    pub fn invert(&self, z: [f64; 2]) -> [f64; 2] {
        [z[0] * self.sd[0] + self.mean[0], z[1] * self.sd[1] + self.mean[1]]
    }
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: &[f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Sum of squared distances of points to their assigned centroid.
pub fn wcss(points: &[[f64; 2]], centroids: &[[f64; 2]], assignments: &[usize]) -> f64 {
    points.iter().zip(assignments).map(|(p, &a)| sq_dist(p, &centroids[a])).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub k: usize,
    /// Centroids in the space the points were given in.
    pub centroids: Vec<[f64; 2]>,
    pub wcss: f64,
    pub iterations_run: usize,
    pub seed: u64,
    /// WCSS after each Lloyd iteration.
    pub wcss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub model: KMeansModel,
    pub assignments: Vec<usize>,
}

fn kmeans_plus_plus<R: Rng + ?Sized>(points: &[[f64; 2]], k: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
    }
    centroids
}

/// Lloyd's algorithm from a k-means++ start drawn with `seed`.
///
/// Runs until assignments stop changing or 300 iterations. A cluster that
/// loses every point is reseeded with the point farthest from its centroid.
pub fn kmeans_points(points: &[[f64; 2]], k: usize, seed: u64) -> Result<KMeansFit, ClusterError> {
    if k == 0 || points.len() < k {
        return Err(ClusterError::TooFewPoints { k, points: points.len() });
    }
    let mut rng = rng_from_seed(seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        // Update step.
        let mut sums = vec![[0.0; 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = points
                    .iter()
                    .zip(&assignments)
                    .enumerate()
                    .filter(|(_, (_, &a))| counts[a] > 1)
                    .max_by(|x, y| {
                        let dx = sq_dist(x.1 .0, &centroids[*x.1 .1]);
                        let dy = sq_dist(y.1 .0, &centroids[*y.1 .1]);
                        dx.total_cmp(&dy).then(y.0.cmp(&x.0))
                    })
                    .map(|(i, _)| i);
                if let Some(i) = far {
                    counts[assignments[i]] -= 1;
                    assignments[i] = j;
                    counts[j] = 1;
                    centroids[j] = points[i];
                }
            }
        }
        history.push(wcss(points, &centroids, &assignments));
        iterations += 1;

        // Assignment step; keep the current cluster on exact ties.
        let mut changed = false;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (j, d) = nearest(p, &centroids);
            if j != *a && d < sq_dist(p, &centroids[*a]) {
                *a = j;
                changed = true;
            }
        }
        if !changed || iterations >= MAX_LLOYD_ITERATIONS {
            break;
        }
    }
    let total = wcss(points, &centroids, &assignments);
    Ok(KMeansFit {
        model: KMeansModel { k, centroids, wcss: total, iterations_run: iterations, seed, wcss_history: history },
        assignments,
    })
}

/// k-means on standardized trajectory features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureClustering {
    pub standardizer: Standardizer,
    pub fit: KMeansFit,
}

impl FeatureClustering {
    /// Centroids mapped back to raw feature units.
    pub fn raw_centroids(&self) -> Vec<TrajectoryFeatures> {
        self.fit.model.centroids.iter().map(|c| TrajectoryFeatures::from_point(self.standardizer.invert(*c))).collect()
    }

    /// Distance from point `i` to its centroid, in standardized units.
    pub fn centroid_distance(&self, features: &TrajectoryFeatures) -> f64 {
        let z = self.standardizer.apply(features.to_point());
        let (_, d) = nearest(&z, &self.fit.model.centroids);
        d.sqrt()
    }
}

/// Standardize features, then run [`kmeans_points`].
pub fn kmeans(features: &[TrajectoryFeatures], k: usize, seed: u64) -> Result<FeatureClustering, ClusterError> {
    let raw: Vec<[f64; 2]> = features.iter().map(|f| f.to_point()).collect();
    let standardizer = Standardizer::fit(&raw);
    let z: Vec<[f64; 2]> = raw.iter().map(|p| standardizer.apply(*p)).collect();
    Ok(FeatureClustering { standardizer, fit: kmeans_points(&z, k, seed)? })
}

/// Best of `restarts` seeded runs (lowest WCSS; earliest restart on ties).
pub fn kmeans_best_of(
    features: &[TrajectoryFeatures],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<FeatureClustering, ClusterError> {
    let mut best: Option<FeatureClustering> = None;
    for r in 0..restarts.max(1) {
        let run = kmeans(features, k, derive_seed(seed, r as u64))?;
        if best.as_ref().is_none_or(|b| run.fit.model.wcss < b.fit.model.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// WCSS for `k = 1..=k_max` (capped at the number of points), each the best
/// of `restarts` runs. A value that rises above its predecessor is re-run
/// with fresh seeds until the curve is non-increasing or the retry budget
/// runs out.
pub fn scree(
    features: &[TrajectoryFeatures],
    k_max: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<f64>, ClusterError> {
    let k_max = k_max.min(features.len());
    let mut out: Vec<f64> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let k_seed = derive_seed(seed, k as u64);
        let mut w = kmeans_best_of(features, k, k_seed, restarts)?.fit.model.wcss;
        let mut attempt = 1;
        while out.last().is_some_and(|prev| w > *prev) && attempt <= 20 {
            let retry = kmeans_best_of(features, k, derive_seed(k_seed, 1000 + attempt), restarts)?.fit.model.wcss;
            w = w.min(retry);
            attempt += 1;
        }
        out.push(w);
    }
    Ok(out)
}

/// Elbow of a WCSS curve indexed from `k = 1`: the interior `k` farthest
/// from the chord joining the first and last points, smallest `k` on ties.
///
/// Curves with fewer than three points return their length.
pub fn elbow_select(wcss_by_k: &[f64]) -> usize {
    let n = wcss_by_k.len();
    if n < 3 {
        return n;
    }
    debug_assert!(wcss_by_k.windows(2).all(|w| w[1] <= w[0] + 1e-9), "wcss must be non-increasing");
    let (x1, y1) = (1.0, wcss_by_k[0]);
    let (x2, y2) = (n as f64, wcss_by_k[n - 1]);
    let norm = ((y2 - y1).powi(2) + (x2 - x1).powi(2)).sqrt();
    let scale = wcss_by_k.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut best_k = 2;
    let mut best_d = f64::NEG_INFINITY;
    for (i, &y) in wcss_by_k.iter().enumerate().take(n - 1).skip(1) {
        let x = (i + 1) as f64;
        let d = ((y2 - y1) * x - (x2 - x1) * y + x2 * y1 - y2 * x1).abs() / norm;
        if d > best_d + 1e-12 * scale {
            best_d = d;
            best_k = i + 1;
        }
    }
    best_k
}

/// Archetype for each of three centroids: largest RMSE is the oscillator;
/// of the other two, lower average log trust is the disbeliever.
pub fn label_clusters(centroids: &[TrajectoryFeatures]) -> Result<Vec<Archetype>, ClusterError> {
    if centroids.len() != 3 {
        return Err(ClusterError::WrongK(centroids.len()));
    }
    let mut by_rmse: Vec<usize> = (0..3).collect();
    by_rmse.sort_by(|&a, &b| centroids[b].rmse.total_cmp(&centroids[a].rmse));
    if (centroids[by_rmse[0]].rmse - centroids[by_rmse[1]].rmse).abs() <= LABEL_TIE_TOL {
        return Err(ClusterError::AmbiguousLabeling("rmse"));
    }
    let osc = by_rmse[0];
    let (a, b) = (by_rmse[1], by_rmse[2]);
    if (centroids[a].avg_log_trust - centroids[b].avg_log_trust).abs() <= LABEL_TIE_TOL {
        return Err(ClusterError::AmbiguousLabeling("avg_log_trust"));
    }
    let (dis, bdm) = if centroids[a].avg_log_trust < centroids[b].avg_log_trust { (a, b) } else { (b, a) };
    let mut labels = vec![Archetype::Bdm; 3];
    labels[osc] = Archetype::Oscillator;
    labels[dis] = Archetype::Disbeliever;
    labels[bdm] = Archetype::Bdm;
    Ok(labels)
}

/// One agent's cluster membership.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub agent_id: String,
    pub label: Archetype,
    pub features: TrajectoryFeatures,
    pub centroid_distance: f64,
}

/// Three-cluster labeling of one group of agents.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClustering {
    pub clustering: FeatureClustering,
    pub assignments: Vec<ClusterAssignment>,
}

/// Cluster `features` into three groups and name each by [`label_clusters`].
pub fn cluster_and_label(
    agent_ids: &[String],
    features: &[TrajectoryFeatures],
    seed: u64,
    restarts: usize,
) -> Result<LabeledClustering, ClusterError> {
    let clustering = kmeans_best_of(features, 3, seed, restarts)?;
    let labels = label_clusters(&clustering.raw_centroids())?;
    let assignments = agent_ids
        .iter()
        .zip(features)
        .zip(&clustering.fit.assignments)
        .map(|((id, f), &a)| ClusterAssignment {
            agent_id: id.clone(),
            label: labels[a],
            features: *f,
            centroid_distance: clustering.centroid_distance(f),
        })
        .collect();
    Ok(LabeledClustering { clustering, assignments })
}

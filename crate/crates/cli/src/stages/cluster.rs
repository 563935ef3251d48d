use std::collections::HashMap;
use std::path::PathBuf;

use trustdyn_core::clustering::{cluster_and_label, compute_features, elbow_select, scree, TrajectoryFeatures};
use trustdyn_core::io::{
    group_predictions, read_params, read_predictions, write_clusters, write_scree, ClusterRow, ClusteringMode, ScreeRow,
};
use trustdyn_core::sampling::derive_seed;
use trustdyn_core::scenario::ReliabilityLevel;

use super::{table_err, Pipeline, CLUSTERS, PARAMS, PREDICTIONS, SCREE};
use crate::error::StageError;

const STAGE: &str = "cluster";
pub const POOLED_SCOPE: &str = "pooled";
const UNMATCHED_SCOPE: &str = "unmatched";

struct Group {
    scope: String,
    members: Vec<usize>,
}

/// Agents grouped by reliability level in level order; agents whose
/// outcome mix matches no level form a trailing group.
fn level_groups(levels: &[Option<ReliabilityLevel>]) -> Vec<Group> {
    let mut groups: Vec<Group> = ReliabilityLevel::ALL
        .iter()
        .map(|l| Group {
            scope: l.to_string(),
            members: (0..levels.len()).filter(|&i| levels[i] == Some(*l)).collect(),
        })
        .collect();
    groups.push(Group {
        scope: UNMATCHED_SCOPE.into(),
        members: (0..levels.len()).filter(|&i| levels[i].is_none()).collect(),
    });
    groups.retain(|g| !g.members.is_empty());
    groups
}

/// Features from `predictions.csv`, scree curves and three-cluster labels.
pub fn cluster(p: &Pipeline) -> Result<Vec<PathBuf>, StageError> {
    let predictions = read_predictions(p.open(STAGE, PREDICTIONS)?).map_err(table_err(STAGE, PREDICTIONS))?;
    let params = read_params(p.open(STAGE, PARAMS)?).map_err(table_err(STAGE, PARAMS))?;
    let level_of: HashMap<&str, Option<ReliabilityLevel>> =
        params.iter().map(|r| (r.agent_id.as_str(), r.level)).collect();

    let agents = group_predictions(predictions);
    let mut ids = Vec::with_capacity(agents.len());
    let mut features = Vec::with_capacity(agents.len());
    let mut levels = Vec::with_capacity(agents.len());
    for (id, rows) in &agents {
        let reports: Vec<f64> = rows.iter().map(|r| r.reported_trust).collect();
        let predicted: Vec<f64> = rows.iter().map(|r| r.predicted_trust).collect();
        features
            .push(compute_features(&reports, &predicted).map_err(|e| StageError::data(STAGE, format!("{id}: {e}")))?);
        let level =
            level_of.get(id.as_str()).ok_or_else(|| StageError::data(STAGE, format!("{id} missing from {PARAMS}")))?;
        levels.push(*level);
        ids.push(id.clone());
    }

    let cfg = &p.config;
    let seed = p.cluster_seed();
    let mut scree_rows = Vec::new();
    let mut push_scree = |scope: &str, feats: &[TrajectoryFeatures], scope_seed: u64| -> Result<(), StageError> {
        let curve = scree(feats, cfg.k_max, scope_seed, cfg.kmeans_restarts).map_err(|e| StageError::data(STAGE, e))?;
        p.log(format!("scope {scope}: elbow at k = {}", elbow_select(&curve)));
        scree_rows.extend(curve.iter().enumerate().map(|(i, w)| ScreeRow {
            scope: scope.to_string(),
            k: i + 1,
            wcss: *w,
        }));
        Ok(())
    };
    push_scree(POOLED_SCOPE, &features, derive_seed(seed, 0))?;

    let groups = match cfg.clustering_mode {
        ClusteringMode::Pooled => vec![Group { scope: POOLED_SCOPE.into(), members: (0..ids.len()).collect() }],
        ClusteringMode::PerLevel => level_groups(&levels),
    };
    let mut rows: Vec<Option<ClusterRow>> = vec![None; ids.len()];
    for (g_idx, g) in groups.iter().enumerate() {
        let g_ids: Vec<String> = g.members.iter().map(|&i| ids[i].clone()).collect();
        let g_feats: Vec<TrajectoryFeatures> = g.members.iter().map(|&i| features[i]).collect();
        let g_seed = derive_seed(seed, 1 + g_idx as u64);
        if cfg.clustering_mode == ClusteringMode::PerLevel {
            push_scree(&g.scope, &g_feats, derive_seed(g_seed, 1))?;
        }
        let labeled = cluster_and_label(&g_ids, &g_feats, g_seed, cfg.kmeans_restarts)
            .map_err(|e| StageError::data(STAGE, format!("scope {}: {e}", g.scope)))?;
        for (&i, a) in g.members.iter().zip(labeled.assignments) {
            rows[i] = Some(ClusterRow {
                agent_id: a.agent_id,
                label: a.label,
                features: a.features,
                centroid_distance: a.centroid_distance,
            });
        }
    }
    let rows: Vec<ClusterRow> = rows.into_iter().map(|r| r.expect("every agent is in one group")).collect();

    let mut out = p.staged(STAGE)?;
    let err = |e: String| StageError::data(STAGE, e);
    out.write(CLUSTERS, |w| write_clusters(w, &rows)).map_err(err)?;
    out.write(SCREE, |w| write_scree(w, &scree_rows)).map_err(err)?;
    out.commit().map_err(err)
}

use std::collections::HashMap;
use std::path::PathBuf;

use trustdyn_core::analysis::fmt_stat;
use trustdyn_core::classifier::{run_pipeline, ClassifierRun, Dataset};
use trustdyn_core::io::{read_clusters, read_profiles, write_key_values};
use trustdyn_core::Archetype;

use super::{table_err, Pipeline, CLUSTERS, EVAL, PROFILES, TREE};
use crate::error::StageError;

const STAGE: &str = "classify";

/// `metric,value` rows describing a classifier run.
pub fn eval_rows(run: &ClassifierRun) -> Vec<(String, String)> {
    let r = &run.report;
    let mut rows = vec![
        ("n_train".to_string(), run.split.train.len().to_string()),
        ("n_test".to_string(), run.split.test.len().to_string()),
        ("best_max_depth".to_string(), run.cv.best.max_depth.to_string()),
        ("best_min_samples_leaf".to_string(), run.cv.best.min_samples_leaf.to_string()),
        ("accuracy".to_string(), fmt_stat(Some(r.accuracy))),
        ("weighted_f1".to_string(), fmt_stat(Some(r.weighted_f1))),
    ];
    for a in Archetype::ALL {
        rows.push((format!("recall_{a}"), fmt_stat(Some(r.per_class_recall[a.index()]))));
    }
    for t in Archetype::ALL {
        for q in Archetype::ALL {
            rows.push((format!("confusion_{t}_{q}"), r.confusion[t.index()][q.index()].to_string()));
        }
    }
    for (cfg, f1) in &run.cv.scores {
        rows.push((format!("cv_f1_depth{}_leaf{}", cfg.max_depth, cfg.min_samples_leaf), fmt_stat(Some(*f1))));
    }
    rows
}

/// Predict cluster labels from profiles: split, cross-validate, train, test.
pub fn classify(p: &Pipeline) -> Result<Vec<PathBuf>, StageError> {
    let profiles = read_profiles(p.open(STAGE, PROFILES)?).map_err(table_err(STAGE, PROFILES))?;
    let clusters = read_clusters(p.open(STAGE, CLUSTERS)?).map_err(table_err(STAGE, CLUSTERS))?;
    let label_of: HashMap<&str, Archetype> = clusters.iter().map(|c| (c.agent_id.as_str(), c.label)).collect();
    let mut rows = Vec::with_capacity(profiles.len());
    let mut labels = Vec::with_capacity(profiles.len());
    for (id, profile) in &profiles {
        let label = label_of
            .get(id.as_str())
            .ok_or_else(|| StageError::data(STAGE, format!("{id} missing from {CLUSTERS}")))?;
        rows.push(profile.clone());
        labels.push(*label);
    }
    let data = Dataset::from_profiles(&rows, &labels).map_err(|e| StageError::data(STAGE, e))?;
    let cfg = &p.config;
    let run = run_pipeline(&data, &cfg.grid.points(), p.classify_seed(), cfg.stratify_split)
        .map_err(|e| StageError::data(STAGE, e))?;
    p.log(format!(
        "depth {} / min leaf {}: test accuracy {:.3}, weighted F1 {:.3}",
        run.cv.best.max_depth, run.cv.best.min_samples_leaf, run.report.accuracy, run.report.weighted_f1
    ));

    let mut out = p.staged(STAGE)?;
    let err = |e: String| StageError::data(STAGE, e);
    let text = run.tree.to_text();
    out.write(TREE, |w| std::io::Write::write_all(w, text.as_bytes())).map_err(err)?;
    out.write(EVAL, |w| write_key_values(w, &eval_rows(&run))).map_err(err)?;
    out.commit().map_err(err)
}

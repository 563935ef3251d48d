use std::collections::HashMap;
use std::path::PathBuf;

use trustdyn_core::analysis::{
    analyze_measures, chi_squared_independence, fmt_stat, report_header, report_record, MISSING,
};
use trustdyn_core::io::{
    ingest_trajectories_from, read_clusters, read_params, read_profiles, write_csv, write_key_values, IngestedAgent,
};
use trustdyn_core::profile::DIMENSIONS;
use trustdyn_core::scenario::{Behavior, ReliabilityLevel};
use trustdyn_core::Archetype;

use super::{table_err, Pipeline, ANALYSIS_REPORT, CHI_SQUARED, CLUSTERS, CONTINGENCY, PARAMS, PROFILES, TRAJECTORIES};
use crate::error::StageError;

const STAGE: &str = "analyze";

/// `(blind_follow_ratio, tracking_total, detection_total, total_score)`, or
/// `None` when the behavior or score columns are absent.
fn behavior_measures(agent: &IngestedAgent) -> Option<[f64; 4]> {
    let mut blind = 0usize;
    let mut tracking = 0.0;
    let mut detection = 0.0;
    for r in &agent.rows {
        blind += usize::from(r.behavior? == Behavior::BlindFollow);
        tracking += f64::from(r.tracking_score?);
        detection += r.detection_score?;
    }
    Some([blind as f64 / agent.rows.len() as f64, tracking, detection, tracking + detection])
}

const BEHAVIOR_MEASURES: [&str; 4] =
    ["blind_follow_ratio", "tracking_score_total", "detection_score_total", "total_score"];

/// Cluster comparisons for every profile dimension and behavior measure,
/// plus the cluster-by-level contingency test.
pub fn analyze(p: &Pipeline) -> Result<Vec<PathBuf>, StageError> {
    let clusters = read_clusters(p.open(STAGE, CLUSTERS)?).map_err(table_err(STAGE, CLUSTERS))?;
    let profiles = read_profiles(p.open(STAGE, PROFILES)?).map_err(table_err(STAGE, PROFILES))?;
    let params = read_params(p.open(STAGE, PARAMS)?).map_err(table_err(STAGE, PARAMS))?;
    let trajectories =
        ingest_trajectories_from(p.open(STAGE, TRAJECTORIES)?).map_err(table_err(STAGE, TRAJECTORIES))?;

    let profile_of: HashMap<&str, _> = profiles.iter().map(|(id, pr)| (id.as_str(), pr)).collect();
    let level_of: HashMap<&str, Option<ReliabilityLevel>> =
        params.iter().map(|r| (r.agent_id.as_str(), r.level)).collect();
    let agent_of: HashMap<&str, &IngestedAgent> =
        trajectories.agents.iter().map(|a| (a.trajectory.agent_id.as_str(), a)).collect();
    let missing = |id: &str, file: &str| StageError::data(STAGE, format!("{id} missing from {file}"));

    let labels: Vec<Archetype> = clusters.iter().map(|c| c.label).collect();
    let mut measures: Vec<(String, Vec<f64>)> =
        DIMENSIONS.iter().map(|d| (d.name.to_string(), Vec::with_capacity(clusters.len()))).collect();
    let mut behavior: Option<Vec<[f64; 4]>> = Some(Vec::with_capacity(clusters.len()));
    let mut table = vec![vec![0u64; ReliabilityLevel::ALL.len()]; 3];
    for c in &clusters {
        let id = c.agent_id.as_str();
        let profile = profile_of.get(id).ok_or_else(|| missing(id, PROFILES))?;
        for (m, v) in measures.iter_mut().zip(profile.values) {
            m.1.push(v);
        }
        let agent = agent_of.get(id).ok_or_else(|| missing(id, TRAJECTORIES))?;
        behavior = behavior.and_then(|mut b| {
            b.push(behavior_measures(agent)?);
            Some(b)
        });
        let level = level_of.get(id).ok_or_else(|| missing(id, PARAMS))?;
        if let Some(l) = level {
            let col = ReliabilityLevel::ALL.iter().position(|x| x == l).expect("known level");
            table[c.label.index()][col] += 1;
        }
    }
    if let Some(b) = &behavior {
        for (j, name) in BEHAVIOR_MEASURES.iter().enumerate() {
            measures.push((name.to_string(), b.iter().map(|v| v[j]).collect()));
        }
    }
    let rows = analyze_measures(&measures, &labels).map_err(|e| StageError::data(STAGE, e))?;

    // Only levels that occur enter the contingency table.
    let present: Vec<usize> = (0..ReliabilityLevel::ALL.len()).filter(|&j| table.iter().any(|r| r[j] > 0)).collect();
    let reduced: Vec<Vec<u64>> = table.iter().map(|r| present.iter().map(|&j| r[j]).collect()).collect();
    let chi = match chi_squared_independence(&reduced) {
        Ok(c) => vec![
            ("chi2".to_string(), fmt_stat(Some(c.chi2))),
            ("df".to_string(), c.df.to_string()),
            ("p_value".to_string(), fmt_stat(Some(c.p_value))),
        ],
        Err(e) => {
            p.log(format!("chi-squared skipped: {e}"));
            ["chi2", "df", "p_value"].iter().map(|k| (k.to_string(), MISSING.to_string())).collect()
        }
    };

    let mut out = p.staged(STAGE)?;
    let err = |e: String| StageError::data(STAGE, e);
    out.write(ANALYSIS_REPORT, |w| write_csv(w, &report_header(), rows.iter().map(report_record))).map_err(err)?;
    let mut header = vec!["label".to_string()];
    header.extend(present.iter().map(|&j| ReliabilityLevel::ALL[j].to_string()));
    let contingency = Archetype::ALL.iter().map(|a| {
        let mut r = vec![a.to_string()];
        r.extend(present.iter().map(|&j| table[a.index()][j].to_string()));
        r
    });
    out.write(CONTINGENCY, |w| write_csv(w, &header, contingency)).map_err(err)?;
    out.write(CHI_SQUARED, |w| write_key_values(w, &chi)).map_err(err)?;
    out.commit().map_err(err)
}

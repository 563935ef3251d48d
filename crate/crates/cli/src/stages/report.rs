use std::collections::HashMap;
use std::path::{Path, PathBuf};

use trustdyn_core::io::{group_predictions, ingest_trajectories_from, read_predictions, write_report_tsv, ReportRow};

use super::{open_input, table_err, Pipeline, PREDICTIONS, REPORT_DIR, TRAJECTORIES};
use crate::error::StageError;

const STAGE: &str = "report";

/// Agent id made safe for use as a file name.
fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

/// Per-agent `report/<agent_id>.tsv`: trial, reported trust, model trust
/// under the final parameters, and detector success. `agent` restricts the
/// output to one agent; `input` names the trajectories that were fitted
/// (default: the simulated `trajectories.csv`).
pub fn report(p: &Pipeline, agent: Option<&str>, input: Option<&Path>) -> Result<Vec<PathBuf>, StageError> {
    let predictions = read_predictions(p.open(STAGE, PREDICTIONS)?).map_err(table_err(STAGE, PREDICTIONS))?;
    let path = input.map_or_else(|| p.path(TRAJECTORIES), Path::to_path_buf);
    let trajectories = ingest_trajectories_from(open_input(STAGE, &path)?).map_err(table_err(STAGE, TRAJECTORIES))?;
    let outcomes: HashMap<&str, HashMap<usize, bool>> = trajectories
        .agents
        .iter()
        .map(|a| {
            let by_trial = a.rows.iter().map(|r| (r.trial, r.outcome_class.detector_outcome().is_success())).collect();
            (a.trajectory.agent_id.as_str(), by_trial)
        })
        .collect();

    let mut groups = group_predictions(predictions);
    if let Some(id) = agent {
        groups.retain(|(a, _)| a == id);
        if groups.is_empty() {
            return Err(StageError::data(STAGE, format!("unknown agent {id}")));
        }
    }
    let mut out = p.staged(STAGE)?;
    for (id, rows) in &groups {
        let by_trial = outcomes
            .get(id.as_str())
            .ok_or_else(|| StageError::data(STAGE, format!("{id} missing from {TRAJECTORIES}")))?;
        let lines = rows
            .iter()
            .map(|r| {
                let success = *by_trial.get(&r.trial).ok_or_else(|| {
                    StageError::data(STAGE, format!("{id} trial {} missing from {TRAJECTORIES}", r.trial))
                })?;
                Ok(ReportRow {
                    trial: r.trial,
                    reported_trust: r.reported_trust,
                    predicted_trust: r.predicted_trust,
                    success,
                })
            })
            .collect::<Result<Vec<_>, StageError>>()?;
        out.write(&format!("{REPORT_DIR}/{}.tsv", file_stem(id)), |w| write_report_tsv(w, &lines))
            .map_err(|e| StageError::data(STAGE, e))?;
    }
    out.commit().map_err(|e| StageError::data(STAGE, e))
}

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use trustdyn_core::estimation::{best_effort, fit_mle, fit_prior, map_replay, FitResult, MapReplay};
use trustdyn_core::io::{
    ingest_trajectories_from, write_params, write_predictions, FitSummary, IngestedAgent, ParamsRow, PredictionRow,
    ValidationNote,
};
use trustdyn_core::trust::predicted_means;
use trustdyn_core::OptimizerConfig;

use super::{open_input, table_err, Pipeline, PARAMS, PREDICTIONS, TRAJECTORIES};
use crate::error::StageError;

const STAGE: &str = "fit";

/// Maximum-likelihood and personalized fits of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentFit {
    pub mle: FitResult,
    pub replay: MapReplay,
}

/// Fit every agent: MLE first, then a MAP replay under a prior estimated from
/// the other agents' non-degenerate MLE fits.
pub fn fit_agents(agents: &[IngestedAgent], config: &OptimizerConfig) -> Result<Vec<AgentFit>, StageError> {
    let mle: Vec<FitResult> = agents
        .par_iter()
        .map(|a| best_effort(fit_mle(&a.trajectory, config)))
        .collect::<Result<_, _>>()
        .map_err(|e| StageError::numerical(STAGE, e))?;
    if let Some((a, _)) = agents.iter().zip(&mle).find(|(_, f)| !f.objective_value.is_finite()) {
        return Err(StageError::numerical(STAGE, format!("non-finite likelihood for {}", a.trajectory.agent_id)));
    }
    let eligible: Vec<usize> = (0..mle.len()).filter(|&i| mle[i].degenerate.is_none()).collect();
    agents
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let others: Vec<_> = eligible.iter().filter(|&&j| j != i).map(|&j| mle[j].params).collect();
            let prior = fit_prior(&others).map_err(|e| StageError::numerical(STAGE, e))?;
            let replay = map_replay(&a.trajectory, &prior, config)
                .map_err(|e| StageError::numerical(STAGE, format!("{}: {e}", a.trajectory.agent_id)))?;
            Ok(AgentFit { mle: mle[i].clone(), replay })
        })
        .collect()
}

/// Fit the trajectories in `input` (default: the simulated `trajectories.csv`)
/// and write `params.csv` and `predictions.csv`.
pub fn fit(p: &Pipeline, input: Option<&Path>) -> Result<Vec<PathBuf>, StageError> {
    let path = input.map_or_else(|| p.path(TRAJECTORIES), Path::to_path_buf);
    let ingested = ingest_trajectories_from(open_input(STAGE, &path)?).map_err(table_err(STAGE, TRAJECTORIES))?;
    for note in &ingested.notes {
        match note {
            ValidationNote::Clamped { agent_id, trial, original, stored } => {
                p.log(format!("note: {agent_id} trial {trial}: report {original} clamped to {stored}"))
            }
            ValidationNote::TrialCount { agent_id, count } => p.log(format!("note: {agent_id} has {count} trials")),
        }
    }
    let agents = &ingested.agents;
    p.log(format!("fitting {} agents", agents.len()));
    let fits = fit_agents(agents, &OptimizerConfig::default())?;

    let mut params = Vec::with_capacity(agents.len());
    let mut predictions = Vec::new();
    for (a, f) in agents.iter().zip(&fits) {
        let id = &a.trajectory.agent_id;
        params.push(ParamsRow {
            agent_id: id.clone(),
            level: a.level(),
            mle: FitSummary::from(&f.mle),
            map: FitSummary::from(&f.replay.final_fit),
        });
        let means = predicted_means(&f.replay.final_fit.params, a.trajectory.outcomes());
        for (i, row) in a.rows.iter().enumerate() {
            predictions.push(PredictionRow {
                agent_id: id.clone(),
                trial: row.trial,
                reported_trust: a.trajectory.reports()[i],
                predicted_trust: means[i],
                online_predicted_trust: f.replay.online_predictions[i],
            });
        }
    }
    let unconverged = fits.iter().filter(|f| !f.mle.converged || !f.replay.final_fit.converged).count();
    if unconverged > 0 {
        p.log(format!("warning: {unconverged} agents hit the iteration budget"));
    }

    let mut out = p.staged(STAGE)?;
    let err = |e: String| StageError::data(STAGE, e);
    out.write(PARAMS, |w| write_params(w, &params)).map_err(err)?;
    out.write(PREDICTIONS, |w| write_predictions(w, &predictions)).map_err(err)?;
    out.commit().map_err(err)
}

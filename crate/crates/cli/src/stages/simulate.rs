use std::path::PathBuf;

use trustdyn_core::io::{
    fmt6, schedule_rows, trial_rows, write_csv, write_profiles, write_schedule, write_trajectories,
};
use trustdyn_core::scenario::generate_cohort;

use super::{Pipeline, PROFILES, SCHEDULE, TRAJECTORIES, TRUTH};
use crate::error::StageError;

const STAGE: &str = "simulate";

/// Generate the synthetic cohort and write its trajectories, profiles,
/// schedules and generating ground truth.
pub fn simulate(p: &Pipeline) -> Result<Vec<PathBuf>, StageError> {
    let cohort = generate_cohort(&p.config.cohort, p.config.seed);
    p.log(format!("simulated {} agents", cohort.len()));
    let mut out = p.staged(STAGE)?;
    let err = |e: String| StageError::data(STAGE, e);

    let trials: Vec<_> = cohort.iter().flat_map(trial_rows).collect();
    out.write(TRAJECTORIES, |w| write_trajectories(w, &trials)).map_err(err)?;

    let profiles: Vec<_> = cohort.iter().map(|a| (a.agent_id.clone(), a.profile.clone())).collect();
    out.write(PROFILES, |w| write_profiles(w, &profiles)).map_err(err)?;

    let schedule: Vec<_> = cohort.iter().flat_map(schedule_rows).collect();
    out.write(SCHEDULE, |w| write_schedule(w, &schedule)).map_err(err)?;

    let header: Vec<String> = ["agent_id", "archetype", "level", "alpha0", "beta0", "gain_success", "gain_failure"]
        .map(String::from)
        .to_vec();
    let truth = cohort.iter().map(|a| {
        let mut r = vec![a.agent_id.clone(), a.archetype.to_string(), a.level.to_string()];
        r.extend(a.generating_params.to_array().iter().map(|v| fmt6(*v)));
        r
    });
    out.write(TRUTH, |w| write_csv(w, &header, truth)).map_err(err)?;

    out.commit().map_err(err)
}

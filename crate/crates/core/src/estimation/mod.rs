//! Per-agent parameter fitting.
//!
//! Old agents are fit by maximum likelihood over their full report history.
//! Their fitted parameters form a log-normal cohort prior, and a new agent is
//! personalized by maximizing likelihood times prior over the reports seen so
//! far. All searches run in log-parameter space inside fixed bounds.

mod simplex;

use std::f64::consts::PI;

use thiserror::Error;

use crate::trust::{beta_log_density_unchecked, predict, update_state, DetectorOutcome, TrustParams, TrustTrajectory};
use simplex::{minimize, SimplexSettings};

/// Lower bounds of `[α₀, β₀, wˢ, wᶠ]`.
pub const PARAM_LOWER: [f64; 4] = [1e-2, 1e-2, 1e-3, 1e-3];
/// Upper bounds of `[α₀, β₀, wˢ, wᶠ]`.
pub const PARAM_UPPER: [f64; 4] = [1e4, 1e4, 1e2, 1e2];
/// Floor applied to every cohort log-sd.
pub const PRIOR_SD_FLOOR: f64 = 1e-3;

const LATTICE_SHAPE: [f64; 3] = [2.0, 20.0, 200.0];
const LATTICE_GAIN: [f64; 3] = [0.05, 0.5, 5.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("trajectory has no reports")]
    EmptyTrajectory,
    #[error("{reports} reports need at least as many outcomes, got {outcomes}")]
    LengthMismatch { reports: usize, outcomes: usize },
    #[error("no start converged within the iteration budget")]
    NonConvergence(Box<FitResult>),
    #[error("cohort prior needs at least 2 members, got {0}")]
    InsufficientCohort(usize),
}

/// Which gain could not be identified from a one-sided outcome history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// No failures observed: the failure gain is unidentified.
    AllSuccess,
    /// No successes observed: the success gain is unidentified.
    AllFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: TrustParams,
    /// Log-likelihood for MLE fits, log-posterior (up to a constant) for MAP fits.
    pub objective_value: f64,
    /// Log-likelihood part of the objective.
    pub log_likelihood: f64,
    pub n_restarts_used: usize,
    pub converged: bool,
    pub degenerate: Option<Degeneracy>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the objective spread across the simplex.
    pub tolerance: f64,
    /// Number of best-scoring start points refined by the simplex search.
    pub refine_top: usize,
    /// Initial simplex edge in log-parameter units.
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iterations: 2000, tolerance: 1e-6, refine_top: 6, initial_step: 0.5 }
    }
}

/// Log-normal prior over the four parameters, estimated from a cohort of
/// previously fit agents.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortPrior {
    pub log_mean: [f64; 4],
    pub log_sd: [f64; 4],
    pub cohort_size: usize,
}

impl CohortPrior {
    /// Build directly from log-space moments; sds are floored.
    pub fn new(log_mean: [f64; 4], log_sd: [f64; 4], cohort_size: usize) -> Self {
        Self { log_mean, log_sd: log_sd.map(|s| s.max(PRIOR_SD_FLOOR)), cohort_size }
    }

    /// `exp(log_mean)` per parameter.
    pub fn mode(&self) -> TrustParams {
        TrustParams::from_array(self.log_mean.map(f64::exp))
    }

    /// Sum of independent Gaussian log-densities of `ln θ`.
    pub fn log_density_at_log(&self, x: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for j in 0..4 {
            let z = (x[j] - self.log_mean[j]) / self.log_sd[j];
            acc += -0.5 * z * z - self.log_sd[j].ln() - 0.5 * (2.0 * PI).ln();
        }
        acc
    }

    pub fn log_density(&self, params: &TrustParams) -> f64 {
        self.log_density_at_log(&params.to_array().map(f64::ln))
    }
}

/// Per-parameter mean and population sd of `ln θ` across the cohort.
pub fn fit_prior(cohort: &[TrustParams]) -> Result<CohortPrior, FitError> {
    if cohort.len() < 2 {
        return Err(FitError::InsufficientCohort(cohort.len()));
    }
    let n = cohort.len() as f64;
    let mut mean = [0.0; 4];
    let mut sd = [0.0; 4];
    for j in 0..4 {
        let logs: Vec<f64> = cohort.iter().map(|p| p.to_array()[j].ln()).collect();
        let m = logs.iter().sum::<f64>() / n;
        let var = logs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        mean[j] = m;
        sd[j] = var.sqrt();
    }
    Ok(CohortPrior::new(mean, sd, cohort.len()))
}

/// Prior from every cohort member except `exclude`.
pub fn fit_prior_excluding(cohort: &[TrustParams], exclude: usize) -> Result<CohortPrior, FitError> {
    let rest: Vec<TrustParams> = cohort.iter().enumerate().filter(|(i, _)| *i != exclude).map(|(_, p)| *p).collect();
    fit_prior(&rest)
}

/// `Σ log Beta(t_i; α_i, β_i)` where the state after outcome `i` scores report `i`.
///
/// Only the first `reports.len()` outcomes enter.
pub fn log_likelihood(params: &TrustParams, reports: &[f64], outcomes: &[DetectorOutcome]) -> f64 {
    let mut state = params.initial_state();
    let mut acc = 0.0;
    for (&t, &o) in reports.iter().zip(outcomes) {
        state = update_state(state, o, params);
        acc += beta_log_density_unchecked(t, state.alpha, state.beta);
    }
    acc
}

fn degeneracy(outcomes: &[DetectorOutcome]) -> Option<Degeneracy> {
    let successes = outcomes.iter().filter(|o| o.is_success()).count();
    if successes == outcomes.len() {
        Some(Degeneracy::AllSuccess)
    } else if successes == 0 {
        Some(Degeneracy::AllFailure)
    } else {
        None
    }
}

/// Fixed 3⁴ lattice of start points in parameter space.
pub fn start_lattice() -> Vec<TrustParams> {
    let mut out = Vec::with_capacity(81);
    for &a in &LATTICE_SHAPE {
        for &b in &LATTICE_SHAPE {
            for &s in &LATTICE_GAIN {
                for &f in &LATTICE_GAIN {
                    out.push(TrustParams::from_array([a, b, s, f]));
                }
            }
        }
    }
    out
}

/// Where the multi-start search begins.
#[derive(Debug, Clone, PartialEq)]
pub enum Starts {
    /// The 3⁴ lattice, plus the prior mode for MAP fits.
    Lattice,
    /// The given points, plus the prior mode for MAP fits.
    Warm(Vec<TrustParams>),
}

struct Problem<'a> {
    reports: &'a [f64],
    outcomes: &'a [DetectorOutcome],
    prior: Option<&'a CohortPrior>,
    /// Parameter index held at its lower bound, if any.
    pinned: Option<usize>,
}

impl Problem<'_> {
    fn full_log(&self, free: &[f64]) -> [f64; 4] {
        let mut x = [0.0; 4];
        let mut k = 0;
        for (j, slot) in x.iter_mut().enumerate() {
            if Some(j) == self.pinned {
                *slot = PARAM_LOWER[j].ln();
            } else {
                *slot = free[k];
                k += 1;
            }
        }
        x
    }

    fn free_log(&self, params: &TrustParams) -> Vec<f64> {
        params
            .to_array()
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != self.pinned)
            .map(|(j, v)| v.clamp(PARAM_LOWER[j], PARAM_UPPER[j]).ln())
            .collect()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let keep = |j: &usize| Some(*j) != self.pinned;
        (
            (0..4).filter(keep).map(|j| PARAM_LOWER[j].ln()).collect(),
            (0..4).filter(keep).map(|j| PARAM_UPPER[j].ln()).collect(),
        )
    }

    fn params_at(&self, x: &[f64; 4]) -> TrustParams {
        let mut v = x.map(f64::exp);
        if let Some(j) = self.pinned {
            v[j] = PARAM_LOWER[j];
        }
        TrustParams::from_array(v)
    }

    /// (objective, log-likelihood) at a log-space point.
    fn evaluate(&self, x: &[f64; 4]) -> (f64, f64) {
        let params = self.params_at(x);
        let ll = log_likelihood(&params, self.reports, self.outcomes);
        let obj = match self.prior {
            Some(prior) => ll + prior.log_density_at_log(x),
            None => ll,
        };
        (obj, ll)
    }
}

fn run_search(problem: &Problem<'_>, starts: &Starts, config: &OptimizerConfig) -> Result<FitResult, FitError> {
    let mut seeds: Vec<TrustParams> = match starts {
        Starts::Lattice => start_lattice(),
        Starts::Warm(points) => points.clone(),
    };
    if let Some(prior) = problem.prior {
        seeds.push(prior.mode());
    }

    let mut scored: Vec<(f64, Vec<f64>)> = seeds
        .iter()
        .map(|p| {
            let free = problem.free_log(p);
            let (obj, _) = problem.evaluate(&problem.full_log(&free));
            (if obj.is_nan() { f64::NEG_INFINITY } else { obj }, free)
        })
        .collect();
    // Stable sort: equal scores keep seed order.
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (lower, upper) = problem.bounds();
    let settings = SimplexSettings {
        step: config.initial_step,
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
        max_restarts: 3,
    };
    let refine = config.refine_top.max(1).min(scored.len());
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut any_converged = false;
    for (_, free) in scored.iter().take(refine) {
        let out = minimize(|z: &[f64]| -problem.evaluate(&problem.full_log(z)).0, free, &lower, &upper, &settings);
        any_converged |= out.converged;
        let value = -out.f;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, out.x));
        }
    }
    let (_, free) = best.expect("at least one start is refined");
    let x = problem.full_log(&free);
    let (objective_value, log_likelihood) = problem.evaluate(&x);
    let result = FitResult {
        params: problem.params_at(&x),
        objective_value,
        log_likelihood,
        n_restarts_used: refine,
        converged: any_converged,
        degenerate: degeneracy(&problem.outcomes[..problem.reports.len().min(problem.outcomes.len())]),
    };
    if any_converged {
        Ok(result)
    } else {
        Err(FitError::NonConvergence(Box::new(result)))
    }
}

/// Maximum-likelihood fit over a full trajectory.
///
/// A one-sided outcome history cannot identify the missing gain; that gain is
/// held at its lower bound and the result is flagged via
/// [`FitResult::degenerate`].
pub fn fit_mle(trajectory: &TrustTrajectory, config: &OptimizerConfig) -> Result<FitResult, FitError> {
    fit_mle_from(trajectory, &Starts::Lattice, config)
}

pub fn fit_mle_from(
    trajectory: &TrustTrajectory,
    starts: &Starts,
    config: &OptimizerConfig,
) -> Result<FitResult, FitError> {
    if trajectory.is_empty() {
        return Err(FitError::EmptyTrajectory);
    }
    let pinned = match degeneracy(trajectory.outcomes()) {
        Some(Degeneracy::AllSuccess) => Some(3),
        Some(Degeneracy::AllFailure) => Some(2),
        None => None,
    };
    let problem = Problem { reports: trajectory.reports(), outcomes: trajectory.outcomes(), prior: None, pinned };
    run_search(&problem, starts, config)
}

/// Maximum a posteriori fit from the first `reports.len()` reports and the
/// outcomes observed so far.
///
/// With no reports the posterior is the prior and its mode is returned. The
/// prior identifies every parameter, so nothing is pinned; one-sided histories
/// are still flagged.
pub fn fit_map(
    reports: &[f64],
    outcomes: &[DetectorOutcome],
    prior: &CohortPrior,
    starts: &Starts,
    config: &OptimizerConfig,
) -> Result<FitResult, FitError> {
    if outcomes.len() < reports.len() {
        return Err(FitError::LengthMismatch { reports: reports.len(), outcomes: outcomes.len() });
    }
    let problem = Problem { reports, outcomes, prior: Some(prior), pinned: None };
    let mut result = run_search(&problem, starts, config)?;
    if reports.is_empty() {
        result.degenerate = None;
    }
    Ok(result)
}

/// Unwrap a [`FitError::NonConvergence`] into its best point, which carries
/// `converged == false`; other errors pass through.
pub fn best_effort(result: Result<FitResult, FitError>) -> Result<FitResult, FitError> {
    match result {
        Err(FitError::NonConvergence(best)) => Ok(*best),
        other => other,
    }
}

/// Trial-by-trial personalization of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct MapReplay {
    /// `online_predictions[m−1]` predicts report `m` from the fit on reports
    /// `1..m−1` and outcomes `1..m`.
    pub online_predictions: Vec<f64>,
    /// Fit on every report.
    pub final_fit: FitResult,
}

/// Replay MAP personalization over `m = 1..n`, warm-starting each step from
/// the previous estimate, then fit on the complete trajectory. Steps that
/// exhaust the iteration budget keep their best point; check
/// `final_fit.converged`.
pub fn map_replay(
    trajectory: &TrustTrajectory,
    prior: &CohortPrior,
    config: &OptimizerConfig,
) -> Result<MapReplay, FitError> {
    let reports = trajectory.reports();
    let outcomes = trajectory.outcomes();
    let n = trajectory.len();
    let mut online = Vec::with_capacity(n);
    let mut current = prior.mode();
    for m in 1..=n {
        let fit = best_effort(fit_map(&reports[..m - 1], &outcomes[..m], prior, &Starts::Warm(vec![current]), config))?;
        current = fit.params;
        let mut state = current.initial_state();
        for &o in &outcomes[..m] {
            state = update_state(state, o, &current);
        }
        online.push(predict(&state));
    }
    let mut starts = crate::estimation::start_lattice();
    starts.push(current);
    let final_fit = best_effort(fit_map(reports, outcomes, prior, &Starts::Warm(starts), config))?;
    Ok(MapReplay { online_predictions: online, final_fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trust::predicted_means;
    use DetectorOutcome::{Failure, Success};

    fn alternating(n: usize) -> Vec<DetectorOutcome> {
        (0..n).map(|i| if i % 2 == 0 { Success } else { Failure }).collect()
    }

    #[test]
    fn prior_two_identical_members_hits_floor() {
        let p = TrustParams::from_array([3.0, 4.0, 0.5, 0.7]);
        let prior = fit_prior(&[p, p]).unwrap();
        assert_eq!(prior.log_sd, [PRIOR_SD_FLOOR; 4]);
        assert_eq!(prior.cohort_size, 2);
    }

    #[test]
    fn prior_two_point_statistics() {
        let e2 = 1f64.exp().powi(2);
        let prior = fit_prior(&[TrustParams::from_array([1.0; 4]), TrustParams::from_array([e2; 4])]).unwrap();
        for j in 0..4 {
            assert!((prior.log_mean[j] - 1.0).abs() < 1e-12);
            assert!((prior.log_sd[j] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prior_needs_two_members() {
        assert_eq!(fit_prior(&[TrustParams::from_array([1.0; 4])]), Err(FitError::InsufficientCohort(1)));
    }

    #[test]
    fn lattice_has_81_points() {
        assert_eq!(start_lattice().len(), 81);
    }

    #[test]
    fn constant_half_reports_fit_near_half() {
        let t = TrustTrajectory::new("c", vec![0.5; 100], alternating(100)).unwrap();
        let fit = fit_mle(&t, &OptimizerConfig::default()).unwrap();
        let s = crate::trust::state_after(&fit.params, 50, 50);
        assert!((predict(&s) - 0.5).abs() <= 0.05);
        assert!(fit.degenerate.is_none());
    }

    #[test]
    fn length_one_trajectory_is_degenerate() {
        let t = TrustTrajectory::new("one", vec![0.7], vec![Success]).unwrap();
        let fit = fit_mle(&t, &OptimizerConfig::default()).unwrap();
        assert_eq!(fit.degenerate, Some(Degeneracy::AllSuccess));
        assert_eq!(fit.params.gain_failure, PARAM_LOWER[3]);
    }

    #[test]
    fn all_failure_pins_success_gain() {
        let t = TrustTrajectory::new("f", vec![0.4, 0.3, 0.25], vec![Failure; 3]).unwrap();
        let fit = fit_mle(&t, &OptimizerConfig::default()).unwrap();
        assert_eq!(fit.degenerate, Some(Degeneracy::AllFailure));
        assert_eq!(fit.params.gain_success, PARAM_LOWER[2]);
    }

    #[test]
    fn empty_trajectory_rejected() {
        let t = TrustTrajectory::new("e", vec![], vec![]).unwrap();
        assert_eq!(fit_mle(&t, &OptimizerConfig::default()), Err(FitError::EmptyTrajectory));
    }

    #[test]
    fn map_without_reports_returns_prior_mode() {
        let prior = CohortPrior::new([3.0, 2.5, -0.5, 0.2], [0.8, 0.6, 1.0, 0.9], 10);
        let fit = fit_map(&[], &[Success], &prior, &Starts::Lattice, &OptimizerConfig::default()).unwrap();
        let mode = prior.mode().to_array();
        for (got, want) in fit.params.to_array().iter().zip(mode) {
            assert!((got / want - 1.0).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn map_rejects_missing_outcomes() {
        let prior = CohortPrior::new([0.0; 4], [1.0; 4], 2);
        let err = fit_map(&[0.5, 0.5], &[Success], &prior, &Starts::Lattice, &OptimizerConfig::default());
        assert!(matches!(err, Err(FitError::LengthMismatch { .. })));
    }

    #[test]
    fn tight_prior_dominates_short_history() {
        let truth = TrustParams::from_array([20.0, 10.0, 1.0, 1.0]);
        let outcomes = alternating(6);
        let reports: Vec<f64> = predicted_means(&TrustParams::from_array([2.0, 8.0, 0.3, 2.0]), &outcomes);
        let prior = CohortPrior::new(truth.to_array().map(f64::ln), [0.01; 4], 50);
        let fit = fit_map(&reports[..5], &outcomes, &prior, &Starts::Lattice, &OptimizerConfig::default()).unwrap();
        for (got, want) in fit.params.to_array().iter().zip(truth.to_array()) {
            assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let outcomes = alternating(40);
        let reports = predicted_means(&TrustParams::from_array([5.0, 4.0, 0.3, 0.4]), &outcomes);
        let t = TrustTrajectory::new("d", reports, outcomes).unwrap();
        let a = fit_mle(&t, &OptimizerConfig::default()).unwrap();
        let b = fit_mle(&t, &OptimizerConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}

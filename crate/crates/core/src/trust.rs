//! Beta-distribution trust model.
//!
//! Trust after task `i` is `t_i ~ Beta(α_i, β_i)`. A detector success adds the
//! success gain to `α`, a failure adds the failure gain to `β`, and the
//! predicted trust is the Beta mean `α / (α + β)`.

use rand::Rng;
use thiserror::Error;

use crate::sampling::sample_beta;
use crate::special::ln_beta;

/// Reports are clamped into `[REPORT_EPS, 1 − REPORT_EPS]` before any log is taken.
pub const REPORT_EPS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrustError {
    #[error("invalid trust parameters: {0}")]
    InvalidParams(&'static str),
    #[error("beta density domain error: t = {t}, alpha = {alpha}, beta = {beta}")]
    Domain { t: f64, alpha: f64, beta: f64 },
    #[error("reports ({reports}) and outcomes ({outcomes}) differ in length")]
    LengthMismatch { reports: usize, outcomes: usize },
}

/// The parameter set `{α₀, β₀, wˢ, wᶠ}` of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustParams {
    pub alpha0: f64,
    pub beta0: f64,
    pub gain_success: f64,
    pub gain_failure: f64,
}

impl TrustParams {
    pub fn new(alpha0: f64, beta0: f64, gain_success: f64, gain_failure: f64) -> Result<Self, TrustError> {
        let p = Self { alpha0, beta0, gain_success, gain_failure };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TrustError> {
        let all = self.to_array();
        if all.iter().any(|v| !v.is_finite()) {
            return Err(TrustError::InvalidParams("all fields must be finite"));
        }
        if self.alpha0 <= 0.0 || self.beta0 <= 0.0 {
            return Err(TrustError::InvalidParams("alpha0 and beta0 must be positive"));
        }
        if self.gain_success < 0.0 || self.gain_failure < 0.0 {
            return Err(TrustError::InvalidParams("gains must be non-negative"));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.alpha0, self.beta0, self.gain_success, self.gain_failure]
    }

    /// Build from `[α₀, β₀, wˢ, wᶠ]` without validation.
    pub fn from_array(v: [f64; 4]) -> Self {
        Self { alpha0: v[0], beta0: v[1], gain_success: v[2], gain_failure: v[3] }
    }

    /// Multiply every field by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * c))
    }

    pub fn initial_state(&self) -> TrustState {
        TrustState { alpha: self.alpha0, beta: self.beta0, trial_index: 0 }
    }
}

/// Beta shape parameters after `trial_index` updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustState {
    pub alpha: f64,
    pub beta: f64,
    pub trial_index: usize,
}

/// Whether the detector's recommendation matched ground truth on a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorOutcome {
    /// Hit or correct rejection.
    Success,
    /// Miss or false alarm.
    Failure,
}

impl DetectorOutcome {
    pub fn is_success(self) -> bool {
        matches!(self, DetectorOutcome::Success)
    }
}

/// One agent's reported trust values paired with the detector outcomes that
/// preceded each report.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustTrajectory {
    pub agent_id: String,
    reports: Vec<f64>,
    outcomes: Vec<DetectorOutcome>,
}

impl TrustTrajectory {
    /// Reports are clamped into `[REPORT_EPS, 1 − REPORT_EPS]`.
    pub fn new(
        agent_id: impl Into<String>,
        reports: Vec<f64>,
        outcomes: Vec<DetectorOutcome>,
    ) -> Result<Self, TrustError> {
        if reports.len() != outcomes.len() {
            return Err(TrustError::LengthMismatch { reports: reports.len(), outcomes: outcomes.len() });
        }
        Ok(Self { agent_id: agent_id.into(), reports: reports.into_iter().map(clamp_report).collect(), outcomes })
    }

    pub fn reports(&self) -> &[f64] {
        &self.reports
    }

    pub fn outcomes(&self) -> &[DetectorOutcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn success_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_success()).count()
    }
}

/// Clamp a raw report into the open unit interval. NaN maps to 0.5.
pub fn clamp_report(t: f64) -> f64 {
    if t.is_nan() {
        return 0.5;
    }
    t.clamp(REPORT_EPS, 1.0 - REPORT_EPS)
}

/// Apply one detector outcome.
pub fn update_state(state: TrustState, outcome: DetectorOutcome, params: &TrustParams) -> TrustState {
    match outcome {
        DetectorOutcome::Success => TrustState {
            alpha: state.alpha + params.gain_success,
            beta: state.beta,
            trial_index: state.trial_index + 1,
        },
        DetectorOutcome::Failure => TrustState {
            alpha: state.alpha,
            beta: state.beta + params.gain_failure,
            trial_index: state.trial_index + 1,
        },
    }
}

/// Expected trust `α / (α + β)`.
pub fn predict(state: &TrustState) -> f64 {
    state.alpha / (state.alpha + state.beta)
}

/// Closed-form state after `n_success` successes and `n_failure` failures.
pub fn state_after(params: &TrustParams, n_success: usize, n_failure: usize) -> TrustState {
    TrustState {
        alpha: params.alpha0 + n_success as f64 * params.gain_success,
        beta: params.beta0 + n_failure as f64 * params.gain_failure,
        trial_index: n_success + n_failure,
    }
}

/// States after each outcome in turn (`α_1..α_n`, `β_1..β_n`).
pub fn state_path(params: &TrustParams, outcomes: &[DetectorOutcome]) -> Vec<TrustState> {
    let mut state = params.initial_state();
    outcomes
        .iter()
        .map(|&o| {
            state = update_state(state, o, params);
            state
        })
        .collect()
}

/// Predicted trust after each outcome.
pub fn predicted_means(params: &TrustParams, outcomes: &[DetectorOutcome]) -> Vec<f64> {
    state_path(params, outcomes).iter().map(predict).collect()
}

/// Log of the Beta(α, β) density at `t`.
pub fn beta_log_density(t: f64, alpha: f64, beta: f64) -> Result<f64, TrustError> {
    if !(t > 0.0 && t < 1.0) || !(alpha > 0.0) || !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(TrustError::Domain { t, alpha, beta });
    }
    Ok(beta_log_density_unchecked(t, alpha, beta))
}

#[inline]
pub(crate) fn beta_log_density_unchecked(t: f64, alpha: f64, beta: f64) -> f64 {
    (alpha - 1.0) * t.ln() + (beta - 1.0) * (1.0 - t).ln() - ln_beta(alpha, beta)
}

/// Draw a reported trust value from `Beta(α, β)`.
pub fn sample_trust<R: Rng + ?Sized>(state: &TrustState, rng: &mut R) -> f64 {
    sample_beta(state.alpha, state.beta, rng)
}

//! Synthetic dual-task experiment: signal-detection trial schedules, the
//! tracking and detection scores, and archetype operators whose reported
//! trust is drawn from the Beta trust model.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::profile::{CharacteristicsProfile, ProfileSampler};
use crate::sampling::{derive_seed, rng_for_stream, standard_normal, uniform};
use crate::special::normal_cdf;
use crate::trust::{sample_trust, update_state, DetectorOutcome, TrustParams, TrustTrajectory};
use crate::Archetype;

pub const TRIALS_PER_SESSION: usize = 100;
/// Tracking error samples per trial (20 Hz for 10 s).
pub const TRACKING_SAMPLES: usize = 200;
pub const TRIAL_DURATION_MS: f64 = 10_000.0;
pub const MAX_DETECTION_SCORE: f64 = 5.0;
pub const MAX_TRACKING_SCORE: u8 = 10;
pub const DEFAULT_E_MAX: f64 = 250.0;

/// Reference parameter sets `[α₀, β₀, wˢ, wᶠ]` per archetype.
pub const ARCHETYPE_PARAMS: [[f64; 4]; 3] =
    [[231.93, 128.35, 2.21, 1.88], [71.78, 335.22, 0.43, 6.48], [3.83, 3.47, 0.04, 0.07]];

/// Reference cohort-mean `(average log trust, RMSE)` per archetype.
pub const ARCHETYPE_FEATURES: [(f64, f64); 3] = [(-0.554, 0.057), (-2.099, 0.064), (-0.970, 0.243)];

/// Reference blind-following rate per archetype.
pub const BLIND_FOLLOW_RATES: [f64; 3] = [0.42, 0.18, 0.40];

/// Reference cohort sizes (BDM, disbeliever, oscillator).
pub const DEFAULT_COHORT_SIZES: [usize; 3] = [91, 25, 14];

pub fn archetype_params(archetype: Archetype) -> TrustParams {
    TrustParams::from_array(ARCHETYPE_PARAMS[archetype.index()])
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("expected {expected} tracking samples, got {got}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("unknown reliability level '{0}'")]
    UnknownLevel(String),
    #[error("unknown outcome class '{0}'")]
    UnknownOutcomeClass(String),
    #[error("unknown behavior '{0}'")]
    UnknownBehavior(String),
}

/// Detector reliability condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReliabilityLevel {
    P62,
    P64,
    P66,
    P68,
    P70,
}

impl ReliabilityLevel {
    pub const ALL: [ReliabilityLevel; 5] = [Self::P62, Self::P64, Self::P66, Self::P68, Self::P70];

    pub fn percent(self) -> u32 {
        match self {
            Self::P62 => 62,
            Self::P64 => 64,
            Self::P66 => 66,
            Self::P68 => 68,
            Self::P70 => 70,
        }
    }

    pub fn from_percent(percent: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.percent() == percent)
    }

    /// `(hits, misses, false alarms, correct rejections)` over 100 trials.
    pub fn counts(self) -> OutcomeCounts {
        let (hits, misses, false_alarms, correct_rejections) = match self {
            Self::P62 => (8, 2, 36, 54),
            Self::P64 => (16, 4, 32, 48),
            Self::P66 => (24, 6, 28, 42),
            Self::P68 => (32, 8, 24, 36),
            Self::P70 => (40, 10, 20, 30),
        };
        OutcomeCounts { hits, misses, false_alarms, correct_rejections }
    }

    /// Level whose outcome composition matches `counts`, if any.
    pub fn from_counts(counts: OutcomeCounts) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.counts() == counts)
    }
}

impl fmt::Display for ReliabilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.percent())
    }
}

impl FromStr for ReliabilityLevel {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_end_matches('%');
        t.parse::<u32>().ok().and_then(Self::from_percent).ok_or_else(|| ScenarioError::UnknownLevel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeCounts {
    pub hits: u32,
    pub misses: u32,
    pub false_alarms: u32,
    pub correct_rejections: u32,
}

impl OutcomeCounts {
    pub fn total(&self) -> u32 {
        self.hits + self.misses + self.false_alarms + self.correct_rejections
    }

    pub fn of(classes: impl IntoIterator<Item = OutcomeClass>) -> Self {
        let mut c = Self::default();
        for class in classes {
            match class {
                OutcomeClass::Hit => c.hits += 1,
                OutcomeClass::Miss => c.misses += 1,
                OutcomeClass::FalseAlarm => c.false_alarms += 1,
                OutcomeClass::CorrectRejection => c.correct_rejections += 1,
            }
        }
        c
    }
}

/// Signal-detection configuration of the automated detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdtConfig {
    pub criterion_c: f64,
    pub sensitivity_dprime: f64,
    pub n_signal: u32,
    pub n_total: u32,
}

impl SdtConfig {
    pub const CRITERION: f64 = -0.20;
    pub const DPRIME: f64 = 1.09;

    pub fn hit_rate(&self) -> f64 {
        normal_cdf(self.sensitivity_dprime / 2.0 - self.criterion_c)
    }

    pub fn false_alarm_rate(&self) -> f64 {
        normal_cdf(-self.sensitivity_dprime / 2.0 - self.criterion_c)
    }
}

/// Outcome counts implied by an SDT configuration, rounded to integers.
pub fn sdt_counts(config: &SdtConfig) -> OutcomeCounts {
    let n_noise = config.n_total.saturating_sub(config.n_signal);
    let hits = (config.hit_rate() * config.n_signal as f64).round() as u32;
    let false_alarms = (config.false_alarm_rate() * n_noise as f64).round() as u32;
    OutcomeCounts { hits, misses: config.n_signal - hits, false_alarms, correct_rejections: n_noise - false_alarms }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruth {
    Threat,
    NoThreat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alert {
    Danger,
    Clear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeClass {
    Hit,
    Miss,
    FalseAlarm,
    CorrectRejection,
}

impl OutcomeClass {
    pub fn ground_truth(self) -> GroundTruth {
        match self {
            Self::Hit | Self::Miss => GroundTruth::Threat,
            Self::FalseAlarm | Self::CorrectRejection => GroundTruth::NoThreat,
        }
    }

    pub fn alert(self) -> Alert {
        match self {
            Self::Hit | Self::FalseAlarm => Alert::Danger,
            Self::Miss | Self::CorrectRejection => Alert::Clear,
        }
    }

    pub fn from_parts(truth: GroundTruth, alert: Alert) -> Self {
        match (truth, alert) {
            (GroundTruth::Threat, Alert::Danger) => Self::Hit,
            (GroundTruth::Threat, Alert::Clear) => Self::Miss,
            (GroundTruth::NoThreat, Alert::Danger) => Self::FalseAlarm,
            (GroundTruth::NoThreat, Alert::Clear) => Self::CorrectRejection,
        }
    }

    pub fn detector_outcome(self) -> DetectorOutcome {
        match self {
            Self::Hit | Self::CorrectRejection => DetectorOutcome::Success,
            Self::Miss | Self::FalseAlarm => DetectorOutcome::Failure,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hit => "hit",
            Self::Miss => "miss",
            Self::FalseAlarm => "fa",
            Self::CorrectRejection => "cr",
        }
    }
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutcomeClass {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hit" => Ok(Self::Hit),
            "miss" => Ok(Self::Miss),
            "fa" | "false_alarm" => Ok(Self::FalseAlarm),
            "cr" | "correct_rejection" => Ok(Self::CorrectRejection),
            _ => Err(ScenarioError::UnknownOutcomeClass(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSpec {
    /// 1-based trial number.
    pub index: usize,
    pub outcome_class: OutcomeClass,
}

impl TrialSpec {
    pub fn ground_truth(&self) -> GroundTruth {
        self.outcome_class.ground_truth()
    }

    pub fn alert(&self) -> Alert {
        self.outcome_class.alert()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSchedule {
    pub level: ReliabilityLevel,
    pub trials: Vec<TrialSpec>,
}

impl TrialSchedule {
    pub fn counts(&self) -> OutcomeCounts {
        OutcomeCounts::of(self.trials.iter().map(|t| t.outcome_class))
    }

    pub fn outcomes(&self) -> Vec<DetectorOutcome> {
        self.trials.iter().map(|t| t.outcome_class.detector_outcome()).collect()
    }
}

/// The level's exact outcome multiset in a seeded uniformly shuffled order.
pub fn generate_schedule(level: ReliabilityLevel, seed: u64) -> TrialSchedule {
    let mut rng = rng_for_stream(seed, 0);
    schedule_with(level, &mut rng)
}

fn schedule_with<R: Rng + ?Sized>(level: ReliabilityLevel, rng: &mut R) -> TrialSchedule {
    let c = level.counts();
    let mut classes = Vec::with_capacity(c.total() as usize);
    classes.extend(std::iter::repeat_n(OutcomeClass::Hit, c.hits as usize));
    classes.extend(std::iter::repeat_n(OutcomeClass::Miss, c.misses as usize));
    classes.extend(std::iter::repeat_n(OutcomeClass::FalseAlarm, c.false_alarms as usize));
    classes.extend(std::iter::repeat_n(OutcomeClass::CorrectRejection, c.correct_rejections as usize));
    classes.shuffle(rng);
    let trials =
        classes.into_iter().enumerate().map(|(i, outcome_class)| TrialSpec { index: i + 1, outcome_class }).collect();
    TrialSchedule { level, trials }
}

/// Detection points for one trial: 0 when wrong, `5 − 5·t/10000` when a
/// threat was correctly identified after `t` ms, 5 for a correct all-clear.
pub fn detection_score(correct: bool, threat_present: bool, detection_time_ms: f64) -> f64 {
    if !correct {
        return 0.0;
    }
    if !threat_present {
        return MAX_DETECTION_SCORE;
    }
    let t = detection_time_ms.clamp(0.0, TRIAL_DURATION_MS);
    MAX_DETECTION_SCORE - MAX_DETECTION_SCORE * t / TRIAL_DURATION_MS
}

/// Root mean square of a trial's tracking errors.
pub fn tracking_rmse(error_samples: &[f64]) -> f64 {
    (error_samples.iter().map(|e| e * e).sum::<f64>() / error_samples.len() as f64).sqrt()
}

/// Tracking points for one trial: the RMSE of 200 error samples falls into
/// one of ten equal bins over `[0, e_max)`; bin `b` scores `10 − b`, and
/// anything at or past `e_max` scores 0.
pub fn tracking_score(error_samples: &[f64], e_max: f64) -> Result<u8, ScenarioError> {
    if error_samples.len() != TRACKING_SAMPLES {
        return Err(ScenarioError::SampleCountMismatch { expected: TRACKING_SAMPLES, got: error_samples.len() });
    }
    Ok(tracking_score_for_rmse(tracking_rmse(error_samples), e_max))
}

pub fn tracking_score_for_rmse(rmse: f64, e_max: f64) -> u8 {
    let width = e_max / f64::from(MAX_TRACKING_SCORE);
    let bin = (rmse / width).floor();
    if !(bin < f64::from(MAX_TRACKING_SCORE)) {
        return 0;
    }
    MAX_TRACKING_SCORE - bin.max(0.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    BlindFollow,
    CrossCheck,
}

impl Behavior {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BlindFollow => "blind_follow",
            Self::CrossCheck => "cross_check",
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Behavior {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "blind_follow" => Ok(Self::BlindFollow),
            "cross_check" => Ok(Self::CrossCheck),
            _ => Err(ScenarioError::UnknownBehavior(s.to_string())),
        }
    }
}

/// Generative behavior of simulated operators. These rates are simulator
/// settings, not measured quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorConfig {
    /// Blind-follow probability per archetype, indexed by [`Archetype::index`].
    pub blind_follow_rates: [f64; 3],
    pub cross_check_accuracy: f64,
    pub cross_check_time_ms: (f64, f64),
    /// Tracking RMSE range while cross-checking, as fractions of `e_max`.
    pub cross_check_tracking: (f64, f64),
    pub blind_follow_time_ms: (f64, f64),
    /// Tracking RMSE range while blind-following, as fractions of `e_max`.
    pub blind_follow_tracking: (f64, f64),
    pub e_max: f64,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        Self {
            blind_follow_rates: BLIND_FOLLOW_RATES,
            cross_check_accuracy: 0.95,
            cross_check_time_ms: (2000.0, 8000.0),
            cross_check_tracking: (0.4, 0.8),
            blind_follow_time_ms: (300.0, 1200.0),
            blind_follow_tracking: (0.1, 0.4),
            e_max: DEFAULT_E_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialScore {
    pub tracking: u8,
    pub detection: f64,
}

impl TrialScore {
    pub fn total(&self) -> f64 {
        f64::from(self.tracking) + self.detection
    }
}

/// Everything one simulated operator produced over a session.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorRun {
    pub trajectory: TrustTrajectory,
    pub behaviors: Vec<Behavior>,
    pub detection_correct: Vec<bool>,
    pub scores: Vec<TrialScore>,
}

impl OperatorRun {
    pub fn blind_follow_ratio(&self) -> f64 {
        self.behaviors.iter().filter(|b| **b == Behavior::BlindFollow).count() as f64 / self.behaviors.len() as f64
    }

    /// `(tracking, detection, total)` summed over trials.
    pub fn totals(&self) -> (f64, f64, f64) {
        let tracking: f64 = self.scores.iter().map(|s| f64::from(s.tracking)).sum();
        let detection: f64 = self.scores.iter().map(|s| s.detection).sum();
        (tracking, detection, tracking + detection)
    }
}

/// Tracking error samples with an exact target RMSE.
fn tracking_errors<R: Rng + ?Sized>(target_rmse: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..TRACKING_SAMPLES).map(|_| standard_normal(rng)).collect();
    let rms = tracking_rmse(&raw);
    if rms == 0.0 {
        return vec![target_rmse; TRACKING_SAMPLES];
    }
    raw.into_iter().map(|z| z * target_rmse / rms).collect()
}

/// Run one operator through a schedule.
///
/// Per trial the trust state absorbs the detector outcome, a report is drawn
/// from the updated Beta, the operator blind-follows with the archetype's
/// rate or cross-checks otherwise, and both task scores are computed.
pub fn simulate_operator(
    agent_id: &str,
    archetype: Archetype,
    params: &TrustParams,
    schedule: &TrialSchedule,
    behavior: &BehaviorConfig,
    seed: u64,
) -> OperatorRun {
    let mut rng = rng_for_stream(seed, 2);
    let rate = behavior.blind_follow_rates[archetype.index()];
    let n = schedule.trials.len();
    let mut state = params.initial_state();
    let mut reports = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    let mut behaviors = Vec::with_capacity(n);
    let mut detection_correct = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);

    for trial in &schedule.trials {
        let outcome = trial.outcome_class.detector_outcome();
        state = update_state(state, outcome, params);
        reports.push(sample_trust(&state, &mut rng));
        outcomes.push(outcome);

        let blind = rng.random::<f64>() < rate;
        let (correct, time, tracking_frac) = if blind {
            (
                outcome.is_success(),
                uniform(behavior.blind_follow_time_ms.0, behavior.blind_follow_time_ms.1, &mut rng),
                uniform(behavior.blind_follow_tracking.0, behavior.blind_follow_tracking.1, &mut rng),
            )
        } else {
            (
                rng.random::<f64>() < behavior.cross_check_accuracy,
                uniform(behavior.cross_check_time_ms.0, behavior.cross_check_time_ms.1, &mut rng),
                uniform(behavior.cross_check_tracking.0, behavior.cross_check_tracking.1, &mut rng),
            )
        };
        let errors = tracking_errors(tracking_frac * behavior.e_max, &mut rng);
        let tracking = tracking_score(&errors, behavior.e_max).expect("fixed sample count");
        let threat = trial.ground_truth() == GroundTruth::Threat;
        behaviors.push(if blind { Behavior::BlindFollow } else { Behavior::CrossCheck });
        detection_correct.push(correct);
        scores.push(TrialScore { tracking, detection: detection_score(correct, threat, time) });
    }

    let trajectory = TrustTrajectory::new(agent_id, reports, outcomes).expect("equal lengths by construction");
    OperatorRun { trajectory, behaviors, detection_correct, scores }
}

/// One synthetic participant.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub agent_id: String,
    pub archetype: Archetype,
    pub level: ReliabilityLevel,
    pub generating_params: TrustParams,
    pub schedule: TrialSchedule,
    pub profile: CharacteristicsProfile,
    pub run: OperatorRun,
}

/// Cohort composition and generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    /// Agents per archetype (BDM, disbeliever, oscillator).
    pub sizes: [usize; 3],
    /// Levels assigned round-robin by agent index.
    pub levels: Vec<ReliabilityLevel>,
    /// SD of the multiplicative log-normal noise on the archetype parameters.
    pub param_noise_sd: f64,
    /// Multiplier on the reference profile SDs.
    pub profile_sd_scale: f64,
    pub behavior: BehaviorConfig,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            sizes: DEFAULT_COHORT_SIZES,
            levels: ReliabilityLevel::ALL.to_vec(),
            param_noise_sd: 0.1,
            profile_sd_scale: 1.0,
            behavior: BehaviorConfig::default(),
        }
    }
}

pub fn agent_id(index: usize) -> String {
    format!("A{:04}", index + 1)
}

/// Generate a cohort. Agent `i` draws everything from
/// `derive_seed(seed, i)`, so the cohort is reproducible and independent of
/// evaluation order.
pub fn generate_cohort(spec: &CohortSpec, seed: u64) -> Vec<AgentRecord> {
    let mut out = Vec::with_capacity(spec.sizes.iter().sum());
    let levels = if spec.levels.is_empty() { ReliabilityLevel::ALL.to_vec() } else { spec.levels.clone() };
    let samplers = Archetype::ALL.map(|a| ProfileSampler::new(a, spec.profile_sd_scale));
    let archetypes = Archetype::ALL.iter().zip(spec.sizes).flat_map(|(a, n)| std::iter::repeat_n(*a, n));
    for (index, archetype) in archetypes.enumerate() {
        out.push(generate_agent(spec, &levels, &samplers[archetype.index()], index, archetype, seed));
    }
    out
}

fn generate_agent(
    spec: &CohortSpec,
    levels: &[ReliabilityLevel],
    profiles: &ProfileSampler,
    index: usize,
    archetype: Archetype,
    root_seed: u64,
) -> AgentRecord {
    let seed = derive_seed(root_seed, index as u64);
    let mut rng = rng_for_stream(seed, 1);
    let base = ARCHETYPE_PARAMS[archetype.index()];
    let params = if spec.param_noise_sd > 0.0 {
        TrustParams::from_array(base.map(|v| v * (spec.param_noise_sd * standard_normal(&mut rng)).exp()))
    } else {
        TrustParams::from_array(base)
    };
    let profile = profiles.sample(&mut rng);
    let level = levels[index % levels.len()];
    let schedule = generate_schedule(level, seed);
    let id = agent_id(index);
    let run = simulate_operator(&id, archetype, &params, &schedule, &spec.behavior, seed);
    AgentRecord { agent_id: id, archetype, level, generating_params: params, schedule, profile, run }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_counts_sum_and_reliability() {
        for level in ReliabilityLevel::ALL {
            let c = level.counts();
            assert_eq!(c.total(), 100);
            assert_eq!(c.hits + c.correct_rejections, level.percent());
            assert_eq!(ReliabilityLevel::from_counts(c), Some(level));
        }
        assert_eq!("70".parse::<ReliabilityLevel>(), Ok(ReliabilityLevel::P70));
        assert!("71".parse::<ReliabilityLevel>().is_err());
    }

    #[test]
    fn sdt_chance_and_reference_row() {
        let chance = SdtConfig { criterion_c: 0.0, sensitivity_dprime: 0.0, n_signal: 50, n_total: 100 };
        assert_eq!(chance.hit_rate(), 0.5);
        assert_eq!(chance.false_alarm_rate(), 0.5);

        let cfg = SdtConfig {
            criterion_c: SdtConfig::CRITERION,
            sensitivity_dprime: SdtConfig::DPRIME,
            n_signal: 50,
            n_total: 100,
        };
        let c = sdt_counts(&cfg);
        // Rounded SDT counts differ from the reference 70% row (40, 10, 20, 30).
        assert_eq!((c.hits, c.misses, c.false_alarms, c.correct_rejections), (39, 11, 18, 32));
        assert_eq!(c.total(), 100);
    }

    #[test]
    fn schedule_reference_multisets() {
        let s = generate_schedule(ReliabilityLevel::P62, 1);
        assert_eq!(s.trials.len(), 100);
        let c = s.counts();
        assert_eq!((c.hits, c.misses, c.false_alarms, c.correct_rejections), (8, 2, 36, 54));
        let c = generate_schedule(ReliabilityLevel::P70, 1).counts();
        assert_eq!((c.hits, c.misses, c.false_alarms, c.correct_rejections), (40, 10, 20, 30));
    }

    #[test]
    fn schedule_seed_contract() {
        let a = generate_schedule(ReliabilityLevel::P66, 7);
        let b = generate_schedule(ReliabilityLevel::P66, 7);
        let c = generate_schedule(ReliabilityLevel::P66, 8);
        assert_eq!(a, b);
        assert_ne!(a.trials, c.trials);
        assert_eq!(a.counts(), c.counts());
    }

    #[test]
    fn outcome_class_consistency() {
        for class in [OutcomeClass::Hit, OutcomeClass::Miss, OutcomeClass::FalseAlarm, OutcomeClass::CorrectRejection] {
            assert_eq!(OutcomeClass::from_parts(class.ground_truth(), class.alert()), class);
            assert_eq!(class.as_str().parse::<OutcomeClass>(), Ok(class));
        }
    }

    #[test]
    fn detection_score_branches() {
        assert_eq!(detection_score(false, true, 1234.0), 0.0);
        assert_eq!(detection_score(false, false, 0.0), 0.0);
        assert_eq!(detection_score(true, true, 5000.0), 2.5);
        assert_eq!(detection_score(true, true, 0.0), 5.0);
        assert_eq!(detection_score(true, true, 10_000.0), 0.0);
        assert_eq!(detection_score(true, false, 9000.0), 5.0);
    }

    #[test]
    fn tracking_score_bins() {
        assert_eq!(tracking_score(&[0.0; 200], 250.0), Ok(10));
        assert_eq!(tracking_score(&[125.0; 200], 250.0), Ok(5));
        assert_eq!(tracking_score(&[250.0; 200], 250.0), Ok(0));
        assert_eq!(tracking_score(&[900.0; 200], 250.0), Ok(0));
        assert_eq!(tracking_score(&[24.9; 200], 250.0), Ok(10));
        assert_eq!(tracking_score(&[25.0; 200], 250.0), Ok(9));
        assert_eq!(
            tracking_score(&[0.0; 199], 250.0),
            Err(ScenarioError::SampleCountMismatch { expected: 200, got: 199 })
        );
    }

    #[test]
    fn blind_following_copies_detector() {
        let behavior = BehaviorConfig { blind_follow_rates: [1.0; 3], ..BehaviorConfig::default() };
        let schedule = generate_schedule(ReliabilityLevel::P64, 3);
        let run = simulate_operator("x", Archetype::Bdm, &archetype_params(Archetype::Bdm), &schedule, &behavior, 3);
        for (t, correct) in schedule.trials.iter().zip(&run.detection_correct) {
            assert_eq!(*correct, t.outcome_class.detector_outcome().is_success());
        }
        assert_eq!(run.blind_follow_ratio(), 1.0);
    }

    #[test]
    fn score_bounds_hold() {
        let cohort = generate_cohort(&CohortSpec { sizes: [5, 5, 5], ..CohortSpec::default() }, 4);
        for agent in &cohort {
            for s in &agent.run.scores {
                assert!((0.0..=5.0).contains(&s.detection));
                assert!(s.tracking <= 10);
                assert!(s.total() <= 15.0);
            }
        }
    }

    #[test]
    fn noiseless_cohort_uses_reference_params() {
        let spec = CohortSpec { sizes: [4, 2, 2], param_noise_sd: 0.0, ..CohortSpec::default() };
        let cohort = generate_cohort(&spec, 1);
        assert_eq!(cohort.len(), 8);
        for agent in &cohort {
            assert_eq!(agent.generating_params, archetype_params(agent.archetype));
        }
    }

    #[test]
    fn default_cohort_proportions_and_levels() {
        let cohort = generate_cohort(&CohortSpec::default(), 42);
        assert_eq!(cohort.len(), 130);
        let count = |a| cohort.iter().filter(|r| r.archetype == a).count();
        assert_eq!((count(Archetype::Bdm), count(Archetype::Disbeliever), count(Archetype::Oscillator)), (91, 25, 14));
        for (i, agent) in cohort.iter().enumerate() {
            assert_eq!(agent.level, ReliabilityLevel::ALL[i % 5]);
            assert_eq!(agent.schedule.counts(), agent.level.counts());
        }
        assert_eq!(cohort, generate_cohort(&CohortSpec::default(), 42));
    }
}

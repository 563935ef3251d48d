use proptest::prelude::*;
use trustdyn_core::scenario::{
    archetype_params, detection_score, generate_cohort, generate_schedule, sdt_counts, simulate_operator,
    tracking_score, BehaviorConfig, CohortSpec, OutcomeClass, OutcomeCounts, ReliabilityLevel, SdtConfig,
    DEFAULT_E_MAX,
};
use trustdyn_core::Archetype;

const TABLE: [(u32, [u32; 4]); 5] =
    [(62, [8, 2, 36, 54]), (64, [16, 4, 32, 48]), (66, [24, 6, 28, 42]), (68, [32, 8, 24, 36]), (70, [40, 10, 20, 30])];

fn as_array(c: OutcomeCounts) -> [u32; 4] {
    [c.hits, c.misses, c.false_alarms, c.correct_rejections]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn schedules_reproduce_reference_counts(seed in any::<u64>(), level in 0usize..5) {
        let (percent, counts) = TABLE[level];
        let lvl = ReliabilityLevel::from_percent(percent).unwrap();
        let s = generate_schedule(lvl, seed);
        prop_assert_eq!(s.trials.len(), 100);
        prop_assert_eq!(as_array(s.counts()), counts);
        for (i, t) in s.trials.iter().enumerate() {
            prop_assert_eq!(t.index, i + 1);
            prop_assert_eq!(OutcomeClass::from_parts(t.ground_truth(), t.alert()), t.outcome_class);
        }
    }

    #[test]
    fn detection_score_stays_in_bounds(correct in any::<bool>(), threat in any::<bool>(), t in 0.0f64..=10_000.0) {
        let s = detection_score(correct, threat, t);
        prop_assert!((0.0..=5.0).contains(&s));
        if !correct {
            prop_assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn per_trial_totals_add_up(seed in 0u64..200) {
        let cohort = generate_cohort(&CohortSpec { sizes: [2, 2, 2], ..CohortSpec::default() }, seed);
        for a in &cohort {
            let (tracking, detection, total) = a.run.totals();
            prop_assert!((tracking + detection - total).abs() < 1e-9);
            for s in &a.run.scores {
                prop_assert!(s.tracking <= 10);
                prop_assert!((s.total() - (s.tracking as f64 + s.detection)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn reference_levels_hold_their_reliability() {
    for (percent, counts) in TABLE {
        let c = ReliabilityLevel::from_percent(percent).unwrap().counts();
        assert_eq!(as_array(c), counts);
        assert_eq!(c.hits + c.correct_rejections, percent);
        assert_eq!(c.total(), 100);
    }
}

#[test]
fn detection_score_branches() {
    assert_eq!(detection_score(false, true, 1234.0), 0.0);
    assert_eq!(detection_score(false, false, 0.0), 0.0);
    assert_eq!(detection_score(true, true, 5000.0), 2.5);
    assert_eq!(detection_score(true, true, 0.0), 5.0);
    assert_eq!(detection_score(true, true, 10_000.0), 0.0);
    assert_eq!(detection_score(true, false, 10_000.0), 5.0);
}

#[test]
fn tracking_score_reference_points() {
    assert_eq!(tracking_score(&[0.0; 200], DEFAULT_E_MAX), Ok(10));
    assert_eq!(tracking_score(&[DEFAULT_E_MAX; 200], DEFAULT_E_MAX), Ok(0));
    assert_eq!(tracking_score(&[DEFAULT_E_MAX / 2.0; 200], DEFAULT_E_MAX), Ok(5));
    assert!(tracking_score(&[0.0; 199], DEFAULT_E_MAX).is_err());
}

#[test]
fn chance_sdt_configuration() {
    let c = SdtConfig { criterion_c: 0.0, sensitivity_dprime: 0.0, n_signal: 50, n_total: 100 };
    assert_eq!(c.hit_rate(), 0.5);
    assert_eq!(c.false_alarm_rate(), 0.5);
    assert_eq!(as_array(sdt_counts(&c)), [25, 25, 25, 25]);
}

#[test]
fn disbeliever_log_trust_near_reference() {
    let params = archetype_params(Archetype::Disbeliever);
    let behavior = BehaviorConfig::default();
    let mut total = 0.0;
    for seed in 0..50 {
        let schedule = generate_schedule(ReliabilityLevel::P70, seed);
        let run = simulate_operator("d", Archetype::Disbeliever, &params, &schedule, &behavior, seed);
        total += run.trajectory.reports().iter().map(|t| t.ln()).sum::<f64>() / 100.0;
    }
    let mean = total / 50.0;
    assert!((mean + 2.099).abs() <= 0.4, "mean log trust {mean}");
}

#[test]
fn forced_blind_following_copies_the_detector() {
    let behavior = BehaviorConfig { blind_follow_rates: [1.0; 3], ..BehaviorConfig::default() };
    let schedule = generate_schedule(ReliabilityLevel::P64, 4);
    let run = simulate_operator("b", Archetype::Bdm, &archetype_params(Archetype::Bdm), &schedule, &behavior, 4);
    for (t, &c) in schedule.trials.iter().zip(&run.detection_correct) {
        assert_eq!(c, t.outcome_class.detector_outcome().is_success());
    }
}

#[test]
fn cohorts_are_reproducible() {
    let spec = CohortSpec::default();
    let a = generate_cohort(&spec, 3);
    assert_eq!(a.len(), 130);
    assert_eq!(a, generate_cohort(&spec, 3));
    assert_ne!(a[0].run.trajectory, generate_cohort(&spec, 4)[0].run.trajectory);
    let counts = Archetype::ALL.map(|x| a.iter().filter(|r| r.archetype == x).count());
    assert_eq!(counts, [91, 25, 14]);
}

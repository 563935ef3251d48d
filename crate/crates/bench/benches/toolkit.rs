use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use trustdyn_core::classifier::{train_tree, Dataset, TreeConfig};
use trustdyn_core::clustering::{compute_features, kmeans, scree};
use trustdyn_core::estimation::{fit_mle, fit_prior, map_replay};
use trustdyn_core::scenario::{generate_cohort, generate_schedule, CohortSpec, ReliabilityLevel};
use trustdyn_core::special::{ln_gamma, reg_inc_beta};
use trustdyn_core::trust::predicted_means;
use trustdyn_core::{OptimizerConfig, TrustParams};

fn special(c: &mut Criterion) {
    c.bench_function("ln_gamma", |b| b.iter(|| ln_gamma(black_box(231.93))));
    c.bench_function("reg_inc_beta", |b| b.iter(|| reg_inc_beta(black_box(63.5), black_box(1.0), black_box(0.97))));
}

fn simulation(c: &mut Criterion) {
    c.bench_function("generate_schedule", |b| b.iter(|| generate_schedule(ReliabilityLevel::P70, black_box(7))));
    let spec = CohortSpec::default();
    c.bench_function("generate_cohort_130", |b| b.iter(|| generate_cohort(&spec, black_box(42))));
}

fn estimation(c: &mut Criterion) {
    let cohort = generate_cohort(&CohortSpec::default(), 42);
    let config = OptimizerConfig::default();
    let trajectory = &cohort[0].run.trajectory;
    c.bench_function("fit_mle", |b| b.iter(|| fit_mle(black_box(trajectory), &config)));

    let params: Vec<TrustParams> = cohort.iter().map(|a| a.generating_params).collect();
    let prior = fit_prior(&params[1..]).unwrap();
    let mut group = c.benchmark_group("replay");
    group.sample_size(10);
    group.bench_function("map_replay_100_trials", |b| b.iter(|| map_replay(black_box(trajectory), &prior, &config)));
    group.finish();
}

fn clustering_and_tree(c: &mut Criterion) {
    let cohort = generate_cohort(&CohortSpec::default(), 42);
    let features: Vec<_> = cohort
        .iter()
        .map(|a| {
            let predicted = predicted_means(&a.generating_params, a.run.trajectory.outcomes());
            compute_features(a.run.trajectory.reports(), &predicted).unwrap()
        })
        .collect();
    c.bench_function("kmeans_k3_130", |b| b.iter(|| kmeans(black_box(&features), 3, 11)));
    c.bench_function("scree_k8_130", |b| b.iter(|| scree(black_box(&features), 8, 11, 10)));

    let profiles: Vec<_> = cohort.iter().map(|a| a.profile.clone()).collect();
    let labels: Vec<_> = cohort.iter().map(|a| a.archetype).collect();
    let data = Dataset::from_profiles(&profiles, &labels).unwrap();
    c.bench_function("train_tree_depth6_130", |b| b.iter(|| train_tree(black_box(&data), &TreeConfig::default())));
}

criterion_group!(benches, special, simulation, estimation, clustering_and_tree);
criterion_main!(benches);

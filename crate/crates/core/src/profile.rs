//! Personal-characteristics profiles: 28 survey dimensions with their scale
//! ranges and the per-archetype reference (mean, SD) used to synthesize them.

use rand::Rng;

use crate::sampling::standard_normal;
use crate::special::normal_cdf;
use crate::Archetype;

/// One survey dimension and its scale range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
}

const fn dim(name: &'static str, min: f64, max: f64) -> Dimension {
    Dimension { name, min, max }
}

pub const N_DIMENSIONS: usize = 28;

/// All dimensions in reporting order.
pub const DIMENSIONS: [Dimension; N_DIMENSIONS] = [
    dim("power_distance", 1.0, 5.0),
    dim("uncertainty_avoidance", 1.0, 5.0),
    dim("collectivism", 1.0, 5.0),
    dim("long_term_orientation", 1.0, 5.0),
    dim("masculinity", 1.0, 5.0),
    dim("attentional_capacity", 1.0, 4.0),
    dim("positive_affect", 1.0, 5.0),
    dim("negative_affect", 1.0, 5.0),
    dim("extraversion", 1.0, 5.0),
    dim("agreeableness", 1.0, 5.0),
    dim("conscientiousness", 1.0, 5.0),
    dim("neuroticism", 1.0, 5.0),
    dim("intellect", 1.0, 5.0),
    dim("risk_propensity", 1.0, 9.0),
    dim("intuitive", 1.0, 5.0),
    dim("dependent", 1.0, 5.0),
    dim("rational", 1.0, 5.0),
    dim("avoidant", 1.0, 5.0),
    dim("spontaneous", 1.0, 5.0),
    dim("reasoning_score", 0.0, 7.0),
    dim("trust_propensity", 1.0, 5.0),
    dim("nars_interaction", 1.0, 5.0),
    dim("nars_social_influence", 1.0, 5.0),
    dim("performance_expectancy", 1.0, 7.0),
    dim("effort_expectancy", 1.0, 7.0),
    dim("self_efficacy", 1.0, 5.0),
    dim("pas_high_expectations", 1.0, 5.0),
    dim("pas_all_or_none", 1.0, 5.0),
];

/// The seven dimensions that differ between archetypes and feed the classifier.
pub const PREDICTIVE_DIMENSIONS: [&str; 7] = [
    "masculinity",
    "positive_affect",
    "extraversion",
    "neuroticism",
    "intellect",
    "performance_expectancy",
    "pas_high_expectations",
];

/// Reference `(mean, sd)` per dimension, indexed `[dimension][archetype]`.
pub const REFERENCE_STATS: [[(f64, f64); 3]; N_DIMENSIONS] = [
    [(1.82, 0.46), (1.80, 0.54), (1.86, 0.73)],
    [(4.25, 0.48), (4.36, 0.50), (4.27, 0.58)],
    [(3.08, 0.63), (3.21, 0.69), (3.21, 0.90)],
    [(4.09, 0.47), (4.19, 0.52), (4.26, 0.36)],
    [(1.81, 0.67), (1.68, 0.77), (2.38, 1.12)],
    [(2.67, 0.40), (2.58, 0.38), (2.79, 0.32)],
    [(2.80, 0.71), (2.75, 0.76), (3.37, 0.65)],
    [(1.36, 0.45), (1.35, 0.31), (1.31, 0.41)],
    [(2.99, 0.95), (2.74, 0.96), (3.54, 1.08)],
    [(3.99, 0.64), (3.90, 0.75), (3.96, 0.70)],
    [(3.38, 0.86), (3.15, 1.17), (3.57, 0.58)],
    [(2.67, 0.73), (3.09, 0.83), (2.61, 0.90)],
    [(3.77, 0.72), (3.57, 0.93), (4.23, 0.46)],
    [(4.20, 1.28), (4.15, 1.38), (4.83, 1.14)],
    [(3.35, 0.65), (3.23, 0.74), (3.53, 0.86)],
    [(3.75, 0.67), (3.74, 0.68), (3.54, 0.65)],
    [(4.09, 0.49), (4.03, 0.81), (4.36, 0.42)],
    [(2.97, 1.04), (2.88, 1.09), (2.43, 1.00)],
    [(2.65, 0.70), (2.82, 0.68), (2.63, 0.63)],
    [(5.56, 1.42), (5.04, 1.79), (5.14, 2.32)],
    [(3.29, 0.44), (3.05, 0.69), (3.13, 0.64)],
    [(2.17, 0.63), (2.26, 0.68), (1.96, 0.53)],
    [(3.22, 0.60), (3.41, 0.82), (3.09, 0.94)],
    [(5.73, 0.70), (5.24, 1.39), (6.07, 0.68)],
    [(5.24, 0.72), (5.17, 0.78), (5.57, 0.99)],
    [(3.45, 0.74), (3.63, 0.88), (3.82, 0.81)],
    [(1.88, 0.57), (1.55, 0.54), (2.14, 0.79)],
    [(1.80, 0.62), (2.00, 0.87), (1.79, 0.70)],
];

pub fn dimension_index(name: &str) -> Option<usize> {
    DIMENSIONS.iter().position(|d| d.name == name)
}

/// Indices of [`PREDICTIVE_DIMENSIONS`] within [`DIMENSIONS`].
pub fn predictive_indices() -> [usize; 7] {
    PREDICTIVE_DIMENSIONS.map(|n| dimension_index(n).expect("predictive dimension is listed"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicsProfile {
    pub values: [f64; N_DIMENSIONS],
}

impl CharacteristicsProfile {
    pub fn get(&self, name: &str) -> Option<f64> {
        dimension_index(name).map(|i| self.values[i])
    }

    /// Name of the first value outside its scale range, if any.
    pub fn out_of_range(&self) -> Option<&'static str> {
        DIMENSIONS.iter().zip(&self.values).find(|(d, v)| !(**v >= d.min && **v <= d.max)).map(|(d, _)| d.name)
    }

    /// The seven classifier inputs in [`PREDICTIVE_DIMENSIONS`] order.
    pub fn predictive_row(&self) -> Vec<f64> {
        predictive_indices().iter().map(|&i| self.values[i]).collect()
    }
}

/// Draw from `N(mean, sd)` truncated to `[lo, hi]` by rejection; falls back
/// to clamping after 1000 rejections.
pub fn truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    if sd <= 0.0 {
        return mean.clamp(lo, hi);
    }
    for _ in 0..1000 {
        let v = mean + sd * standard_normal(rng);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
    mean.clamp(lo, hi)
}

/// Mean of `N(location, sd)` truncated to `[lo, hi]`.
pub fn truncated_mean(location: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let (a, b) = ((lo - location) / sd, (hi - location) / sd);
    let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // Take the mass from whichever tail keeps precision.
    let mass = if a > 0.0 { normal_cdf(-a) - normal_cdf(-b) } else { normal_cdf(b) - normal_cdf(a) };
    if mass <= 0.0 {
        return location.clamp(lo, hi);
    }
    location + sd * (pdf(a) - pdf(b)) / mass
}

/// Location whose truncation to `[lo, hi]` has mean `target`, by bisection.
/// `target` must lie strictly inside the range.
pub fn location_for_mean(target: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if sd <= 0.0 {
        return target;
    }
    let (mut a, mut b) = (lo - 4.0 * sd, hi + 4.0 * sd);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if truncated_mean(mid, sd, lo, hi) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Per-dimension truncated normals for one archetype. Each location is
/// shifted so the truncated mean equals the reference mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSampler {
    locations: [f64; N_DIMENSIONS],
    sds: [f64; N_DIMENSIONS],
}

impl ProfileSampler {
    /// Sampler with every reference SD scaled by `sd_scale`.
    pub fn new(archetype: Archetype, sd_scale: f64) -> Self {
        let mut locations = [0.0; N_DIMENSIONS];
        let mut sds = [0.0; N_DIMENSIONS];
        for (i, d) in DIMENSIONS.iter().enumerate() {
            let (mean, sd) = REFERENCE_STATS[i][archetype.index()];
            sds[i] = sd * sd_scale;
            locations[i] = location_for_mean(mean, sds[i], d.min, d.max);
        }
        Self { locations, sds }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CharacteristicsProfile {
        let mut values = [0.0; N_DIMENSIONS];
        for (i, d) in DIMENSIONS.iter().enumerate() {
            values[i] = truncated_normal(self.locations[i], self.sds[i], d.min, d.max, rng);
        }
        CharacteristicsProfile { values }
    }
}

/// One profile from a fresh [`ProfileSampler`].
pub fn sample_profile<R: Rng + ?Sized>(archetype: Archetype, sd_scale: f64, rng: &mut R) -> CharacteristicsProfile {
    ProfileSampler::new(archetype, sd_scale).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_from_seed;

    #[test]
    fn reference_means_lie_inside_ranges() {
        for (d, stats) in DIMENSIONS.iter().zip(REFERENCE_STATS) {
            for (m, s) in stats {
                assert!(m > d.min && m < d.max && s > 0.0, "{}", d.name);
            }
        }
    }

    #[test]
    fn predictive_dimensions_resolve() {
        let idx = predictive_indices();
        assert_eq!(idx, [4, 6, 8, 11, 12, 23, 26]);
    }

    #[test]
    fn disbeliever_neuroticism_mean() {
        let mut rng = rng_from_seed(9);
        let n = 1000;
        let i = dimension_index("neuroticism").unwrap();
        let sampler = ProfileSampler::new(Archetype::Disbeliever, 1.0);
        let mean = (0..n).map(|_| sampler.sample(&mut rng).values[i]).sum::<f64>() / n as f64;
        assert!((mean - 3.09).abs() < 0.2, "{mean}");
    }

    #[test]
    fn truncated_mean_matches_reference_after_shift() {
        for (d, stats) in DIMENSIONS.iter().zip(REFERENCE_STATS) {
            for (m, sd) in stats {
                let loc = location_for_mean(m, sd, d.min, d.max);
                assert!((truncated_mean(loc, sd, d.min, d.max) - m).abs() < 1e-9, "{}", d.name);
            }
        }
        let half = truncated_mean(0.0, 1.0, 0.0, 40.0);
        assert!((half - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_range() {
        let mut rng = rng_from_seed(1);
        for a in Archetype::ALL {
            for _ in 0..200 {
                assert_eq!(sample_profile(a, 1.0, &mut rng).out_of_range(), None);
            }
        }
    }
}

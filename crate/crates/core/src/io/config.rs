//! `key = value` pipeline configuration.
//!
//! Blank lines and everything after `#` are ignored. Only `seed` is required;
//! every other key has the default shown by [`PipelineConfig::with_seed`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::classifier::HyperGrid;
use crate::scenario::{BehaviorConfig, CohortSpec, ReliabilityLevel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key '{0}'")]
    MissingRequired(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusteringMode {
    /// Cluster each reliability level separately.
    #[default]
    PerLevel,
    /// Cluster the whole cohort at once.
    Pooled,
}

impl ClusteringMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PerLevel => "per_level",
            Self::Pooled => "pooled",
        }
    }
}

impl fmt::Display for ClusteringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClusteringMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "per_level" => Ok(Self::PerLevel),
            "pooled" => Ok(Self::Pooled),
            other => Err(format!("unknown clustering mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub cohort: CohortSpec,
    pub clustering_mode: ClusteringMode,
    /// Largest k on the scree curve.
    pub k_max: usize,
    /// k-means++ restarts per k.
    pub kmeans_restarts: usize,
    pub grid: HyperGrid,
    pub stratify_split: bool,
    pub out_dir: PathBuf,
}

/// Keys accepted by [`parse_config_str`], in snapshot order.
pub const CONFIG_KEYS: [&str; 17] = [
    "seed",
    "reliability_mix",
    "cohort_sizes",
    "param_noise_sd",
    "profile_sd_scale",
    "blind_follow_bdm",
    "blind_follow_disbeliever",
    "blind_follow_oscillator",
    "cross_check_accuracy",
    "e_max",
    "clustering_mode",
    "k_max",
    "kmeans_restarts",
    "tree_depths",
    "tree_min_leaves",
    "stratify_split",
    "out_dir",
];

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            cohort: CohortSpec::default(),
            clustering_mode: ClusteringMode::default(),
            k_max: 8,
            kmeans_restarts: 10,
            grid: HyperGrid::default(),
            stratify_split: false,
            out_dir: PathBuf::from("out"),
        }
    }

    /// Every setting that affects outputs as `(key, value)` text. The output
    /// directory is excluded so that runs into different directories agree.
    pub fn snapshot(&self) -> Vec<(String, String)> {
        let b: &BehaviorConfig = &self.cohort.behavior;
        let join = |v: &[String]| v.join(",");
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("reliability_mix", join(&self.cohort.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>())),
            ("cohort_sizes", join(&self.cohort.sizes.map(|s| s.to_string()))),
            ("param_noise_sd", self.cohort.param_noise_sd.to_string()),
            ("profile_sd_scale", self.cohort.profile_sd_scale.to_string()),
            ("blind_follow_bdm", b.blind_follow_rates[0].to_string()),
            ("blind_follow_disbeliever", b.blind_follow_rates[1].to_string()),
            ("blind_follow_oscillator", b.blind_follow_rates[2].to_string()),
            ("cross_check_accuracy", b.cross_check_accuracy.to_string()),
            ("e_max", b.e_max.to_string()),
            ("clustering_mode", self.clustering_mode.to_string()),
            ("k_max", self.k_max.to_string()),
            ("kmeans_restarts", self.kmeans_restarts.to_string()),
            ("tree_depths", join(&self.grid.depths.iter().map(|d| d.to_string()).collect::<Vec<_>>())),
            ("tree_min_leaves", join(&self.grid.min_leaves.iter().map(|d| d.to_string()).collect::<Vec<_>>())),
            ("stratify_split", self.stratify_split.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    value.split(',').map(|s| s.trim().parse::<T>().map_err(|_| format!("bad list element '{}'", s.trim()))).collect()
}

fn parse_num<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse::<T>().map_err(|_| format!("bad value '{value}'"))
}

fn parse_prob(value: &str) -> Result<f64, String> {
    let p: f64 = parse_num(value)?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not a probability"))
    }
}

fn parse_positive(value: &str) -> Result<f64, String> {
    let x: f64 = parse_num(value)?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("{x} must be finite and non-negative"))
    }
}

fn apply(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<(), String> {
    let b = &mut cfg.cohort.behavior;
    match key {
        "seed" => cfg.seed = parse_num(value)?,
        "reliability_mix" => {
            let levels: Vec<ReliabilityLevel> = parse_list(value)?;
            if levels.is_empty() {
                return Err("reliability_mix is empty".into());
            }
            cfg.cohort.levels = levels;
        }
        "cohort_sizes" => {
            let sizes: Vec<usize> = parse_list(value)?;
            cfg.cohort.sizes = sizes.try_into().map_err(|_| "cohort_sizes needs 3 integers".to_string())?;
        }
        "param_noise_sd" => cfg.cohort.param_noise_sd = parse_positive(value)?,
        "profile_sd_scale" => cfg.cohort.profile_sd_scale = parse_positive(value)?,
        "blind_follow_bdm" => b.blind_follow_rates[0] = parse_prob(value)?,
        "blind_follow_disbeliever" => b.blind_follow_rates[1] = parse_prob(value)?,
        "blind_follow_oscillator" => b.blind_follow_rates[2] = parse_prob(value)?,
        "cross_check_accuracy" => b.cross_check_accuracy = parse_prob(value)?,
        "e_max" => {
            b.e_max = parse_positive(value)?;
            if b.e_max == 0.0 {
                return Err("e_max must be positive".into());
            }
        }
        "clustering_mode" => cfg.clustering_mode = value.parse()?,
        "k_max" => {
            cfg.k_max = parse_num(value)?;
            if cfg.k_max < 3 {
                return Err("k_max must be at least 3".into());
            }
        }
        "kmeans_restarts" => cfg.kmeans_restarts = parse_num::<usize>(value)?.max(1),
        "tree_depths" => cfg.grid.depths = parse_list(value)?,
        "tree_min_leaves" => cfg.grid.min_leaves = parse_list(value)?,
        "stratify_split" => cfg.stratify_split = parse_num(value)?,
        "out_dir" => cfg.out_dir = PathBuf::from(value),
        _ => unreachable!("key checked against CONFIG_KEYS"),
    }
    Ok(())
}

pub fn parse_config_str(text: &str) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = PipelineConfig::with_seed(0);
    let mut seen_seed = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line, message: format!("expected key=value, got '{body}'") })?;
        let (key, value) = (key.trim(), value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        apply(&mut cfg, key, value).map_err(|message| ConfigError::Parse { line, message })?;
        seen_seed |= key == "seed";
    }
    if !seen_seed {
        return Err(ConfigError::MissingRequired("seed"));
    }
    if cfg.grid.depths.is_empty() || cfg.grid.min_leaves.is_empty() {
        return Err(ConfigError::Parse { line: 0, message: "classifier grid is empty".into() });
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::DEFAULT_COHORT_SIZES;

    #[test]
    fn empty_needs_seed() {
        assert_eq!(parse_config_str(""), Err(ConfigError::MissingRequired("seed")));
        assert_eq!(parse_config_str("# only a comment\n\n"), Err(ConfigError::MissingRequired("seed")));
    }

    #[test]
    fn seed_only_uses_defaults() {
        let cfg = parse_config_str("seed=42").unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.cohort.sizes, DEFAULT_COHORT_SIZES);
        assert_eq!(cfg.cohort.sizes, [91, 25, 14]);
        assert_eq!(cfg.clustering_mode, ClusteringMode::PerLevel);
        assert_eq!(cfg.grid, HyperGrid::default());
    }

    #[test]
    fn malformed_line_reports_line() {
        assert!(matches!(parse_config_str("seed 42"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(parse_config_str("seed=1\nk_max=two"), Err(ConfigError::Parse { line: 2, .. })));
    }

    #[test]
    fn unknown_key_rejected() {
        assert_eq!(
            parse_config_str("seed=1\ncolour = blue"),
            Err(ConfigError::UnknownKey { line: 2, key: "colour".into() })
        );
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = parse_config_str(
            "seed = 7 # root\nreliability_mix = 70, 62\ncohort_sizes=10,5,5\nclustering_mode=pooled\ntree_depths=1,6\n",
        )
        .unwrap();
        assert_eq!(cfg.cohort.levels, vec![ReliabilityLevel::P70, ReliabilityLevel::P62]);
        assert_eq!(cfg.cohort.sizes, [10, 5, 5]);
        assert_eq!(cfg.clustering_mode, ClusteringMode::Pooled);
        assert_eq!(cfg.grid.depths, vec![1, 6]);
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = parse_config_str("seed=3\nclustering_mode=pooled\nblind_follow_bdm=0.5").unwrap();
        let text: String = cfg.snapshot().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let back = parse_config_str(&text).unwrap();
        assert_eq!(PipelineConfig { out_dir: cfg.out_dir.clone(), ..back }, cfg);
    }
}

//! Configuration parsing and the CSV/TSV files exchanged between pipeline stages.
//!
//! Reals are written in fixed six-decimal notation so that outputs are
//! byte-stable across platforms.

mod config;
mod tables;

pub use config::{parse_config, parse_config_str, ClusteringMode, ConfigError, PipelineConfig, CONFIG_KEYS};
pub use tables::*;

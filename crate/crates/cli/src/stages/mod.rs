//! Pipeline stages. Each stage reads the files written by earlier stages from
//! the output directory and commits its own files atomically.

mod analyze;
mod classify;
mod cluster;
mod fit;
mod report;
mod simulate;

use std::fs::File;
use std::path::{Path, PathBuf};

use trustdyn_core::io::{PipelineConfig, TableError};
use trustdyn_core::sampling::derive_seed;

pub use analyze::analyze;
pub use classify::classify;
pub use cluster::cluster;
pub use fit::{fit, fit_agents, AgentFit};
pub use report::report;
pub use simulate::simulate;

use crate::error::StageError;
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::output::StagedOutputs;

pub const TRAJECTORIES: &str = "trajectories.csv";
pub const PROFILES: &str = "profiles.csv";
pub const SCHEDULE: &str = "schedule.csv";
pub const TRUTH: &str = "truth.csv";
pub const PARAMS: &str = "params.csv";
pub const PREDICTIONS: &str = "predictions.csv";
pub const CLUSTERS: &str = "clusters.csv";
pub const SCREE: &str = "scree.csv";
pub const TREE: &str = "tree.txt";
pub const EVAL: &str = "eval.csv";
pub const ANALYSIS_REPORT: &str = "analysis_report.csv";
pub const CONTINGENCY: &str = "contingency.csv";
pub const CHI_SQUARED: &str = "chi_squared.csv";
pub const REPORT_DIR: &str = "report";

/// Seed-derivation indices for stages other than the cohort generator,
/// far above any agent index.
const CLUSTER_STREAM: u64 = 1 << 40;
const CLASSIFY_STREAM: u64 = (1 << 40) + 1;

pub struct Pipeline {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        let out_dir = config.out_dir.clone();
        Self { config, out_dir, quiet: true }
    }

    pub(crate) fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub(crate) fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub(crate) fn staged(&self, stage: &'static str) -> Result<StagedOutputs, StageError> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| StageError::data(stage, format!("cannot create {}: {e}", self.out_dir.display())))?;
        Ok(StagedOutputs::new(&self.out_dir))
    }

    pub(crate) fn open(&self, stage: &'static str, name: &str) -> Result<File, StageError> {
        open_input(stage, &self.path(name))
    }

    pub(crate) fn cluster_seed(&self) -> u64 {
        derive_seed(self.config.seed, CLUSTER_STREAM)
    }

    pub(crate) fn classify_seed(&self) -> u64 {
        derive_seed(self.config.seed, CLASSIFY_STREAM)
    }

    /// Every stage in order, then `manifest.json` over all their files.
    pub fn all(&self) -> Result<RunManifest, StageError> {
        let mut manifest = RunManifest::new(self.config.snapshot());
        let stages: [(&str, StageFn); 6] = [
            ("simulate", |p| simulate(p)),
            ("fit", |p| fit(p, None)),
            ("cluster", cluster),
            ("classify", classify),
            ("analyze", analyze),
            ("report", |p| report(p, None, None)),
        ];
        for (name, run) in stages {
            self.log(format!("[{name}]"));
            let paths = run(self)?;
            manifest.record(name, &self.out_dir, &paths).map_err(|e| StageError::data("all", e))?;
        }
        let mut out = self.staged("all")?;
        let json = manifest.to_json();
        out.write(MANIFEST_FILE, |w| std::io::Write::write_all(w, json.as_bytes()))
            .map_err(|e| StageError::data("all", e))?;
        out.commit().map_err(|e| StageError::data("all", e))?;
        Ok(manifest)
    }
}

type StageFn = fn(&Pipeline) -> Result<Vec<PathBuf>, StageError>;

pub(crate) fn open_input(stage: &'static str, path: &Path) -> Result<File, StageError> {
    File::open(path).map_err(|e| StageError::data(stage, format!("cannot open {}: {e}", path.display())))
}

pub(crate) fn table_err(stage: &'static str, file: &str) -> impl Fn(TableError) -> StageError {
    let file = file.to_string();
    move |e| StageError::data(stage, format!("{file}: {e}"))
}

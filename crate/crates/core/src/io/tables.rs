use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::MISSING;
use crate::clustering::TrajectoryFeatures;
use crate::estimation::{Degeneracy, FitResult};
use crate::profile::{CharacteristicsProfile, DIMENSIONS, N_DIMENSIONS};
use crate::scenario::{AgentRecord, Behavior, OutcomeClass, OutcomeCounts, ReliabilityLevel};
use crate::trust::{clamp_report, TrustParams, TrustTrajectory};
use crate::Archetype;

/// Trials per agent in a complete session.
pub const EXPECTED_TRIALS: usize = 100;

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing column '{0}'")]
    Schema(String),
    #[error("file has no data rows")]
    EmptyFile,
    #[error("row {row}, column '{column}': {message}")]
    Value { row: usize, column: String, message: String },
}

/// Fixed six-decimal rendering; negative zero prints as zero.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| MISSING.to_string(), |x| x.to_string())
}

/// Write a header and rows to CSV.
pub fn write_csv<W: Write>(
    w: W,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), TableError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

/// Header-indexed view over parsed CSV records.
pub struct Table {
    columns: HashMap<String, usize>,
    pub records: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read<R: Read>(r: R, delimiter: u8) -> Result<Self, TableError> {
        let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).trim(csv::Trim::All).from_reader(r);
        let columns = rdr.headers()?.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        let records = rdr.records().collect::<Result<Vec<_>, _>>()?;
        if records.is_empty() {
            return Err(TableError::EmptyFile);
        }
        Ok(Self { columns, records })
    }

    pub fn has(&self, column: &str) -> bool {
        self.columns.contains_key(column)
    }

    pub fn require(&self, columns: &[&str]) -> Result<(), TableError> {
        match columns.iter().find(|c| !self.has(c)) {
            Some(c) => Err(TableError::Schema(c.to_string())),
            None => Ok(()),
        }
    }

    pub fn str(&self, row: usize, column: &str) -> Result<&str, TableError> {
        let i = *self.columns.get(column).ok_or_else(|| TableError::Schema(column.to_string()))?;
        self.records[row].get(i).ok_or_else(|| TableError::Value {
            row: row + 1,
            column: column.into(),
            message: "short row".into(),
        })
    }

    pub fn parse<T: FromStr>(&self, row: usize, column: &str) -> Result<T, TableError> {
        let s = self.str(row, column)?;
        s.parse::<T>().map_err(|_| TableError::Value {
            row: row + 1,
            column: column.into(),
            message: format!("cannot parse '{s}'"),
        })
    }

    /// Parse, mapping the missing marker and empty cells to `None`.
    pub fn parse_opt<T: FromStr>(&self, row: usize, column: &str) -> Result<Option<T>, TableError> {
        if !self.has(column) {
            return Ok(None);
        }
        let s = self.str(row, column)?;
        if s.is_empty() || s == MISSING {
            return Ok(None);
        }
        self.parse(row, column).map(Some)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

// ---------------------------------------------------------------- trajectories

/// One row of `trajectories.csv`. Score columns may be absent in ingested data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub agent_id: String,
    /// 1-based trial number.
    pub trial: usize,
    pub reported_trust: f64,
    pub outcome_class: OutcomeClass,
    pub behavior: Option<Behavior>,
    pub detection_score: Option<f64>,
    pub tracking_score: Option<u8>,
}

pub const TRAJECTORY_COLUMNS: [&str; 7] =
    ["agent_id", "trial", "reported_trust", "outcome_class", "behavior", "detection_score", "tracking_score"];

pub fn trial_rows(agent: &AgentRecord) -> Vec<TrialRow> {
    let run = &agent.run;
    agent
        .schedule
        .trials
        .iter()
        .enumerate()
        .map(|(i, spec)| TrialRow {
            agent_id: agent.agent_id.clone(),
            trial: i + 1,
            reported_trust: run.trajectory.reports()[i],
            outcome_class: spec.outcome_class,
            behavior: Some(run.behaviors[i]),
            detection_score: Some(run.scores[i].detection),
            tracking_score: Some(run.scores[i].tracking),
        })
        .collect()
}

pub fn write_trajectories<W: Write>(w: W, rows: &[TrialRow]) -> Result<(), TableError> {
    let header = TRAJECTORY_COLUMNS.map(String::from);
    write_csv(
        w,
        &header,
        rows.iter().map(|r| {
            vec![
                r.agent_id.clone(),
                r.trial.to_string(),
                fmt6(r.reported_trust),
                r.outcome_class.to_string(),
                fmt_opt(r.behavior),
                r.detection_score.map_or_else(|| MISSING.to_string(), fmt6),
                fmt_opt(r.tracking_score),
            ]
        }),
    )
}

/// Raw rows, unclamped. Only the first four columns are required.
pub fn read_trajectories<R: Read>(r: R) -> Result<Vec<TrialRow>, TableError> {
    let t = Table::read(r, b',')?;
    t.require(&TRAJECTORY_COLUMNS[..4])?;
    (0..t.len())
        .map(|i| {
            Ok(TrialRow {
                agent_id: t.str(i, "agent_id")?.to_string(),
                trial: t.parse(i, "trial")?,
                reported_trust: t.parse(i, "reported_trust")?,
                outcome_class: t.parse(i, "outcome_class")?,
                behavior: t.parse_opt(i, "behavior")?,
                detection_score: t.parse_opt(i, "detection_score")?,
                tracking_score: t.parse_opt(i, "tracking_score")?,
            })
        })
        .collect()
}

/// An ingested agent: its trajectory plus the raw rows it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedAgent {
    pub trajectory: TrustTrajectory,
    pub outcome_classes: Vec<OutcomeClass>,
    pub rows: Vec<TrialRow>,
}

impl IngestedAgent {
    /// The reliability level whose outcome-class counts this agent matches.
    pub fn level(&self) -> Option<ReliabilityLevel> {
        ReliabilityLevel::from_counts(OutcomeCounts::of(self.outcome_classes.iter().copied()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationNote {
    /// A report outside the open unit interval was clamped.
    Clamped { agent_id: String, trial: usize, original: f64, stored: f64 },
    /// The agent does not have [`EXPECTED_TRIALS`] trials.
    TrialCount { agent_id: String, count: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ingested {
    /// Agents in order of first appearance, trials sorted by trial number.
    pub agents: Vec<IngestedAgent>,
    pub notes: Vec<ValidationNote>,
}

/// Group rows into per-agent trajectories, clamping reports and noting
/// agents with an unexpected number of trials.
pub fn ingest_rows(rows: Vec<TrialRow>) -> Ingested {
    let mut order: Vec<String> = Vec::new();
    let mut by_agent: HashMap<String, Vec<TrialRow>> = HashMap::new();
    for r in rows {
        if !by_agent.contains_key(&r.agent_id) {
            order.push(r.agent_id.clone());
        }
        by_agent.entry(r.agent_id.clone()).or_default().push(r);
    }
    let mut out = Ingested::default();
    for id in order {
        let mut rows = by_agent.remove(&id).unwrap_or_default();
        rows.sort_by_key(|r| r.trial);
        if rows.len() != EXPECTED_TRIALS {
            out.notes.push(ValidationNote::TrialCount { agent_id: id.clone(), count: rows.len() });
        }
        let mut reports = Vec::with_capacity(rows.len());
        for r in &rows {
            let stored = clamp_report(r.reported_trust);
            if stored != r.reported_trust {
                out.notes.push(ValidationNote::Clamped {
                    agent_id: id.clone(),
                    trial: r.trial,
                    original: r.reported_trust,
                    stored,
                });
            }
            reports.push(stored);
        }
        let outcome_classes: Vec<OutcomeClass> = rows.iter().map(|r| r.outcome_class).collect();
        let outcomes = outcome_classes.iter().map(|c| c.detector_outcome()).collect();
        let trajectory = TrustTrajectory::new(id, reports, outcomes).expect("one outcome per report");
        out.agents.push(IngestedAgent { trajectory, outcome_classes, rows });
    }
    out
}

pub fn ingest_trajectories_from<R: Read>(r: R) -> Result<Ingested, TableError> {
    Ok(ingest_rows(read_trajectories(r)?))
}

pub fn ingest_trajectories(path: &Path) -> Result<Ingested, TableError> {
    ingest_trajectories_from(std::fs::File::open(path)?)
}

// -------------------------------------------------------------------- profiles

pub fn write_profiles<W: Write>(w: W, rows: &[(String, CharacteristicsProfile)]) -> Result<(), TableError> {
    let mut header = vec!["agent_id".to_string()];
    header.extend(DIMENSIONS.iter().map(|d| d.name.to_string()));
    write_csv(
        w,
        &header,
        rows.iter().map(|(id, p)| std::iter::once(id.clone()).chain(p.values.iter().map(|v| fmt6(*v))).collect()),
    )
}

pub fn read_profiles<R: Read>(r: R) -> Result<Vec<(String, CharacteristicsProfile)>, TableError> {
    let t = Table::read(r, b',')?;
    t.require(&["agent_id"])?;
    t.require(&DIMENSIONS.map(|d| d.name))?;
    (0..t.len())
        .map(|i| {
            let mut values = [0.0; N_DIMENSIONS];
            for (v, d) in values.iter_mut().zip(DIMENSIONS) {
                *v = t.parse(i, d.name)?;
            }
            Ok((t.str(i, "agent_id")?.to_string(), CharacteristicsProfile { values }))
        })
        .collect()
}

// -------------------------------------------------------------------- schedule

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRow {
    pub agent_id: String,
    pub level: ReliabilityLevel,
    pub trial: usize,
    pub outcome_class: OutcomeClass,
}

pub fn schedule_rows(agent: &AgentRecord) -> Vec<ScheduleRow> {
    agent
        .schedule
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| ScheduleRow {
            agent_id: agent.agent_id.clone(),
            level: agent.schedule.level,
            trial: i + 1,
            outcome_class: t.outcome_class,
        })
        .collect()
}

pub fn write_schedule<W: Write>(w: W, rows: &[ScheduleRow]) -> Result<(), TableError> {
    let header = ["agent_id", "level", "trial", "outcome_class"].map(String::from);
    write_csv(
        w,
        &header,
        rows.iter()
            .map(|r| vec![r.agent_id.clone(), r.level.to_string(), r.trial.to_string(), r.outcome_class.to_string()]),
    )
}

pub fn read_schedule<R: Read>(r: R) -> Result<Vec<ScheduleRow>, TableError> {
    let t = Table::read(r, b',')?;
    t.require(&["agent_id", "level", "trial", "outcome_class"])?;
    (0..t.len())
        .map(|i| {
            Ok(ScheduleRow {
                agent_id: t.str(i, "agent_id")?.to_string(),
                level: t.parse(i, "level")?,
                trial: t.parse(i, "trial")?,
                outcome_class: t.parse(i, "outcome_class")?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------- params

/// The persisted part of a [`FitResult`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSummary {
    pub params: TrustParams,
    pub objective: f64,
    pub converged: bool,
    pub degenerate: Option<Degeneracy>,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self { params: f.params, objective: f.objective_value, converged: f.converged, degenerate: f.degenerate }
    }
}

fn degeneracy_str(d: Option<Degeneracy>) -> &'static str {
    match d {
        None => "none",
        Some(Degeneracy::AllSuccess) => "all_success",
        Some(Degeneracy::AllFailure) => "all_failure",
    }
}

fn parse_degeneracy(s: &str) -> Option<Option<Degeneracy>> {
    match s {
        "none" => Some(None),
        "all_success" => Some(Some(Degeneracy::AllSuccess)),
        "all_failure" => Some(Some(Degeneracy::AllFailure)),
        _ => None,
    }
}

/// One row of `params.csv`: maximum-likelihood and personalized fits of an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsRow {
    pub agent_id: String,
    pub level: Option<ReliabilityLevel>,
    pub mle: FitSummary,
    pub map: FitSummary,
}

const PARAM_NAMES: [&str; 4] = ["alpha0", "beta0", "gain_success", "gain_failure"];

fn fit_columns(prefix: &str, objective: &str) -> Vec<String> {
    let mut c: Vec<String> = PARAM_NAMES.iter().map(|p| format!("{prefix}_{p}")).collect();
    c.push(format!("{prefix}_{objective}"));
    c.push(format!("{prefix}_converged"));
    c.push(format!("{prefix}_degenerate"));
    c
}

fn params_header() -> Vec<String> {
    let mut h = vec!["agent_id".to_string(), "level".to_string()];
    h.extend(fit_columns("mle", "log_likelihood"));
    h.extend(fit_columns("map", "log_posterior"));
    h
}

fn fit_cells(f: &FitSummary) -> Vec<String> {
    let mut c: Vec<String> = f.params.to_array().iter().map(|v| fmt6(*v)).collect();
    c.push(fmt6(f.objective));
    c.push(f.converged.to_string());
    c.push(degeneracy_str(f.degenerate).to_string());
    c
}

pub fn write_params<W: Write>(w: W, rows: &[ParamsRow]) -> Result<(), TableError> {
    write_csv(
        w,
        &params_header(),
        rows.iter().map(|r| {
            let mut c = vec![r.agent_id.clone(), fmt_opt(r.level)];
            c.extend(fit_cells(&r.mle));
            c.extend(fit_cells(&r.map));
            c
        }),
    )
}

fn read_fit(t: &Table, i: usize, prefix: &str, objective: &str) -> Result<FitSummary, TableError> {
    let cols = fit_columns(prefix, objective);
    let mut p = [0.0; 4];
    for (v, c) in p.iter_mut().zip(&cols) {
        *v = t.parse(i, c)?;
    }
    let deg = t.str(i, &cols[6])?;
    Ok(FitSummary {
        params: TrustParams::from_array(p),
        objective: t.parse(i, &cols[4])?,
        converged: t.parse(i, &cols[5])?,
        degenerate: parse_degeneracy(deg).ok_or_else(|| TableError::Value {
            row: i + 1,
            column: cols[6].clone(),
            message: format!("cannot parse '{deg}'"),
        })?,
    })
}

pub fn read_params<R: Read>(r: R) -> Result<Vec<ParamsRow>, TableError> {
    let t = Table::read(r, b',')?;
    let header = params_header();
    t.require(&header.iter().map(|s| s.as_str()).collect::<Vec<_>>())?;
    (0..t.len())
        .map(|i| {
            Ok(ParamsRow {
                agent_id: t.str(i, "agent_id")?.to_string(),
                level: t.parse_opt(i, "level")?,
                mle: read_fit(&t, i, "mle", "log_likelihood")?,
                map: read_fit(&t, i, "map", "log_posterior")?,
            })
        })
        .collect()
}

// ----------------------------------------------------------------- predictions

/// One row of `predictions.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub agent_id: String,
    pub trial: usize,
    pub reported_trust: f64,
    /// Mean trust after this trial's outcome under the agent's final parameters.
    pub predicted_trust: f64,
    /// Prediction made before this trial's report was seen.
    pub online_predicted_trust: f64,
}

const PREDICTION_COLUMNS: [&str; 5] =
    ["agent_id", "trial", "reported_trust", "predicted_trust", "online_predicted_trust"];

pub fn write_predictions<W: Write>(w: W, rows: &[PredictionRow]) -> Result<(), TableError> {
    write_csv(
        w,
        &PREDICTION_COLUMNS.map(String::from),
        rows.iter().map(|r| {
            vec![
                r.agent_id.clone(),
                r.trial.to_string(),
                fmt6(r.reported_trust),
                fmt6(r.predicted_trust),
                fmt6(r.online_predicted_trust),
            ]
        }),
    )
}

pub fn read_predictions<R: Read>(r: R) -> Result<Vec<PredictionRow>, TableError> {
    let t = Table::read(r, b',')?;
    t.require(&PREDICTION_COLUMNS)?;
    (0..t.len())
        .map(|i| {
            Ok(PredictionRow {
                agent_id: t.str(i, "agent_id")?.to_string(),
                trial: t.parse(i, "trial")?,
                reported_trust: t.parse(i, "reported_trust")?,
                predicted_trust: t.parse(i, "predicted_trust")?,
                online_predicted_trust: t.parse(i, "online_predicted_trust")?,
            })
        })
        .collect()
}

/// Group rows by agent in order of first appearance, trials ascending.
pub fn group_predictions(rows: Vec<PredictionRow>) -> Vec<(String, Vec<PredictionRow>)> {
    let mut out: Vec<(String, Vec<PredictionRow>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for r in rows {
        let slot = *index.entry(r.agent_id.clone()).or_insert_with(|| {
            out.push((r.agent_id.clone(), Vec::new()));
            out.len() - 1
        });
        out[slot].1.push(r);
    }
    for (_, rows) in &mut out {
        rows.sort_by_key(|r| r.trial);
    }
    out
}

// -------------------------------------------------------------------- clusters

/// One row of `clusters.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRow {
    pub agent_id: String,
    pub label: Archetype,
    pub features: TrajectoryFeatures,
    pub centroid_distance: f64,
}

const CLUSTER_COLUMNS: [&str; 5] = ["agent_id", "label", "avg_log_trust", "rmse", "centroid_distance"];

pub fn write_clusters<W: Write>(w: W, rows: &[ClusterRow]) -> Result<(), TableError> {
    write_csv(
        w,
        &CLUSTER_COLUMNS.map(String::from),
        rows.iter().map(|r| {
            vec![
                r.agent_id.clone(),
                r.label.to_string(),
                fmt6(r.features.avg_log_trust),
                fmt6(r.features.rmse),
                fmt6(r.centroid_distance),
            ]
        }),
    )
}

pub fn read_clusters<R: Read>(r: R) -> Result<Vec<ClusterRow>, TableError> {
    let t = Table::read(r, b',')?;
    t.require(&CLUSTER_COLUMNS)?;
    (0..t.len())
        .map(|i| {
            Ok(ClusterRow {
                agent_id: t.str(i, "agent_id")?.to_string(),
                label: t.parse(i, "label")?,
                features: TrajectoryFeatures { avg_log_trust: t.parse(i, "avg_log_trust")?, rmse: t.parse(i, "rmse")? },
                centroid_distance: t.parse(i, "centroid_distance")?,
            })
        })
        .collect()
}

// ----------------------------------------------------------------------- scree

/// One point of a scree curve; `scope` is `pooled` or a reliability level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeRow {
    pub scope: String,
    pub k: usize,
    pub wcss: f64,
}

pub fn write_scree<W: Write>(w: W, rows: &[ScreeRow]) -> Result<(), TableError> {
    write_csv(
        w,
        &["scope", "k", "wcss"].map(String::from),
        rows.iter().map(|r| vec![r.scope.clone(), r.k.to_string(), fmt6(r.wcss)]),
    )
}

pub fn read_scree<R: Read>(r: R) -> Result<Vec<ScreeRow>, TableError> {
    let t = Table::read(r, b',')?;
    t.require(&["scope", "k", "wcss"])?;
    (0..t.len())
        .map(|i| Ok(ScreeRow { scope: t.str(i, "scope")?.to_string(), k: t.parse(i, "k")?, wcss: t.parse(i, "wcss")? }))
        .collect()
}

// ------------------------------------------------------------- key/value files

/// Two-column `metric,value` file (used for `eval.csv`).
pub fn write_key_values<W: Write>(w: W, rows: &[(String, String)]) -> Result<(), TableError> {
    write_csv(w, &["metric", "value"].map(String::from), rows.iter().map(|(k, v)| vec![k.clone(), v.clone()]))
}

pub fn read_key_values<R: Read>(r: R) -> Result<Vec<(String, String)>, TableError> {
    let t = Table::read(r, b',')?;
    t.require(&["metric", "value"])?;
    (0..t.len()).map(|i| Ok((t.str(i, "metric")?.to_string(), t.str(i, "value")?.to_string()))).collect()
}

// ---------------------------------------------------------------------- report

/// One line of a per-agent report: trial, reported trust, model trust and
/// whether the detector was right.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub trial: usize,
    pub reported_trust: f64,
    pub predicted_trust: f64,
    pub success: bool,
}

pub fn write_report_tsv<W: Write>(w: W, rows: &[ReportRow]) -> Result<(), TableError> {
    let mut out = csv::WriterBuilder::new().delimiter(b'\t').terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["trial", "reported_trust", "predicted_trust", "outcome_success"])?;
    for r in rows {
        out.write_record([
            r.trial.to_string(),
            fmt6(r.reported_trust),
            fmt6(r.predicted_trust),
            u8::from(r.success).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_report_tsv<R: Read>(r: R) -> Result<Vec<ReportRow>, TableError> {
    let t = Table::read(r, b'\t')?;
    t.require(&["trial", "reported_trust", "predicted_trust", "outcome_success"])?;
    (0..t.len())
        .map(|i| {
            Ok(ReportRow {
                trial: t.parse(i, "trial")?,
                reported_trust: t.parse(i, "reported_trust")?,
                predicted_trust: t.parse(i, "predicted_trust")?,
                success: t.parse::<u8>(i, "outcome_success")? == 1,
            })
        })
        .collect()
}

//! Between-cluster statistics: one-way ANOVA, Bonferroni-corrected pairwise
//! t-tests, chi-squared independence and per-cluster summary tables.

use thiserror::Error;

use crate::profile::{CharacteristicsProfile, DIMENSIONS};
use crate::special::{reg_inc_beta, reg_inc_gamma_upper};
use crate::Archetype;

/// Placeholder for statistics that are undefined for a cluster.
pub const MISSING: &str = "NA";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {group} has {size} observations, need at least 2")]
    GroupTooSmall { group: usize, size: usize },
    #[error("contingency table has an empty row or column")]
    DegenerateMargins,
    #[error("contingency table rows differ in length")]
    RaggedTable,
    #[error("{values} values but {labels} labels")]
    LengthMismatch { values: usize, labels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    /// All groups are internally constant; `f_stat` is infinite when the
    /// group means differ and zero when they do not.
    pub zero_within_variance: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Survival function of the F distribution.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Two-sided p-value of Student's t.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(0.5 * df, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Survival function of the chi-squared distribution.
pub fn chi2_survival(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_inc_gamma_upper(0.5 * df, 0.5 * x).clamp(0.0, 1.0)
}

fn check_groups(groups: &[&[f64]]) -> Result<(), AnalysisError> {
    if groups.len() < 2 {
        return Err(AnalysisError::TooFewGroups(groups.len()));
    }
    if let Some((group, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < 2) {
        return Err(AnalysisError::GroupTooSmall { group, size: g.len() });
    }
    Ok(())
}

/// Classical one-way ANOVA, `F = MS_between / MS_within`.
pub fn one_way_anova(groups: &[&[f64]]) -> Result<AnovaResult, AnalysisError> {
    check_groups(groups)?;
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += sum_sq_dev(g, m);
    }
    let df_between = groups.len() - 1;
    let df_within = n - groups.len();
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    // Scale-aware zero test so that rounding residue in the means does not
    // masquerade as a tiny between-group effect.
    let scale = groups.iter().flat_map(|g| g.iter()).map(|x| (x - grand).abs()).fold(0.0, f64::max).max(grand.abs());
    let tiny = (f64::EPSILON * scale).powi(2) * n as f64 * 16.0;
    let between_zero = ss_between <= tiny;
    if ss_within <= tiny {
        let f_stat = if between_zero { 0.0 } else { f64::INFINITY };
        return Ok(AnovaResult {
            f_stat,
            df_between,
            df_within,
            p_value: if between_zero { 1.0 } else { 0.0 },
            zero_within_variance: true,
        });
    }
    let f_stat = if between_zero { 0.0 } else { ms_between / ms_within };
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        p_value: f_survival(f_stat, df_between as f64, df_within as f64),
        zero_within_variance: false,
    })
}

/// Pooled-variance two-sample t-test between groups `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTest {
    pub a: usize,
    pub b: usize,
    pub t_stat: f64,
    pub df: usize,
    pub raw_p: f64,
    /// `min(1, raw_p * number_of_pairs)`.
    pub adjusted_p: f64,
}

/// Two-sided pooled-variance t statistic and its p-value.
pub fn pooled_t_test(x: &[f64], y: &[f64]) -> (f64, usize, f64) {
    let (mx, my) = (mean(x), mean(y));
    let df = x.len() + y.len() - 2;
    let sp2 = (sum_sq_dev(x, mx) + sum_sq_dev(y, my)) / df as f64;
    let diff = mx - my;
    let se = (sp2 * (1.0 / x.len() as f64 + 1.0 / y.len() as f64)).sqrt();
    let t = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    (t, df, t_two_sided(t, df as f64))
}

/// All pairs `(i, j)`, `i < j`, in lexicographic order, with Bonferroni adjustment.
pub fn pairwise_bonferroni(groups: &[&[f64]]) -> Result<Vec<PairTest>, AnalysisError> {
    check_groups(groups)?;
    let m = groups.len() * (groups.len() - 1) / 2;
    let mut out = Vec::with_capacity(m);
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let (t_stat, df, raw_p) = pooled_t_test(groups[a], groups[b]);
            out.push(PairTest { a, b, t_stat, df, raw_p, adjusted_p: (raw_p * m as f64).min(1.0) });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContingencyResult {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson chi-squared test of independence on a count table.
pub fn chi_squared_independence(table: &[Vec<u64>]) -> Result<ContingencyResult, AnalysisError> {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.len());
    if table.iter().any(|r| r.len() != cols) {
        return Err(AnalysisError::RaggedTable);
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    if rows == 0 || cols == 0 || row_sums.contains(&0.0) || col_sums.contains(&0.0) {
        return Err(AnalysisError::DegenerateMargins);
    }
    let total: f64 = row_sums.iter().sum();
    let mut chi2 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = row_sums[i] * col_sums[j] / total;
            chi2 += (o as f64 - e).powi(2) / e;
        }
    }
    // Proportional tables can leave rounding residue far below one count.
    if chi2 < 1e-12 {
        chi2 = 0.0;
    }
    let df = (rows - 1) * (cols - 1);
    let p_value = if df == 0 { 1.0 } else { chi2_survival(chi2, df as f64) };
    Ok(ContingencyResult { chi2, df, p_value })
}

/// Size, mean and sample SD (n − 1) of one cluster's values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl GroupStats {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let m = (n > 0).then(|| mean(xs));
        let sd = (n > 1).then(|| (sum_sq_dev(xs, m.unwrap_or(0.0)) / (n - 1) as f64).sqrt());
        Self { n, mean: m, sd }
    }
}

/// Format a statistic with six decimals, or the missing marker.
pub fn fmt_stat(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        Some(x) if x.is_nan() => MISSING.to_string(),
        Some(x) => if x > 0.0 { "inf" } else { "-inf" }.to_string(),
        None => MISSING.to_string(),
    }
}

/// Split `values` into per-archetype groups.
pub fn group_by_label(values: &[f64], labels: &[Archetype]) -> Result<[Vec<f64>; 3], AnalysisError> {
    if values.len() != labels.len() {
        return Err(AnalysisError::LengthMismatch { values: values.len(), labels: labels.len() });
    }
    let mut groups: [Vec<f64>; 3] = Default::default();
    for (v, l) in values.iter().zip(labels) {
        groups[l.index()].push(*v);
    }
    Ok(groups)
}

/// Per-archetype summary of one named measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub stats: [GroupStats; 3],
}

/// Mean and SD of every profile dimension per cluster, in dimension order.
pub fn summary_table(
    profiles: &[CharacteristicsProfile],
    labels: &[Archetype],
) -> Result<Vec<SummaryRow>, AnalysisError> {
    if profiles.len() != labels.len() {
        return Err(AnalysisError::LengthMismatch { values: profiles.len(), labels: labels.len() });
    }
    DIMENSIONS
        .iter()
        .enumerate()
        .map(|(d, dim)| {
            let values: Vec<f64> = profiles.iter().map(|p| p.values[d]).collect();
            let groups = group_by_label(&values, labels)?;
            Ok(SummaryRow { name: dim.name.to_string(), stats: std::array::from_fn(|c| GroupStats::of(&groups[c])) })
        })
        .collect()
}

/// Summary, ANOVA and post-hoc tests for one measure across the three archetypes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub summary: SummaryRow,
    /// `None` when a cluster has fewer than two members.
    pub anova: Option<AnovaResult>,
    /// Adjusted p for (BDM, disbeliever), (BDM, oscillator), (disbeliever, oscillator).
    pub pairwise: Option<[f64; 3]>,
}

/// Run the full comparison for each `(name, values)` measure.
pub fn analyze_measures(
    measures: &[(String, Vec<f64>)],
    labels: &[Archetype],
) -> Result<Vec<AnalysisRow>, AnalysisError> {
    measures
        .iter()
        .map(|(name, values)| {
            let groups = group_by_label(values, labels)?;
            let refs: Vec<&[f64]> = groups.iter().map(|g| g.as_slice()).collect();
            let anova = one_way_anova(&refs).ok();
            let pairwise = pairwise_bonferroni(&refs).ok().map(|p| [p[0].adjusted_p, p[1].adjusted_p, p[2].adjusted_p]);
            Ok(AnalysisRow {
                summary: SummaryRow { name: name.clone(), stats: std::array::from_fn(|c| GroupStats::of(&groups[c])) },
                anova,
                pairwise,
            })
        })
        .collect()
}

/// Header of the analysis report CSV.
pub fn report_header() -> Vec<String> {
    let mut h = vec!["measure".to_string()];
    for a in Archetype::ALL {
        h.push(format!("{a}_n"));
        h.push(format!("{a}_mean"));
        h.push(format!("{a}_sd"));
    }
    h.extend(["f_stat", "df_between", "df_within", "p_value", "zero_within_variance"].map(String::from));
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        h.push(format!("p_adj_{}_{}", Archetype::ALL[a], Archetype::ALL[b]));
    }
    h
}

/// One CSV record matching [`report_header`].
pub fn report_record(row: &AnalysisRow) -> Vec<String> {
    let mut r = vec![row.summary.name.clone()];
    for s in &row.summary.stats {
        r.push(s.n.to_string());
        r.push(fmt_stat(s.mean));
        r.push(fmt_stat(s.sd));
    }
    match &row.anova {
        Some(a) => {
            r.push(fmt_stat(Some(a.f_stat)));
            r.push(a.df_between.to_string());
            r.push(a.df_within.to_string());
            r.push(fmt_stat(Some(a.p_value)));
            r.push(a.zero_within_variance.to_string());
        }
        None => r.extend(std::iter::repeat_n(MISSING.to_string(), 5)),
    }
    match &row.pairwise {
        Some(p) => r.extend(p.iter().map(|v| fmt_stat(Some(*v)))),
        None => r.extend(std::iter::repeat_n(MISSING.to_string(), 3)),
    }
    r
}

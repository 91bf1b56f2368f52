//! Study-level aggregation: per-condition tables, repeated-measures ANOVA
//! per metric and paired t-tests.
//!
//! Report files:
//!
//! * `sessions.csv` – one row per session;
//! * `conditions.csv` – per-condition mean and sd of every metric;
//! * `anova.csv` – one row per analysed metric;
//! * `ttests.csv` – baseline-vs-heuristic and observed-vs-unaltered tests;
//! * `composition.csv` – pooled error composition per condition;
//! * `summary.txt` – the same results as plain text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{ErrorComposition, SessionMetrics};
use crate::stats::{mean, paired_t, rm_anova, sample_sd, StatResult};
use crate::task::Condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Throughput,
    ErrorRate,
    LateRate,
    EarlyRate,
    OtherRate,
    SelectionTime,
    ErrorReduction,
    UnalteredErrorRate,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Throughput,
        Metric::ErrorRate,
        Metric::LateRate,
        Metric::EarlyRate,
        Metric::OtherRate,
        Metric::SelectionTime,
        Metric::ErrorReduction,
        Metric::UnalteredErrorRate,
    ];

    /// Metrics compared across all conditions.
    pub const ACROSS_CONDITIONS: [Metric; 5] =
        [Metric::Throughput, Metric::ErrorRate, Metric::LateRate, Metric::EarlyRate, Metric::SelectionTime];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Throughput => "throughput_bps",
            Metric::ErrorRate => "error_rate_pct",
            Metric::LateRate => "late_rate_pct",
            Metric::EarlyRate => "early_rate_pct",
            Metric::OtherRate => "other_rate_pct",
            Metric::SelectionTime => "mean_selection_time_ms",
            Metric::ErrorReduction => "error_reduction",
            Metric::UnalteredErrorRate => "unaltered_error_rate_pct",
        }
    }

    pub fn value(self, m: &SessionMetrics) -> f64 {
        match self {
            Metric::Throughput => m.throughput_bps,
            Metric::ErrorRate => m.error_rate_pct,
            Metric::LateRate => m.late_rate_pct,
            Metric::EarlyRate => m.early_rate_pct,
            Metric::OtherRate => m.other_rate_pct,
            Metric::SelectionTime => m.mean_selection_time_ms,
            Metric::ErrorReduction => m.error_reduction as f64,
            Metric::UnalteredErrorRate => m.unaltered_error_rate_pct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub metric: Metric,
    pub n: usize,
    pub mean: f64,
    /// Absent with fewer than two subjects.
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Ok,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub metric: Metric,
    pub conditions: Vec<Condition>,
    pub status: TestStatus,
    pub result: Option<StatResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTestRow {
    pub metric: Metric,
    /// `x` and `y` of the paired difference `x - y`.
    pub x: String,
    pub y: String,
    pub status: TestStatus,
    pub result: Option<StatResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionRow {
    pub condition: Condition,
    pub mean_error_rate_pct: f64,
    /// Pooled over every session of the condition.
    pub pooled: ErrorComposition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub subjects: Vec<String>,
    pub conditions: Vec<Condition>,
    pub sessions: Vec<SessionMetrics>,
    pub summaries: Vec<ConditionSummary>,
    pub anova: Vec<AnovaRow>,
    pub ttests: Vec<TTestRow>,
    pub composition: Vec<CompositionRow>,
}

/// Subject × condition cell values, averaged over blocks.
struct Cells {
    subjects: Vec<String>,
    conditions: Vec<Condition>,
    values: BTreeMap<(String, Condition), Vec<SessionMetrics>>,
}

impl Cells {
    fn build(sessions: &[SessionMetrics]) -> Result<Self> {
        let mut values: BTreeMap<(String, Condition), Vec<SessionMetrics>> = BTreeMap::new();
        for s in sessions {
            values.entry((s.subject_id.clone(), s.condition)).or_default().push(s.clone());
        }
        let subjects: Vec<String> =
            sessions.iter().map(|s| s.subject_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let conditions: Vec<Condition> =
            sessions.iter().map(|s| s.condition).collect::<BTreeSet<_>>().into_iter().collect();
        let missing: Vec<String> = subjects
            .iter()
            .flat_map(|s| conditions.iter().map(move |c| (s, c)))
            .filter(|(s, c)| !values.contains_key(&((*s).clone(), **c)))
            .map(|(s, c)| format!("subject {s} × {c}"))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingCells(missing));
        }
        Ok(Self { subjects, conditions, values })
    }

    fn value(&self, subject: &str, condition: Condition, metric: Metric) -> f64 {
        let v: Vec<f64> = self.values[&(subject.to_string(), condition)].iter().map(|m| metric.value(m)).collect();
        mean(&v)
    }

    fn column(&self, condition: Condition, metric: Metric) -> Vec<f64> {
        self.subjects.iter().map(|s| self.value(s, condition, metric)).collect()
    }

    fn matrix(&self, conditions: &[Condition], metric: Metric) -> Vec<Vec<f64>> {
        self.subjects.iter().map(|s| conditions.iter().map(|&c| self.value(s, c, metric)).collect()).collect()
    }
}

fn anova_row(cells: &Cells, conditions: Vec<Condition>, metric: Metric) -> Result<AnovaRow> {
    match rm_anova(&cells.matrix(&conditions, metric)) {
        Ok(r) => Ok(AnovaRow { metric, conditions, status: TestStatus::Ok, result: Some(r) }),
        Err(Error::Degenerate(_)) => Ok(AnovaRow { metric, conditions, status: TestStatus::Degenerate, result: None }),
        Err(e) => Err(e),
    }
}

fn ttest_row(metric: Metric, x_name: String, x: &[f64], y_name: String, y: &[f64]) -> Result<TTestRow> {
    let (status, result) = match paired_t(x, y) {
        Ok(r) => (TestStatus::Ok, Some(r)),
        Err(Error::Degenerate(_)) => (TestStatus::Degenerate, None),
        Err(e) => return Err(e),
    };
    Ok(TTestRow { metric, x: x_name, y: y_name, status, result })
}

/// Aggregates per-session metrics into a study report.
///
/// Every subject must contribute every condition present in `sessions`;
/// several blocks of one cell are averaged.
pub fn aggregate_report(sessions: &[SessionMetrics]) -> Result<Report> {
    if sessions.is_empty() {
        return Err(Error::EmptyMetric("report: no sessions".into()));
    }
    let cells = Cells::build(sessions)?;
    if cells.subjects.len() < 2 {
        return Err(Error::invalid("report needs at least two subjects"));
    }

    let mut sorted = sessions.to_vec();
    sort_sessions(&mut sorted);

    let mut summaries = Vec::new();
    for &c in &cells.conditions {
        for metric in Metric::ALL {
            let col = cells.column(c, metric);
            summaries.push(ConditionSummary {
                condition: c,
                metric,
                n: col.len(),
                mean: mean(&col),
                sd: (col.len() > 1).then(|| sample_sd(&col)),
            });
        }
    }

    let mut anova = Vec::new();
    if cells.conditions.len() >= 2 {
        for metric in Metric::ACROSS_CONDITIONS {
            anova.push(anova_row(&cells, cells.conditions.clone(), metric)?);
        }
    }
    let heuristic: Vec<Condition> = cells.conditions.iter().copied().filter(|&c| c != Condition::None).collect();
    if heuristic.len() >= 2 {
        anova.push(anova_row(&cells, heuristic.clone(), Metric::ErrorReduction)?);
    }

    let mut ttests = Vec::new();
    if cells.conditions.contains(&Condition::None) {
        for metric in Metric::ACROSS_CONDITIONS {
            let base = cells.column(Condition::None, metric);
            for &c in &heuristic {
                ttests.push(ttest_row(
                    metric,
                    Condition::None.to_string(),
                    &base,
                    c.to_string(),
                    &cells.column(c, metric),
                )?);
            }
        }
    }
    for &c in &heuristic {
        ttests.push(ttest_row(
            Metric::ErrorRate,
            format!("{c}:observed"),
            &cells.column(c, Metric::ErrorRate),
            format!("{c}:unaltered"),
            &cells.column(c, Metric::UnalteredErrorRate),
        )?);
    }

    let mut composition = Vec::new();
    for &c in &cells.conditions {
        let in_c: Vec<&SessionMetrics> = sorted.iter().filter(|s| s.condition == c).collect();
        let sum = |f: fn(&SessionMetrics) -> usize| in_c.iter().map(|s| f(s)).sum::<usize>();
        let pooled = ErrorComposition::from_counts(
            sum(|s| s.selections),
            sum(|s| s.late_errors),
            sum(|s| s.early_errors),
            sum(|s| s.other_errors),
        )?;
        composition.push(CompositionRow {
            condition: c,
            mean_error_rate_pct: mean(&cells.column(c, Metric::ErrorRate)),
            pooled,
        });
    }

    Ok(Report {
        subjects: cells.subjects,
        conditions: cells.conditions,
        sessions: sorted,
        summaries,
        anova,
        ttests,
        composition,
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn join_conditions(cs: &[Condition]) -> String {
    cs.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(";")
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    write_csv_to(fs::File::create(path)?, header, rows)
}

fn write_csv_to<W: std::io::Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub const SESSION_COLUMNS: [&str; 23] = [
    "session_id",
    "subject_id",
    "condition",
    "block_index",
    "aborted",
    "selections",
    "throughput_bps",
    "throughput_trials_excluded",
    "error_rate_pct",
    "late_rate_pct",
    "early_rate_pct",
    "other_rate_pct",
    "late_of_selections_pct",
    "early_of_selections_pct",
    "other_of_selections_pct",
    "mean_selection_time_ms",
    "errors_observed",
    "errors_would_be",
    "error_reduction",
    "unaltered_error_rate_pct",
    "late_errors",
    "early_errors",
    "other_errors",
];

pub fn session_row(s: &SessionMetrics) -> Vec<String> {
    vec![
        s.session_id.clone(),
        s.subject_id.clone(),
        s.condition.to_string(),
        s.block_index.to_string(),
        s.aborted.to_string(),
        s.selections.to_string(),
        num(s.throughput_bps),
        s.throughput_trials_excluded.to_string(),
        num(s.error_rate_pct),
        num(s.late_rate_pct),
        num(s.early_rate_pct),
        num(s.other_rate_pct),
        num(s.late_of_selections_pct),
        num(s.early_of_selections_pct),
        num(s.other_of_selections_pct),
        num(s.mean_selection_time_ms),
        s.errors_observed.to_string(),
        s.errors_would_be.to_string(),
        s.error_reduction.to_string(),
        num(s.unaltered_error_rate_pct),
        s.late_errors.to_string(),
        s.early_errors.to_string(),
        s.other_errors.to_string(),
    ]
}

/// Canonical row order: subject, condition, block.
pub fn sort_sessions(sessions: &mut [SessionMetrics]) {
    sessions.sort_by(|a, b| {
        (&a.subject_id, a.condition, a.block_index, &a.session_id).cmp(&(
            &b.subject_id,
            b.condition,
            b.block_index,
            &b.session_id,
        ))
    });
}

pub fn write_sessions_csv(sessions: &[SessionMetrics], path: &Path) -> Result<()> {
    write_csv(path, &SESSION_COLUMNS, sessions.iter().map(session_row).collect())
}

pub fn write_sessions_csv_to<W: std::io::Write>(sessions: &[SessionMetrics], out: W) -> Result<()> {
    write_csv_to(out, &SESSION_COLUMNS, sessions.iter().map(session_row).collect())
}

/// Writes every report file into `dir`, creating it if needed.
pub fn write_report(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_sessions_csv(&report.sessions, &dir.join("sessions.csv"))?;

    write_csv(
        &dir.join("conditions.csv"),
        &["condition", "metric", "n", "mean", "sd"],
        report
            .summaries
            .iter()
            .map(|s| vec![s.condition.to_string(), s.metric.as_str().into(), s.n.to_string(), num(s.mean), opt(s.sd)])
            .collect(),
    )?;

    write_csv(
        &dir.join("anova.csv"),
        &["metric", "conditions", "status", "F", "df1", "df2", "p", "ges"],
        report
            .anova
            .iter()
            .map(|a| {
                let r = a.result;
                vec![
                    a.metric.as_str().into(),
                    join_conditions(&a.conditions),
                    status_str(a.status).into(),
                    opt(r.map(|r| r.statistic)),
                    opt(r.map(|r| r.df1)),
                    opt(r.and_then(|r| r.df2)),
                    opt(r.map(|r| r.p_value)),
                    opt(r.map(|r| r.effect)),
                ]
            })
            .collect(),
    )?;

    write_csv(
        &dir.join("ttests.csv"),
        &["metric", "x", "y", "status", "t", "df", "p", "mean_diff"],
        report
            .ttests
            .iter()
            .map(|t| {
                let r = t.result;
                vec![
                    t.metric.as_str().into(),
                    t.x.clone(),
                    t.y.clone(),
                    status_str(t.status).into(),
                    opt(r.map(|r| r.statistic)),
                    opt(r.map(|r| r.df1)),
                    opt(r.map(|r| r.p_value)),
                    opt(r.map(|r| r.effect)),
                ]
            })
            .collect(),
    )?;

    write_csv(
        &dir.join("composition.csv"),
        &[
            "condition",
            "mean_error_rate_pct",
            "selections",
            "errors",
            "late_pct_of_errors",
            "early_pct_of_errors",
            "other_pct_of_errors",
            "late_pct_of_selections",
            "early_pct_of_selections",
            "other_pct_of_selections",
        ],
        report
            .composition
            .iter()
            .map(|c| {
                let p = &c.pooled;
                vec![
                    c.condition.to_string(),
                    num(c.mean_error_rate_pct),
                    p.selections.to_string(),
                    p.errors.to_string(),
                    num(p.late_rate_pct),
                    num(p.early_rate_pct),
                    num(p.other_rate_pct),
                    num(p.late_of_selections_pct),
                    num(p.early_of_selections_pct),
                    num(p.other_of_selections_pct),
                ]
            })
            .collect(),
    )?;

    fs::write(dir.join("summary.txt"), render_summary(report))?;
    Ok(())
}

fn status_str(s: TestStatus) -> &'static str {
    match s {
        TestStatus::Ok => "ok",
        TestStatus::Degenerate => "degenerate",
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "< .001".into()
    } else {
        format!("= {p:.3}")
    }
}

pub fn render_summary(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} subjects, {} conditions, {} sessions",
        report.subjects.len(),
        report.conditions.len(),
        report.sessions.len()
    );
    let _ = writeln!(s, "\nCondition means (sd)");
    for &c in &report.conditions {
        let _ = writeln!(s, "  {c}");
        for sm in report.summaries.iter().filter(|x| x.condition == c) {
            let sd = sm.sd.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(s, "    {:<26} {:>10.3} ({sd})", sm.metric.as_str(), sm.mean);
        }
    }
    let _ = writeln!(s, "\nRepeated-measures ANOVA");
    for a in &report.anova {
        match a.result {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "  {:<26} F({}, {}) = {:.2}, p {}, ges = {:.3}",
                    a.metric.as_str(),
                    r.df1,
                    r.df2.unwrap_or(f64::NAN),
                    r.statistic,
                    fmt_p(r.p_value),
                    r.effect
                );
            }
            None => {
                let _ = writeln!(s, "  {:<26} degenerate", a.metric.as_str());
            }
        }
    }
    let _ = writeln!(s, "\nPaired t-tests (x - y)");
    for t in &report.ttests {
        let label = format!("{} {} vs {}", t.metric.as_str(), t.x, t.y);
        match t.result {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "  {label:<58} t({}) = {:.2}, p {}, Mdiff = {:.3}",
                    r.df1,
                    r.statistic,
                    fmt_p(r.p_value),
                    r.effect
                );
            }
            None => {
                let _ = writeln!(s, "  {label:<58} degenerate");
            }
        }
    }
    let _ = writeln!(s, "\nError composition (pooled, % of errors: late / early / other)");
    for c in &report.composition {
        let p = &c.pooled;
        let _ = writeln!(
            s,
            "  {:<16} error rate {:>6.2}%  {:>6.2} / {:>6.2} / {:>6.2}",
            c.condition.as_str(),
            c.mean_error_rate_pct,
            p.late_rate_pct,
            p.early_rate_pct,
            p.other_rate_pct
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(subject: &str, c: Condition, x: f64) -> SessionMetrics {
        SessionMetrics {
            session_id: format!("{subject}-{c}"),
            subject_id: subject.into(),
            condition: c,
            block_index: 0,
            aborted: false,
            selections: 90,
            throughput_bps: 3.0 + x,
            throughput_trials_excluded: 0,
            error_rate_pct: 10.0 + x,
            late_rate_pct: 20.0,
            early_rate_pct: 30.0,
            other_rate_pct: 50.0,
            late_of_selections_pct: 2.0,
            early_of_selections_pct: 3.0,
            other_of_selections_pct: 5.0,
            mean_selection_time_ms: 500.0 + x,
            errors_observed: 9,
            errors_would_be: 9,
            error_reduction: 0,
            unaltered_error_rate_pct: 10.0 + x,
            late_errors: 2,
            early_errors: 3,
            other_errors: 4,
        }
    }

    #[test]
    fn missing_cells_are_listed() {
        let s = vec![
            metrics("a", Condition::None, 0.0),
            metrics("a", Condition::Sticky, 0.0),
            metrics("b", Condition::None, 1.0),
        ];
        match aggregate_report(&s) {
            Err(Error::MissingCells(cells)) => assert_eq!(cells, vec!["subject b × sticky".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_conditions_give_null_results() {
        let s: Vec<SessionMetrics> = ["a", "b", "c"]
            .iter()
            .enumerate()
            .flat_map(|(i, subj)| Condition::ALL.map(|c| metrics(subj, c, i as f64)))
            .collect();
        let r = aggregate_report(&s).unwrap();
        assert_eq!(r.anova.len(), 6);
        for a in &r.anova {
            let res = a.result.unwrap();
            assert_eq!((res.statistic, res.p_value), (0.0, 1.0));
        }
        assert!(r.ttests.iter().all(|t| t.status == TestStatus::Degenerate));
    }
}

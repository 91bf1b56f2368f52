//! Per-session metrics.

use serde::{Deserialize, Serialize};

use crate::classify::{OutcomeClass, SelectionRecord};
use crate::error::{Error, Result};
use crate::io::SessionLog;
use crate::task::{Condition, RingSchedule};

/// Shannon index of difficulty, bits.
pub fn fitts_id(amplitude: f64, width: f64) -> f64 {
    (amplitude / width + 1.0).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub bits_per_s: f64,
    pub trials_used: usize,
    /// Trials with no gaze entry or a non-positive movement time.
    pub trials_excluded: usize,
}

/// Mean of per-trial `ID / MT` over `(amplitude, width, movement_time_ms)`
/// triples; `None` movement times are excluded.
pub fn mean_throughput<I>(trials: I) -> Result<Throughput>
where
    I: IntoIterator<Item = (f64, f64, Option<f64>)>,
{
    let mut sum = 0.0;
    let mut used = 0;
    let mut excluded = 0;
    for (a, w, mt) in trials {
        match mt.filter(|&m| m > 0.0 && m.is_finite()) {
            Some(mt) => {
                sum += fitts_id(a, w) / (mt / 1000.0);
                used += 1;
            }
            None => excluded += 1,
        }
    }
    if used == 0 {
        return Err(Error::EmptyMetric(format!("throughput: no trial has a gaze entry ({excluded} excluded)")));
    }
    Ok(Throughput { bits_per_s: sum / used as f64, trials_used: used, trials_excluded: excluded })
}

/// Throughput of a session's records under its ring schedule.
pub fn throughput(records: &[SelectionRecord], schedule: &RingSchedule) -> Result<Throughput> {
    let layouts = schedule.layouts()?;
    let mut trials = Vec::with_capacity(records.len());
    for r in records {
        let layout = layouts.get(r.round).ok_or_else(|| Error::invalid(format!("no layout for round {}", r.round)))?;
        trials.push((schedule.amplitude(layout, r.trial), layout.target_width(), r.movement_time_ms()));
    }
    mean_throughput(trials)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorComposition {
    pub selections: usize,
    pub errors: usize,
    pub late: usize,
    pub early: usize,
    pub other: usize,
    pub error_rate_pct: f64,
    /// Shares of errors; all zero when there are no errors.
    pub late_rate_pct: f64,
    pub early_rate_pct: f64,
    pub other_rate_pct: f64,
    /// Shares of all selections.
    pub late_of_selections_pct: f64,
    pub early_of_selections_pct: f64,
    pub other_of_selections_pct: f64,
}

impl ErrorComposition {
    pub fn from_counts(selections: usize, late: usize, early: usize, other: usize) -> Result<Self> {
        if selections == 0 {
            return Err(Error::EmptyMetric("error composition: no selections".into()));
        }
        let errors = late + early + other;
        if errors > selections {
            return Err(Error::invalid("more errors than selections"));
        }
        let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        Ok(Self {
            selections,
            errors,
            late,
            early,
            other,
            error_rate_pct: pct(errors, selections),
            late_rate_pct: pct(late, errors),
            early_rate_pct: pct(early, errors),
            other_rate_pct: pct(other, errors),
            late_of_selections_pct: pct(late, selections),
            early_of_selections_pct: pct(early, selections),
            other_of_selections_pct: pct(other, selections),
        })
    }
}

fn count_outcomes(outcomes: impl Iterator<Item = OutcomeClass>) -> (usize, usize, usize, usize) {
    let (mut n, mut late, mut early, mut other) = (0, 0, 0, 0);
    for o in outcomes {
        n += 1;
        match o {
            OutcomeClass::Correct => {}
            OutcomeClass::LateTrigger => late += 1,
            OutcomeClass::EarlyTrigger => early += 1,
            OutcomeClass::OtherError => other += 1,
        }
    }
    (n, late, early, other)
}

/// Composition of the observed (effective) outcomes.
pub fn error_composition(records: &[SelectionRecord]) -> Result<ErrorComposition> {
    let (n, l, e, o) = count_outcomes(records.iter().map(|r| r.outcome_effective));
    ErrorComposition::from_counts(n, l, e, o)
}

/// Composition of the outcomes a raw gaze selection would have had.
pub fn unaltered_composition(records: &[SelectionRecord]) -> Result<ErrorComposition> {
    let (n, l, e, o) = count_outcomes(records.iter().map(|r| r.outcome_raw));
    ErrorComposition::from_counts(n, l, e, o)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_id: String,
    pub subject_id: String,
    pub condition: Condition,
    pub block_index: u32,
    pub aborted: bool,
    pub selections: usize,
    pub throughput_bps: f64,
    pub throughput_trials_excluded: usize,
    pub error_rate_pct: f64,
    pub late_rate_pct: f64,
    pub early_rate_pct: f64,
    pub other_rate_pct: f64,
    pub late_of_selections_pct: f64,
    pub early_of_selections_pct: f64,
    pub other_of_selections_pct: f64,
    pub mean_selection_time_ms: f64,
    pub errors_observed: usize,
    pub errors_would_be: usize,
    pub error_reduction: i64,
    pub unaltered_error_rate_pct: f64,
    pub late_errors: usize,
    pub early_errors: usize,
    pub other_errors: usize,
}

impl SessionMetrics {
    pub fn compute(log: &SessionLog) -> Result<Self> {
        let m = &log.manifest;
        let records = &log.selections;
        let comp =
            error_composition(records).map_err(|e| Error::EmptyMetric(format!("session {}: {e}", m.session_id)))?;
        let raw = unaltered_composition(records)?;
        let tp =
            throughput(records, &m.layout).map_err(|e| Error::EmptyMetric(format!("session {}: {e}", m.session_id)))?;
        let mean_sel = records.iter().map(SelectionRecord::selection_time_ms).sum::<f64>() / records.len() as f64;
        Ok(Self {
            session_id: m.session_id.clone(),
            subject_id: m.subject_id.clone(),
            condition: m.condition,
            block_index: m.block_index,
            aborted: m.aborted,
            selections: comp.selections,
            throughput_bps: tp.bits_per_s,
            throughput_trials_excluded: tp.trials_excluded,
            error_rate_pct: comp.error_rate_pct,
            late_rate_pct: comp.late_rate_pct,
            early_rate_pct: comp.early_rate_pct,
            other_rate_pct: comp.other_rate_pct,
            late_of_selections_pct: comp.late_of_selections_pct,
            early_of_selections_pct: comp.early_of_selections_pct,
            other_of_selections_pct: comp.other_of_selections_pct,
            mean_selection_time_ms: mean_sel,
            errors_observed: comp.errors,
            errors_would_be: raw.errors,
            error_reduction: raw.errors as i64 - comp.errors as i64,
            unaltered_error_rate_pct: raw.error_rate_pct,
            late_errors: comp.late,
            early_errors: comp.early,
            other_errors: comp.other,
        })
    }
}

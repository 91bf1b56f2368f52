//! Coordination-error classification and counterfactual outcomes.
//!
//! A selection is classified offline against the *highlighted* target using
//! raw gaze only:
//!
//! * `Correct` when the selected target is the highlighted one;
//! * `LateTrigger` when the gaze left the highlighted target at most
//!   `window_ms` before the pinch;
//! * `EarlyTrigger` when the gaze landed on it at most `window_ms` after the
//!   pinch;
//! * `OtherError` otherwise.
//!
//! When both temporal conditions hold the smaller gap wins, ties go to
//! `LateTrigger`. Early detection looks past the pinch, so the frame stream
//! must extend far enough to settle it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Target, TargetId, TargetLayout};
use crate::reticle::{GazeSample, HeuristicConfig, PinchEvent, ReticleState};
use crate::session::SelectionEvent;
use crate::task::Condition;

pub const DEFAULT_WINDOW_MS: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    Correct,
    LateTrigger,
    EarlyTrigger,
    OtherError,
}

impl OutcomeClass {
    pub fn is_error(self) -> bool {
        self != OutcomeClass::Correct
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeClass::Correct => "correct",
            OutcomeClass::LateTrigger => "late_trigger",
            OutcomeClass::EarlyTrigger => "early_trigger",
            OutcomeClass::OtherError => "other_error",
        }
    }
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub window_ms: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { window_ms: DEFAULT_WINDOW_MS }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_ms > 0.0) || !self.window_ms.is_finite() {
            return Err(Error::invalid(format!("window_ms must be positive, got {}", self.window_ms)));
        }
        Ok(())
    }
}

/// Raw gaze contact with one target around a pinch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactTimes {
    pub first_entry_t: Option<f64>,
    pub last_exit_before_pinch_t: Option<f64>,
    pub first_entry_after_pinch_t: Option<f64>,
}

fn on_target(s: &GazeSample, target: &Target) -> bool {
    s.valid && s.pos.is_finite() && target.contains(s.pos)
}

/// Scans frames in `[onset_t, pinch_t + window_ms]`.
///
/// Gaze is treated as off-target before the first frame of the span, so a
/// gaze already resting on the target at onset registers an entry there. An
/// exit followed by a re-entry before the pinch is forgotten.
pub fn contact_times(
    frames: &[GazeSample],
    target: &Target,
    onset_t: f64,
    pinch_t: f64,
    window_ms: f64,
) -> ContactTimes {
    let start = frames.partition_point(|f| f.t < onset_t);
    let horizon = pinch_t + window_ms;
    let mut ct = ContactTimes::default();
    let mut prev_on = false;
    for f in frames[start..].iter().take_while(|f| f.t <= horizon) {
        let on = on_target(f, target);
        if on && !prev_on {
            ct.first_entry_t.get_or_insert(f.t);
            if f.t > pinch_t {
                ct.first_entry_after_pinch_t.get_or_insert(f.t);
            } else {
                ct.last_exit_before_pinch_t = None;
            }
        } else if !on && prev_on && f.t <= pinch_t {
            ct.last_exit_before_pinch_t = Some(f.t);
        }
        prev_on = on;
    }
    ct
}

/// Applies the window rule to precomputed contact times.
///
/// `stream_end` is the timestamp of the last frame available; it decides
/// whether a missing post-pinch entry is conclusive.
pub fn classify_contacts(
    contacts: &ContactTimes,
    pinch_t: f64,
    highlighted: TargetId,
    selected: Option<TargetId>,
    stream_end: f64,
    cfg: &ClassifierConfig,
) -> Result<OutcomeClass> {
    if selected == Some(highlighted) {
        return Ok(OutcomeClass::Correct);
    }
    let w = cfg.window_ms;
    let late = contacts.last_exit_before_pinch_t.map(|x| pinch_t - x).filter(|&d| d > 0.0 && d <= w);
    let early = contacts.first_entry_after_pinch_t.map(|e| e - pinch_t).filter(|&d| d > 0.0 && d <= w);

    if early.is_none() {
        // an unseen entry could still beat the late gap (or fall in the window)
        let needed_until = pinch_t + late.unwrap_or(w);
        if stream_end < needed_until {
            return Err(Error::IndeterminateEarly { pinch_t, needed_until, available_until: stream_end });
        }
    }

    Ok(match (late, early) {
        (Some(l), Some(e)) if e < l => OutcomeClass::EarlyTrigger,
        (Some(_), _) => OutcomeClass::LateTrigger,
        (None, Some(_)) => OutcomeClass::EarlyTrigger,
        (None, None) => OutcomeClass::OtherError,
    })
}

/// Classifies one selection.
///
/// `frames` is the gaze stream around the trial (extra frames before
/// `onset_t` are ignored); it must reach `pinch.t + window_ms` unless the
/// outcome is already settled.
pub fn classify(
    frames: &[GazeSample],
    onset_t: f64,
    pinch: &PinchEvent,
    highlighted: &Target,
    selected: Option<TargetId>,
    cfg: &ClassifierConfig,
) -> Result<OutcomeClass> {
    let contacts = contact_times(frames, highlighted, onset_t, pinch.t, cfg.window_ms);
    let end = frames.last().map_or(f64::NEG_INFINITY, |f| f.t);
    classify_contacts(&contacts, pinch.t, highlighted.id, selected, end, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub selected: Option<TargetId>,
    pub raw_selected: Option<TargetId>,
    pub outcome_effective: OutcomeClass,
    pub outcome_raw: OutcomeClass,
    pub corrected: bool,
}

/// Replays the stream up to the pinch under the active heuristics and with
/// all heuristics disabled, and classifies both selections.
#[allow(clippy::too_many_arguments)]
pub fn counterfactual(
    frames: &[GazeSample],
    onset_t: f64,
    pinch: &PinchEvent,
    layout: &TargetLayout,
    highlighted: TargetId,
    cfg_active: &HeuristicConfig,
    cls: &ClassifierConfig,
) -> Result<Counterfactual> {
    let target =
        layout.target(highlighted).ok_or_else(|| Error::invalid(format!("target {highlighted} not in layout")))?;
    let baseline = cfg_active.disabled();
    let mut active = ReticleState::new();
    let mut raw = ReticleState::new();
    for f in frames.iter().take_while(|f| f.t <= pinch.t) {
        active.step(f, layout, cfg_active)?;
        raw.step(f, layout, &baseline)?;
    }
    let selected = active.resolve_selection(pinch).selected;
    let raw_selected = raw.resolve_selection(pinch).selected;
    let outcome_effective = classify(frames, onset_t, pinch, target, selected, cls)?;
    let outcome_raw = classify(frames, onset_t, pinch, target, raw_selected, cls)?;
    Ok(Counterfactual {
        selected,
        raw_selected,
        outcome_effective,
        outcome_raw,
        corrected: outcome_effective == OutcomeClass::Correct && outcome_raw != OutcomeClass::Correct,
    })
}

/// One pinch with its resolved, counterfactual and classified outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub round: usize,
    pub trial: usize,
    pub condition: Condition,
    pub highlighted: TargetId,
    pub selected_effective: Option<TargetId>,
    pub selected_raw: Option<TargetId>,
    pub highlight_onset_t: f64,
    pub first_entry_t: Option<f64>,
    pub last_exit_before_pinch_t: Option<f64>,
    pub first_entry_after_pinch_t: Option<f64>,
    pub pinch_t: f64,
    pub outcome_effective: OutcomeClass,
    pub outcome_raw: OutcomeClass,
    pub corrected_by_heuristic: bool,
}

impl SelectionRecord {
    pub fn selection_time_ms(&self) -> f64 {
        self.pinch_t - self.highlight_onset_t
    }

    /// Gaze movement time: highlight onset to first raw entry.
    pub fn movement_time_ms(&self) -> Option<f64> {
        self.first_entry_t.map(|e| e - self.highlight_onset_t)
    }
}

/// Classifies every resolved selection of a session.
///
/// `layouts` is indexed by round. The raw selection in each event comes
/// from the same state machine with heuristics ignored, which is exactly the
/// all-off replay because raw hit-testing carries no history.
pub fn classify_events(
    frames: &[GazeSample],
    events: &[SelectionEvent],
    layouts: &[TargetLayout],
    condition: Condition,
    cfg: &ClassifierConfig,
) -> Result<Vec<SelectionRecord>> {
    cfg.validate()?;
    let end = frames.last().map_or(f64::NEG_INFINITY, |f| f.t);
    events
        .iter()
        .map(|ev| {
            let layout =
                layouts.get(ev.round).ok_or_else(|| Error::invalid(format!("no layout for round {}", ev.round)))?;
            let target = layout
                .target(ev.highlighted)
                .ok_or_else(|| Error::invalid(format!("target {} not in layout", ev.highlighted)))?;
            let contacts = contact_times(frames, target, ev.highlight_onset_t, ev.pinch_t, cfg.window_ms);
            let outcome_effective = classify_contacts(&contacts, ev.pinch_t, ev.highlighted, ev.selected, end, cfg)?;
            let outcome_raw = classify_contacts(&contacts, ev.pinch_t, ev.highlighted, ev.raw_selected, end, cfg)?;
            Ok(SelectionRecord {
                round: ev.round,
                trial: ev.trial,
                condition,
                highlighted: ev.highlighted,
                selected_effective: ev.selected,
                selected_raw: ev.raw_selected,
                highlight_onset_t: ev.highlight_onset_t,
                first_entry_t: contacts.first_entry_t,
                last_exit_before_pinch_t: contacts.last_exit_before_pinch_t,
                first_entry_after_pinch_t: contacts.first_entry_after_pinch_t,
                pinch_t: ev.pinch_t,
                outcome_effective,
                outcome_raw,
                corrected_by_heuristic: outcome_effective == OutcomeClass::Correct
                    && outcome_raw != OutcomeClass::Correct,
            })
        })
        .collect()
}

//! Task loop shared by the simulator, offline replay and the live service.
//!
//! A [`TaskSession`] consumes gaze samples and pinches in time order, runs
//! the reticle state machine, sequences highlights, and records frame rows
//! and selection events. Feeding the persisted samples and pinch times of a
//! session back through a fresh `TaskSession` reproduces it exactly.

use serde::{Deserialize, Serialize};

use crate::classify::{classify_events, ClassifierConfig, SelectionRecord};
use crate::error::{Error, Result};
use crate::geometry::{TargetId, TargetLayout};
use crate::io::{FrameRow, SessionLog, SessionManifest};
use crate::reticle::{GazeSample, HoverResolution, PinchEvent, ReticleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    pub target: TargetId,
    pub round: usize,
    pub trial: usize,
}

/// A pinch resolved online, before classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionEvent {
    pub round: usize,
    pub trial: usize,
    pub highlighted: TargetId,
    pub highlight_onset_t: f64,
    pub pinch_t: f64,
    pub selected: Option<TargetId>,
    pub raw_selected: Option<TargetId>,
}

impl SelectionEvent {
    pub fn is_correct(&self) -> bool {
        self.selected == Some(self.highlighted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchOutcome {
    pub event: SelectionEvent,
    /// Next highlight, or `None` once the block is complete.
    pub next: Option<Highlight>,
}

#[derive(Debug, Clone)]
pub struct TaskSession {
    manifest: SessionManifest,
    layouts: Vec<TargetLayout>,
    state: ReticleState,
    next_index: usize,
    onset_t: Option<f64>,
    samples: Vec<GazeSample>,
    frames: Vec<FrameRow>,
    events: Vec<SelectionEvent>,
}

impl TaskSession {
    pub fn new(manifest: SessionManifest) -> Result<Self> {
        manifest.validate()?;
        let layouts = manifest.layout.layouts()?;
        Ok(Self {
            manifest,
            layouts,
            state: ReticleState::new(),
            next_index: 0,
            onset_t: None,
            samples: Vec::new(),
            frames: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn manifest(&self) -> &SessionManifest {
        &self.manifest
    }

    pub fn layouts(&self) -> &[TargetLayout] {
        &self.layouts
    }

    pub fn frames(&self) -> &[FrameRow] {
        &self.frames
    }

    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    pub fn events(&self) -> &[SelectionEvent] {
        &self.events
    }

    pub fn total_trials(&self) -> usize {
        self.manifest.layout.trials_per_block()
    }

    pub fn is_complete(&self) -> bool {
        self.next_index >= self.total_trials()
    }

    /// Layout currently on screen; the last round's layout after completion.
    pub fn current_layout(&self) -> &TargetLayout {
        let n = self.manifest.layout.n_targets;
        let round = (self.next_index / n).min(self.layouts.len() - 1);
        &self.layouts[round]
    }

    pub fn current_highlight(&self) -> Option<Highlight> {
        if self.is_complete() {
            return None;
        }
        let n = self.manifest.layout.n_targets;
        let trial = self.next_index % n;
        Some(Highlight { target: self.manifest.layout.target_for_trial(trial), round: self.next_index / n, trial })
    }

    fn last_frame_t(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    pub fn last_pinch_t(&self) -> Option<f64> {
        self.events.last().map(|e| e.pinch_t)
    }

    /// True once the block is complete and the stream covers the early
    /// lookahead of the final pinch.
    pub fn lookahead_satisfied(&self, cls: &ClassifierConfig) -> bool {
        match (self.last_pinch_t(), self.last_frame_t()) {
            (Some(p), Some(f)) => self.is_complete() && f >= p + cls.window_ms,
            _ => false,
        }
    }

    pub fn on_frame(&mut self, sample: GazeSample) -> Result<HoverResolution> {
        if !sample.t.is_finite() || !sample.pos.is_finite() {
            return Err(Error::invalid("frame time and position must be finite"));
        }
        if let Some(last) = self.last_frame_t() {
            if sample.t <= last {
                return Err(Error::TimeRegression { last, t: sample.t });
            }
        }
        if let Some(p) = self.last_pinch_t() {
            if sample.t <= p {
                return Err(Error::TimeRegression { last: p, t: sample.t });
            }
        }
        let layout = self.current_layout().clone();
        let res = self.state.step(&sample, &layout, &self.manifest.heuristics)?;
        self.onset_t.get_or_insert(sample.t);
        self.samples.push(sample);
        self.frames.push(FrameRow::new(&sample, &res));
        Ok(res)
    }

    pub fn on_pinch(&mut self, pinch: PinchEvent) -> Result<PinchOutcome> {
        let Some(hl) = self.current_highlight() else {
            return Err(Error::invalid("session already complete"));
        };
        if !pinch.t.is_finite() {
            return Err(Error::invalid("pinch time must be finite"));
        }
        let onset = *self.onset_t.get_or_insert(pinch.t);
        let floor = self.last_frame_t().map_or(onset, |f| f.max(onset));
        if pinch.t < floor {
            return Err(Error::TimeRegression { last: floor, t: pinch.t });
        }
        let sel = self.state.resolve_selection(&pinch);
        if let Some(f) = self.frames.last_mut() {
            f.pinch_down = true;
        }
        let event = SelectionEvent {
            round: hl.round,
            trial: hl.trial,
            highlighted: hl.target,
            highlight_onset_t: onset,
            pinch_t: pinch.t,
            selected: sel.selected,
            raw_selected: sel.raw_selected,
        };
        self.events.push(event);
        self.next_index += 1;
        self.onset_t = Some(pinch.t);
        Ok(PinchOutcome { event, next: self.current_highlight() })
    }

    pub fn classify(&self, cls: &ClassifierConfig) -> Result<Vec<SelectionRecord>> {
        classify_events(&self.samples, &self.events, &self.layouts, self.manifest.condition, cls)
    }

    pub fn finish(self, cls: &ClassifierConfig) -> Result<SessionLog> {
        let selections = self.classify(cls)?;
        Ok(SessionLog { manifest: self.manifest, frames: self.frames, selections })
    }

    /// Closes an interrupted session. Trailing selections whose early
    /// lookahead is not covered by the stream are dropped.
    pub fn finish_aborted(mut self, cls: &ClassifierConfig) -> Result<SessionLog> {
        self.manifest.aborted = true;
        loop {
            match self.classify(cls) {
                Ok(selections) => return Ok(SessionLog { manifest: self.manifest, frames: self.frames, selections }),
                Err(Error::IndeterminateEarly { .. }) if !self.events.is_empty() => {
                    self.events.pop();
                    mark_pinch_frames(&mut self.frames, &self.events);
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Sets `pinch_down` on exactly the frames some pinch resolved against.
fn mark_pinch_frames(frames: &mut [FrameRow], events: &[SelectionEvent]) {
    for f in frames.iter_mut() {
        f.pinch_down = false;
    }
    for e in events {
        let idx = frames.partition_point(|f| f.t_ms <= e.pinch_t);
        if idx > 0 {
            frames[idx - 1].pinch_down = true;
        }
    }
}

/// Re-runs a session from its gaze samples and pinch times.
pub fn replay(manifest: &SessionManifest, samples: &[GazeSample], pinch_times: &[f64]) -> Result<TaskSession> {
    let mut session = TaskSession::new(manifest.clone())?;
    let mut frames = samples.iter().peekable();
    for &p in pinch_times {
        while let Some(s) = frames.next_if(|s| s.t <= p) {
            session.on_frame(*s)?;
        }
        session.on_pinch(PinchEvent { t: p })?;
    }
    for s in frames {
        session.on_frame(*s)?;
    }
    Ok(session)
}

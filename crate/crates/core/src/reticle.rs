//! Frame-stepped reticle state machine.
//!
//! Each gaze sample is resolved in a fixed order:
//!
//! 1. raw hit-test against the target discs (boundary inclusive);
//! 2. if nothing was hit and Magnetic is on, hit-test against discs grown by
//!    the magnetic margin, nearest center first, lower id on ties;
//! 3. if still nothing and Sticky is on, fall back to the target the gaze
//!    last hovered while its hold window is open.
//!
//! Hovering any target (raw or magnetic) cancels a pending hold. A hold
//! window opens on the first *valid* sample that no longer hovers; tracker
//! dropouts count as no-hover but leave the window closed, so with Sticky on
//! the reticle stays on the last hovered target for the whole dropout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dmm_to_meters, PlanePoint, TargetId, TargetLayout};

pub const DEFAULT_STICKY_HOLD_MS: f64 = 50.0;
pub const DEFAULT_MAGNETIC_MARGIN_DMM: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub sticky_enabled: bool,
    pub sticky_hold_ms: f64,
    pub magnetic_enabled: bool,
    pub magnetic_margin_dmm: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl HeuristicConfig {
    pub fn none() -> Self {
        Self {
            sticky_enabled: false,
            sticky_hold_ms: DEFAULT_STICKY_HOLD_MS,
            magnetic_enabled: false,
            magnetic_margin_dmm: DEFAULT_MAGNETIC_MARGIN_DMM,
        }
    }

    pub fn sticky() -> Self {
        Self { sticky_enabled: true, ..Self::none() }
    }

    pub fn magnetic() -> Self {
        Self { magnetic_enabled: true, ..Self::none() }
    }

    pub fn sticky_magnetic() -> Self {
        Self { sticky_enabled: true, magnetic_enabled: true, ..Self::none() }
    }

    /// Same parameters with both heuristics switched off.
    pub fn disabled(self) -> Self {
        Self { sticky_enabled: false, magnetic_enabled: false, ..self }
    }

    pub fn is_baseline(&self) -> bool {
        !self.sticky_enabled && !self.magnetic_enabled
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sticky_hold_ms >= 0.0) || !self.sticky_hold_ms.is_finite() {
            return Err(Error::invalid(format!("sticky_hold_ms must be non-negative, got {}", self.sticky_hold_ms)));
        }
        if !(self.magnetic_margin_dmm >= 0.0) || !self.magnetic_margin_dmm.is_finite() {
            return Err(Error::invalid(format!(
                "magnetic_margin_dmm must be non-negative, got {}",
                self.magnetic_margin_dmm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub pos: PlanePoint,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, pos: PlanePoint::new(x, y), valid: true }
    }

    pub fn dropout(t: f64, x: f64, y: f64) -> Self {
        Self { t, pos: PlanePoint::new(x, y), valid: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchEvent {
    pub t: f64,
}

/// An open Sticky hold: `target` stays effective until `expiry` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickHold {
    pub target: TargetId,
    pub expiry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReticleState {
    pub raw_target: Option<TargetId>,
    pub effective_target: Option<TargetId>,
    /// Target hovered (raw or magnetic) by the most recent valid sample.
    pub hover_source: Option<TargetId>,
    pub stick: Option<StickHold>,
    pub snapped: bool,
    pub stuck: bool,
    pub last_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HoverResolution {
    pub raw_target: Option<TargetId>,
    pub effective_target: Option<TargetId>,
    pub snapped: bool,
    pub stuck: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResolution {
    pub selected: Option<TargetId>,
    pub raw_selected: Option<TargetId>,
}

/// Nearest target whose magnetic field contains `p`.
fn magnetic_hit(layout: &TargetLayout, p: PlanePoint, margin_m: f64) -> Option<TargetId> {
    let mut best: Option<(f64, TargetId)> = None;
    for t in &layout.targets {
        let d = t.center.distance(p);
        if d <= t.radius + margin_m && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, t.id));
        }
    }
    best.map(|(_, id)| id)
}

impl ReticleState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn resolution(&self) -> HoverResolution {
        HoverResolution {
            raw_target: self.raw_target,
            effective_target: self.effective_target,
            snapped: self.snapped,
            stuck: self.stuck,
        }
    }

    /// Advances the state machine by one gaze sample.
    pub fn step(
        &mut self,
        sample: &GazeSample,
        layout: &TargetLayout,
        cfg: &HeuristicConfig,
    ) -> Result<HoverResolution> {
        if let Some(last) = self.last_t {
            if sample.t < last {
                return Err(Error::TimeRegression { last, t: sample.t });
            }
        }
        if !sample.t.is_finite() {
            return Err(Error::invalid(format!("non-finite sample time {}", sample.t)));
        }
        let usable = sample.valid && sample.pos.is_finite();

        let raw = if usable { layout.hit_test(sample.pos) } else { None };
        let magnetic = if usable && raw.is_none() && cfg.magnetic_enabled {
            let margin = dmm_to_meters(cfg.magnetic_margin_dmm, layout.plane_distance)?;
            magnetic_hit(layout, sample.pos, margin)
        } else {
            None
        };

        self.last_t = Some(sample.t);
        self.raw_target = raw;

        if let Some(hovered) = raw.or(magnetic) {
            self.hover_source = Some(hovered);
            self.stick = None;
            self.effective_target = Some(hovered);
            self.snapped = magnetic.is_some();
            self.stuck = false;
            return Ok(self.resolution());
        }

        if usable {
            if let Some(left) = self.hover_source.take() {
                self.stick = Some(StickHold { target: left, expiry: sample.t + cfg.sticky_hold_ms });
            }
        }
        if self.stick.is_some_and(|s| sample.t > s.expiry) {
            self.stick = None;
        }

        let held = if !cfg.sticky_enabled {
            None
        } else if let Some(src) = self.hover_source {
            // dropout while hovering: the window has not opened yet
            Some(src)
        } else {
            self.stick.map(|s| s.target)
        };
        self.effective_target = held;
        self.snapped = false;
        self.stuck = held.is_some();
        Ok(self.resolution())
    }

    /// Resolves a pinch against the most recent sample.
    pub fn resolve_selection(&self, pinch: &PinchEvent) -> SelectionResolution {
        debug_assert!(self.last_t.is_none_or(|t| t <= pinch.t));
        SelectionResolution { selected: self.effective_target, raw_selected: self.raw_target }
    }
}

/// Value-style wrapper around [`ReticleState::step`].
pub fn step(
    state: ReticleState,
    sample: &GazeSample,
    layout: &TargetLayout,
    cfg: &HeuristicConfig,
) -> Result<(ReticleState, HoverResolution)> {
    let mut next = state;
    let res = next.step(sample, layout, cfg)?;
    Ok((next, res))
}

pub fn resolve_selection(state: &ReticleState, pinch: &PinchEvent) -> SelectionResolution {
    state.resolve_selection(pinch)
}

/// Runs a whole stream through a fresh state machine.
pub fn replay_stream(
    samples: &[GazeSample],
    layout: &TargetLayout,
    cfg: &HeuristicConfig,
) -> Result<Vec<HoverResolution>> {
    let mut state = ReticleState::new();
    samples.iter().map(|s| state.step(s, layout, cfg)).collect()
}

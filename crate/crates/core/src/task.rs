//! Block structure of the ring selection task: conditions, size/spacing
//! schedule and highlight order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    make_ring_layout, PlanePoint, TargetId, TargetLayout, DEFAULT_PLANE_DISTANCE_M, DEFAULT_TARGET_COUNT,
    INTER_TARGET_DISTANCES_M, TARGET_SIZES_DEG,
};
use crate::reticle::HeuristicConfig;

pub const DEFAULT_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    None,
    Sticky,
    Magnetic,
    StickyMagnetic,
}

impl Condition {
    pub const ALL: [Condition; 4] =
        [Condition::None, Condition::Sticky, Condition::Magnetic, Condition::StickyMagnetic];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::None => "none",
            Condition::Sticky => "sticky",
            Condition::Magnetic => "magnetic",
            Condition::StickyMagnetic => "sticky_magnetic",
        }
    }

    /// Heuristic configuration with the default hold and margin.
    pub fn heuristics(self) -> HeuristicConfig {
        match self {
            Condition::None => HeuristicConfig::none(),
            Condition::Sticky => HeuristicConfig::sticky(),
            Condition::Magnetic => HeuristicConfig::magnetic(),
            Condition::StickyMagnetic => HeuristicConfig::sticky_magnetic(),
        }
    }

    pub fn matches(self, cfg: &HeuristicConfig) -> bool {
        let expect = self.heuristics();
        expect.sticky_enabled == cfg.sticky_enabled && expect.magnetic_enabled == cfg.magnetic_enabled
    }

    pub fn from_flags(sticky: bool, magnetic: bool) -> Self {
        match (sticky, magnetic) {
            (false, false) => Condition::None,
            (true, false) => Condition::Sticky,
            (false, true) => Condition::Magnetic,
            (true, true) => Condition::StickyMagnetic,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '+'], "_").as_str() {
            "none" | "baseline" => Ok(Condition::None),
            "sticky" => Ok(Condition::Sticky),
            "magnetic" => Ok(Condition::Magnetic),
            "sticky_magnetic" | "stickymagnetic" => Ok(Condition::StickyMagnetic),
            _ => Err(Error::invalid(format!("unknown condition `{s}`"))),
        }
    }
}

/// Ring geometry schedule for one block.
///
/// Round `r` uses size `sizes_deg[r % S]` and spacing
/// `inter_target_m[(r / S) % D]`, so the default ten rounds visit every
/// size once at each spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSchedule {
    pub n_targets: usize,
    pub rounds: usize,
    pub sizes_deg: Vec<f64>,
    pub inter_target_m: Vec<f64>,
    pub plane_distance: f64,
}

impl Default for RingSchedule {
    fn default() -> Self {
        Self {
            n_targets: DEFAULT_TARGET_COUNT,
            rounds: DEFAULT_ROUNDS,
            sizes_deg: TARGET_SIZES_DEG.to_vec(),
            inter_target_m: INTER_TARGET_DISTANCES_M.to_vec(),
            plane_distance: DEFAULT_PLANE_DISTANCE_M,
        }
    }
}

impl RingSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.n_targets < 2 {
            return Err(Error::invalid("n_targets must be at least 2"));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        if self.sizes_deg.is_empty() || self.inter_target_m.is_empty() {
            return Err(Error::invalid("size and spacing schedules must be non-empty"));
        }
        if !(self.plane_distance > 0.0) {
            return Err(Error::invalid("plane_distance must be positive"));
        }
        for r in 0..self.rounds.min(self.sizes_deg.len() * self.inter_target_m.len()) {
            self.layout(r)?;
        }
        Ok(())
    }

    pub fn size_for_round(&self, round: usize) -> f64 {
        self.sizes_deg[round % self.sizes_deg.len()]
    }

    pub fn spacing_for_round(&self, round: usize) -> f64 {
        self.inter_target_m[(round / self.sizes_deg.len()) % self.inter_target_m.len()]
    }

    pub fn layout(&self, round: usize) -> Result<TargetLayout> {
        make_ring_layout(self.n_targets, self.spacing_for_round(round), self.size_for_round(round), self.plane_distance)
    }

    pub fn layouts(&self) -> Result<Vec<TargetLayout>> {
        (0..self.rounds).map(|r| self.layout(r)).collect()
    }

    pub fn trials_per_block(&self) -> usize {
        self.rounds * self.n_targets
    }

    /// Highlight step across the ring: ⌈n/2⌉.
    pub fn sequence_step(&self) -> usize {
        self.n_targets.div_ceil(2)
    }

    /// Target highlighted on `trial` of any round.
    pub fn target_for_trial(&self, trial: usize) -> TargetId {
        TargetId(((trial * self.sequence_step()) % self.n_targets) as u32)
    }

    /// Target preceding `trial` in the cyclic highlight order; the movement
    /// amplitude of a trial is measured from its center.
    pub fn previous_target(&self, trial: usize) -> TargetId {
        let n = self.n_targets;
        let step = self.sequence_step() % n;
        let cur = (trial * self.sequence_step()) % n;
        TargetId(((cur + n - step) % n) as u32)
    }

    /// Center-to-center movement amplitude of `trial` in `round`.
    pub fn amplitude(&self, layout: &TargetLayout, trial: usize) -> f64 {
        let a = layout.targets[self.previous_target(trial).index()].center;
        let b = layout.targets[self.target_for_trial(trial).index()].center;
        a.distance(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub condition: Condition,
    pub heuristics: HeuristicConfig,
    pub layout: RingSchedule,
}

impl BlockConfig {
    pub fn new(condition: Condition) -> Self {
        Self { condition, heuristics: condition.heuristics(), layout: RingSchedule::default() }
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.layout.rounds = rounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.heuristics.validate()?;
        if !self.condition.matches(&self.heuristics) {
            return Err(Error::invalid(format!("condition `{}` does not match heuristic flags", self.condition)));
        }
        self.layout.validate()
    }

    /// Every trial of the block in presentation order.
    pub fn trials(&self) -> Result<Vec<TrialSpec>> {
        let layouts = self.layout.layouts()?;
        let n = self.layout.n_targets;
        let mut out = Vec::with_capacity(self.layout.trials_per_block());
        for (round, layout) in layouts.iter().enumerate() {
            for trial in 0..n {
                let target = self.layout.target_for_trial(trial);
                let next_center = if trial + 1 < n {
                    layout.targets[self.layout.target_for_trial(trial + 1).index()].center
                } else if round + 1 < layouts.len() {
                    layouts[round + 1].targets[self.layout.target_for_trial(0).index()].center
                } else {
                    PlanePoint::ORIGIN
                };
                out.push(TrialSpec {
                    index: round * n + trial,
                    round,
                    trial,
                    target,
                    next_center,
                    layout: layout.clone(),
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    /// Position within the block.
    pub index: usize,
    pub round: usize,
    pub trial: usize,
    pub target: TargetId,
    /// Where the next highlight will appear (ring center after the last trial).
    pub next_center: PlanePoint,
    pub layout: TargetLayout,
}

impl TrialSpec {
    pub fn target(&self) -> &crate::geometry::Target {
        &self.layout.targets[self.target.index()]
    }
}

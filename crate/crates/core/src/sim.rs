//! Seeded synthetic gaze/pinch sessions with ground truth.
//!
//! The gaze path is piecewise linear: fixations joined by saccades whose
//! duration is `slope · amplitude_deg + intercept`. Frames sample the path on
//! an exact clock (`t_f = f · 1000 / frame_rate_hz`) and add per-frame
//! jitter and dropout.
//!
//! Randomness comes from ChaCha8 seeded with `SimConfig::seed`. Every trial
//! and every frame owns a stream of that generator, so no draw depends on how
//! many draws came before it:
//!
//! | stream            | draws, in order                                  |
//! |-------------------|--------------------------------------------------|
//! | trial `i`         | landing dx, landing dy, pinch offset (normals)   |
//! | `2^40 + f`        | dropout (uniform), jitter dx, jitter dy (normals) |
//!
//! Ground truth is recomputed from the emitted frames rather than taken from
//! the plan, so noise that moves the gaze across a target edge is reflected
//! in the labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierConfig, OutcomeClass};
use crate::error::{Error, Result};
use crate::geometry::{dmm_to_meters, visual_angle_deg, PlanePoint, Target, TargetId, TargetLayout};
use crate::io::{SessionLog, SessionManifest};
use crate::reticle::{GazeSample, PinchEvent};
use crate::session::replay;
use crate::task::{BlockConfig, TrialSpec};

const FRAME_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    pub frame_rate_hz: f64,
    /// Per-axis sd of per-frame gaze noise, dmm.
    pub fixation_jitter_sd: f64,
    /// Per-axis sd of the landing point around the target center, dmm.
    pub landing_error_sd: f64,
    pub saccade_dur_slope_ms_per_deg: f64,
    pub saccade_dur_intercept_ms: f64,
    /// Pinch time relative to raw gaze arrival; negative pinches early.
    pub pinch_offset_mean_ms: f64,
    pub pinch_offset_sd_ms: f64,
    pub dropout_rate: f64,
    /// Delay from highlight onset to the start of the saccade toward it.
    pub reaction_ms: f64,
    /// Shortest fixation between two saccades.
    pub min_fixation_ms: f64,
    /// If the pinch has not come this long after landing, gaze drifts off
    /// toward the next target.
    pub dwell_ms: Option<f64>,
    /// How far toward the next target that drift goes.
    pub departure_fraction: f64,
    /// Frames emitted after the final pinch.
    pub tail_ms: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frame_rate_hz: 90.0,
            fixation_jitter_sd: 3.0,
            landing_error_sd: 5.0,
            saccade_dur_slope_ms_per_deg: 2.2,
            saccade_dur_intercept_ms: 21.0,
            pinch_offset_mean_ms: 100.0,
            pinch_offset_sd_ms: 100.0,
            dropout_rate: 0.0,
            reaction_ms: 180.0,
            min_fixation_ms: 120.0,
            dwell_ms: Some(250.0),
            departure_fraction: 0.5,
            tail_ms: 500.0,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// No jitter, landing error, offset spread or dropout; pinches land on
    /// gaze arrival.
    pub fn noise_free(seed: u64) -> Self {
        Self {
            seed,
            fixation_jitter_sd: 0.0,
            landing_error_sd: 0.0,
            pinch_offset_mean_ms: 0.0,
            pinch_offset_sd_ms: 0.0,
            dropout_rate: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.frame_rate_hz,
            self.fixation_jitter_sd,
            self.landing_error_sd,
            self.saccade_dur_slope_ms_per_deg,
            self.saccade_dur_intercept_ms,
            self.pinch_offset_mean_ms,
            self.pinch_offset_sd_ms,
            self.dropout_rate,
            self.reaction_ms,
            self.min_fixation_ms,
            self.departure_fraction,
            self.tail_ms,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("simulator parameters must be finite"));
        }
        if !(self.frame_rate_hz > 0.0) {
            return Err(Error::invalid("frame_rate_hz must be positive"));
        }
        if self.fixation_jitter_sd < 0.0 || self.landing_error_sd < 0.0 || self.pinch_offset_sd_ms < 0.0 {
            return Err(Error::invalid("standard deviations must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid("dropout_rate must be in [0, 1)"));
        }
        if self.saccade_dur_slope_ms_per_deg < 0.0 || self.saccade_dur_intercept_ms < 0.0 {
            return Err(Error::invalid("saccade duration parameters must be non-negative"));
        }
        if self.reaction_ms < 0.0 || self.min_fixation_ms < 0.0 || self.tail_ms < 0.0 {
            return Err(Error::invalid("reaction, fixation and tail times must be non-negative"));
        }
        if self.dwell_ms.is_some_and(|d| !(d.is_finite() && d >= 0.0)) {
            return Err(Error::invalid("dwell_ms must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.departure_fraction) {
            return Err(Error::invalid("departure_fraction must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn frame_period_ms(&self) -> f64 {
        1000.0 / self.frame_rate_hz
    }

    pub fn frame_time(&self, f: u64) -> f64 {
        f as f64 * 1000.0 / self.frame_rate_hz
    }

    /// Index of the first frame at or after `t`.
    pub fn frame_at_or_after(&self, t: f64) -> u64 {
        let mut f = (t * self.frame_rate_hz / 1000.0).ceil().max(0.0) as u64;
        while f > 0 && self.frame_time(f - 1) >= t {
            f -= 1;
        }
        while self.frame_time(f) < t {
            f += 1;
        }
        f
    }

    pub fn saccade_duration_ms(&self, amplitude_deg: f64) -> f64 {
        self.saccade_dur_slope_ms_per_deg * amplitude_deg + self.saccade_dur_intercept_ms
    }

    pub fn trial_rng(&self, trial_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial_index as u64);
        rng
    }

    pub fn frame_rng(&self, frame: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(FRAME_STREAM_BASE + frame);
        rng
    }
}

/// SplitMix64 finalizer over `base` and `parts`, for per-session seeds.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// What the pinch time of a trial is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ms", rename_all = "snake_case")]
pub enum PinchAnchor {
    /// Offset from the first raw on-target frame, or from the landing frame
    /// when the gaze never enters the target.
    Arrival(f64),
    /// Offset from the first frame at or after the landing.
    Landing(f64),
    /// Lag after the first off-target frame once gaze departs (forces a
    /// departure after the dwell).
    Exit(f64),
}

impl PinchAnchor {
    pub fn ms(self) -> f64 {
        match self {
            PinchAnchor::Arrival(v) | PinchAnchor::Landing(v) | PinchAnchor::Exit(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub landing: PlanePoint,
    pub pinch: PinchAnchor,
    pub dwell_ms: Option<f64>,
}

/// The plan the simulator draws on its own: Gaussian landing error and a
/// Gaussian pinch offset from arrival.
pub fn default_plan(spec: &TrialSpec, sim: &SimConfig, rng: &mut ChaCha8Rng) -> TrialPlan {
    let target = spec.target();
    let sd_m = sim.landing_error_sd / 1000.0 * spec.layout.plane_distance;
    let dx: f64 = rng.sample(StandardNormal);
    let dy: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    TrialPlan {
        landing: PlanePoint::new(target.center.x + sd_m * dx, target.center.y + sd_m * dy),
        pinch: PinchAnchor::Arrival(sim.pinch_offset_mean_ms + sim.pinch_offset_sd_ms * z),
        dwell_ms: sim.dwell_ms,
    }
}

/// Point `dmm` beyond the edge of `target`, radially away from `center`.
pub fn point_beyond_edge(target: &Target, center: PlanePoint, dmm: f64, plane_distance: f64) -> Result<PlanePoint> {
    let (dx, dy) = (target.center.x - center.x, target.center.y - center.y);
    let len = dx.hypot(dy);
    let (ux, uy) = if len > 0.0 { (dx / len, dy / len) } else { (0.0, 1.0) };
    let r = target.radius + dmm_to_meters(dmm, plane_distance)?;
    Ok(PlanePoint::new(target.center.x + ux * r, target.center.y + uy * r))
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    t0: f64,
    t1: f64,
    from: PlanePoint,
    to: PlanePoint,
}

#[derive(Debug, Clone)]
struct GazePath {
    start: PlanePoint,
    segments: Vec<Segment>,
}

impl GazePath {
    fn new(start: PlanePoint) -> Self {
        Self { start, segments: Vec::new() }
    }

    fn rest(&self) -> PlanePoint {
        self.segments.last().map_or(self.start, |s| s.to)
    }

    fn free_at(&self) -> f64 {
        self.segments.last().map_or(f64::NEG_INFINITY, |s| s.t1)
    }

    fn push(&mut self, t0: f64, duration: f64, to: PlanePoint) {
        debug_assert!(t0 >= self.free_at());
        let from = self.rest();
        self.segments.push(Segment { t0, t1: t0 + duration, from, to });
    }

    fn truncate_after(&mut self, len: usize) {
        self.segments.truncate(len);
    }

    fn at(&self, t: f64) -> PlanePoint {
        let idx = self.segments.partition_point(|s| s.t0 <= t);
        if idx == 0 {
            return self.start;
        }
        let s = &self.segments[idx - 1];
        if t >= s.t1 || s.t1 <= s.t0 {
            s.to
        } else {
            s.from.lerp(s.to, (t - s.t0) / (s.t1 - s.t0))
        }
    }
}

struct FrameSampler<'a> {
    sim: &'a SimConfig,
    jitter_m: f64,
}

impl<'a> FrameSampler<'a> {
    fn new(sim: &'a SimConfig, plane_distance: f64) -> Self {
        Self { sim, jitter_m: sim.fixation_jitter_sd / 1000.0 * plane_distance }
    }

    fn sample(&self, f: u64, path: &GazePath) -> GazeSample {
        let t = self.sim.frame_time(f);
        let p = path.at(t);
        let mut rng = self.sim.frame_rng(f);
        let u: f64 = rng.random();
        let jx: f64 = rng.sample(StandardNormal);
        let jy: f64 = rng.sample(StandardNormal);
        let pos = PlanePoint::new(p.x + self.jitter_m * jx, p.y + self.jitter_m * jy);
        GazeSample { t, pos, valid: u >= self.sim.dropout_rate }
    }

    fn on(&self, f: u64, path: &GazePath, target: &Target) -> bool {
        let s = self.sample(f, path);
        s.valid && target.contains(s.pos)
    }
}

/// Ground-truth timing of one trial, scanned from the emitted frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTrial {
    pub trial_index: usize,
    pub round: usize,
    pub trial: usize,
    pub intended_target: TargetId,
    pub onset_t: f64,
    /// First raw on-target frame at or after onset.
    pub gaze_entry_t: Option<f64>,
    /// Last raw departure at or before the pinch.
    pub gaze_exit_t: Option<f64>,
    pub pinch_t: f64,
    /// `pinch_t - gaze_entry_t`.
    pub true_offset_ms: Option<f64>,
    pub first_entry_after_pinch_t: Option<f64>,
    pub on_target_at_pinch: bool,
    /// What the simulator aimed for.
    pub injected: PinchAnchor,
}

impl GroundTruthTrial {
    /// Outcome of a raw gaze selection under a window of `window_ms`.
    pub fn label(&self, window_ms: f64) -> OutcomeClass {
        if self.on_target_at_pinch {
            return OutcomeClass::Correct;
        }
        let late = self.gaze_exit_t.map(|x| self.pinch_t - x).filter(|&g| g > 0.0 && g <= window_ms);
        let early = self.first_entry_after_pinch_t.map(|e| e - self.pinch_t).filter(|&g| g > 0.0 && g <= window_ms);
        match (late, early) {
            (Some(l), Some(e)) => {
                if e < l {
                    OutcomeClass::EarlyTrigger
                } else {
                    OutcomeClass::LateTrigger
                }
            }
            (Some(_), None) => OutcomeClass::LateTrigger,
            (None, Some(_)) => OutcomeClass::EarlyTrigger,
            (None, None) => OutcomeClass::OtherError,
        }
    }
}

/// Scans `frames` for the contact history of `target` between `onset_t`
/// and `horizon_t`.
fn ground_truth(
    frames: &[GazeSample],
    target: &Target,
    onset_t: f64,
    pinch_t: f64,
    horizon_t: f64,
) -> (Option<f64>, Option<f64>, Option<f64>, bool) {
    let mut entry = None;
    let mut exit = None;
    let mut after = None;
    let mut on_at_pinch = false;
    let mut was_on = false;
    let start = frames.partition_point(|s| s.t < onset_t);
    for s in frames[start..].iter().take_while(|s| s.t <= horizon_t) {
        let on = s.valid && target.contains(s.pos);
        if s.t <= pinch_t {
            if on && entry.is_none() {
                entry = Some(s.t);
            }
            if !on && was_on {
                exit = Some(s.t);
            }
            on_at_pinch = on;
        } else if on && !was_on && after.is_none() {
            after = Some(s.t);
            entry.get_or_insert(s.t);
        }
        was_on = on;
    }
    (entry, exit, after, on_at_pinch)
}

/// Full output of one simulated block.
#[derive(Debug, Clone)]
pub struct SimulatedSession {
    pub log: SessionLog,
    pub truth: Vec<GroundTruthTrial>,
    pub samples: Vec<GazeSample>,
}

struct PlannedTrial {
    onset: f64,
    pinch: f64,
    anchor: PinchAnchor,
}

/// Lays out the gaze path for one trial and returns its pinch time.
fn place_trial(
    sim: &SimConfig,
    sampler: &FrameSampler<'_>,
    path: &mut GazePath,
    spec: &TrialSpec,
    plan: &TrialPlan,
    onset: f64,
) -> Result<f64> {
    let target = spec.target();
    let d = spec.layout.plane_distance;
    let amp_deg = visual_angle_deg(path.rest().distance(plan.landing), d)?;
    let saccade = sim.saccade_duration_ms(amp_deg);
    let base = path.segments.len();
    let mut start = (onset + sim.reaction_ms).max(path.free_at() + sim.min_fixation_ms);
    let period = sim.frame_period_ms();

    loop {
        path.truncate_after(base);
        path.push(start, saccade, plan.landing);
        let land_t = start + saccade;
        let land_f = sim.frame_at_or_after(land_t);
        let pinch = match plan.pinch {
            PinchAnchor::Arrival(o) => {
                let first = sim.frame_at_or_after(onset);
                let entry = (first..=land_f).find(|&f| sampler.on(f, path, target));
                sim.frame_time(entry.unwrap_or(land_f)) + o
            }
            PinchAnchor::Landing(o) => sim.frame_time(land_f) + o,
            PinchAnchor::Exit(lag) => {
                let dwell = plan.dwell_ms.or(sim.dwell_ms).unwrap_or(0.0);
                let depart_t = land_t + dwell;
                let glance = plan.landing.lerp(spec.next_center, sim.departure_fraction);
                let dur = sim.saccade_duration_ms(visual_angle_deg(plan.landing.distance(glance), d)?);
                path.push(depart_t, dur, glance);
                let from_f = sim.frame_at_or_after(depart_t);
                let to_f = sim.frame_at_or_after(depart_t + dur) + 1;
                let exit = (from_f..=to_f).find(|&f| !sampler.on(f, path, target));
                sim.frame_time(exit.unwrap_or(to_f)) + lag
            }
        };
        if pinch > onset {
            if !matches!(plan.pinch, PinchAnchor::Exit(_)) {
                if let Some(dwell) = plan.dwell_ms {
                    if land_t + dwell < pinch {
                        let glance = plan.landing.lerp(spec.next_center, sim.departure_fraction);
                        let dur = sim.saccade_duration_ms(visual_angle_deg(plan.landing.distance(glance), d)?);
                        path.push(land_t + dwell, dur, glance);
                    }
                }
            }
            return Ok(pinch);
        }
        // pinch would precede the highlight: start the movement later
        let frames = ((onset - pinch) / period).ceil().max(1.0);
        start += frames * period;
    }
}

/// Simulates a block with plans from `planner`.
///
/// The planner gets each trial's spec and its private RNG stream.
pub fn simulate_session_with<P>(block: &BlockConfig, sim: &SimConfig, mut planner: P) -> Result<SimulatedSession>
where
    P: FnMut(&TrialSpec, &SimConfig, &mut ChaCha8Rng) -> TrialPlan,
{
    block.validate()?;
    sim.validate()?;
    let specs = block.trials()?;
    let plane_distance = block.layout.plane_distance;
    let sampler = FrameSampler::new(sim, plane_distance);

    let first_layout = &specs[0].layout;
    let start = first_layout.targets[block.layout.previous_target(0).index()].center;
    let mut path = GazePath::new(start);

    let mut planned = Vec::with_capacity(specs.len());
    let mut onset = sim.frame_time(0);
    for spec in &specs {
        let mut rng = sim.trial_rng(spec.index);
        let plan = planner(spec, sim, &mut rng);
        if !plan.landing.is_finite() || !plan.pinch.ms().is_finite() {
            return Err(Error::invalid(format!("non-finite plan for trial {}", spec.index)));
        }
        let pinch = place_trial(sim, &sampler, &mut path, spec, &plan, onset)?;
        planned.push(PlannedTrial { onset, pinch, anchor: plan.pinch });
        onset = pinch;
    }

    let last_pinch = planned.last().map_or(0.0, |p| p.pinch);
    let end_t = (last_pinch + sim.tail_ms).max(path.free_at());
    let last_f = sim.frame_at_or_after(end_t);
    let samples: Vec<GazeSample> = (0..=last_f).map(|f| sampler.sample(f, &path)).collect();

    let mut manifest = SessionManifest::new(format!("sim-{:016x}", sim.seed), "sim", 0, block);
    manifest.sim = Some(sim.clone());
    manifest.seed = Some(sim.seed);
    let pinches: Vec<f64> = planned.iter().map(|p| p.pinch).collect();
    let session = replay(&manifest, &samples, &pinches)?;
    let log = session.finish(&ClassifierConfig::default())?;

    let stream_end = samples.last().map_or(0.0, |s| s.t);
    let n_targets = block.layout.n_targets;
    let truth = specs
        .iter()
        .zip(&planned)
        .enumerate()
        .map(|(i, (spec, p))| {
            // the same id comes back one round later
            let horizon = planned.get(i + n_targets).map_or(stream_end, |n| n.onset);
            let (entry, exit, after, on) = ground_truth(&samples, spec.target(), p.onset, p.pinch, horizon);
            GroundTruthTrial {
                trial_index: spec.index,
                round: spec.round,
                trial: spec.trial,
                intended_target: spec.target,
                onset_t: p.onset,
                gaze_entry_t: entry,
                gaze_exit_t: exit,
                pinch_t: p.pinch,
                true_offset_ms: entry.map(|e| p.pinch - e),
                first_entry_after_pinch_t: after,
                on_target_at_pinch: on,
                injected: p.anchor,
            }
        })
        .collect();

    Ok(SimulatedSession { log, truth, samples })
}

pub fn simulate_session(block: &BlockConfig, sim: &SimConfig) -> Result<SimulatedSession> {
    simulate_session_with(block, sim, default_plan)
}

/// One isolated trial: gaze rests at `from` from t = 0, the highlight
/// appears at t = 0, and the plan is drawn from trial stream 0.
pub fn simulate_trial(
    from: PlanePoint,
    target: &Target,
    layout: &TargetLayout,
    sim: &SimConfig,
) -> Result<(Vec<GazeSample>, PinchEvent, GroundTruthTrial)> {
    sim.validate()?;
    if layout.target(target.id) != Some(target) {
        return Err(Error::invalid(format!("target {} not in layout", target.id)));
    }
    let spec = TrialSpec {
        index: 0,
        round: 0,
        trial: 0,
        target: target.id,
        next_center: PlanePoint::ORIGIN,
        layout: layout.clone(),
    };
    let plan = default_plan(&spec, sim, &mut sim.trial_rng(0));
    let sampler = FrameSampler::new(sim, layout.plane_distance);
    let mut path = GazePath::new(from);
    let onset = sim.frame_time(0);
    let pinch = place_trial(sim, &sampler, &mut path, &spec, &plan, onset)?;
    let end = sim.frame_at_or_after((pinch + sim.tail_ms).max(path.free_at()));
    let frames: Vec<GazeSample> = (0..=end).map(|f| sampler.sample(f, &path)).collect();
    let stream_end = frames.last().map_or(0.0, |s| s.t);
    let (entry, exit, after, on) = ground_truth(&frames, target, onset, pinch, stream_end);
    let truth = GroundTruthTrial {
        trial_index: 0,
        round: 0,
        trial: 0,
        intended_target: target.id,
        onset_t: onset,
        gaze_entry_t: entry,
        gaze_exit_t: exit,
        pinch_t: pinch,
        true_offset_ms: entry.map(|e| pinch - e),
        first_entry_after_pinch_t: after,
        on_target_at_pinch: on,
        injected: plan.pinch,
    };
    Ok((frames, PinchEvent { t: pinch }, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_ring_layout;
    use crate::task::Condition;

    #[test]
    fn saccade_duration_closed_form() {
        let s = SimConfig::default();
        assert!((s.saccade_duration_ms(10.0) - 43.0).abs() < 1e-12);
    }

    #[test]
    fn frame_index_lookup() {
        let s = SimConfig::default();
        assert_eq!(s.frame_at_or_after(0.0), 0);
        assert_eq!(s.frame_at_or_after(s.frame_time(7)), 7);
        assert_eq!(s.frame_at_or_after(s.frame_time(7) + 1e-9), 8);
        assert_eq!(s.frame_at_or_after(-5.0), 0);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 0, 0]);
        assert_ne!(a, derive_seed(1, &[0, 0, 1]));
        assert_ne!(a, derive_seed(2, &[0, 0, 0]));
        assert_eq!(a, derive_seed(1, &[0, 0, 0]));
    }

    #[test]
    fn noise_free_trial_pinches_on_arrival() {
        let layout = make_ring_layout(9, 0.26, 2.86, 1.3).unwrap();
        let target = layout.targets[5];
        let from = layout.targets[0].center;
        let sim = SimConfig::noise_free(3);
        let (frames, pinch, truth) = simulate_trial(from, &target, &layout, &sim).unwrap();
        assert_eq!(truth.true_offset_ms, Some(0.0));
        assert!(truth.on_target_at_pinch);
        assert_eq!(truth.label(350.0), OutcomeClass::Correct);
        let at = frames.iter().rfind(|f| f.t <= pinch.t).unwrap();
        assert!(target.contains(at.pos));
    }

    #[test]
    fn early_pinch_is_measured_from_entry() {
        let layout = make_ring_layout(9, 0.26, 2.86, 1.3).unwrap();
        let target = layout.targets[5];
        let sim = SimConfig { pinch_offset_mean_ms: -200.0, ..SimConfig::noise_free(3) };
        let (_, _, truth) = simulate_trial(layout.targets[0].center, &target, &layout, &sim).unwrap();
        assert_eq!(truth.true_offset_ms, Some(-200.0));
        assert_eq!(truth.label(350.0), OutcomeClass::EarlyTrigger);
    }

    #[test]
    fn session_frames_use_exact_clock() {
        let block = BlockConfig::new(Condition::None).with_rounds(1);
        let out = simulate_session(&block, &SimConfig::with_seed(11)).unwrap();
        for (f, s) in out.samples.iter().enumerate() {
            assert_eq!(s.t, out.log.manifest.sim.as_ref().unwrap().frame_time(f as u64));
        }
        assert_eq!(out.truth.len(), 9);
        assert_eq!(out.log.selections.len(), 9);
    }

    #[test]
    fn path_interpolates() {
        let mut p = GazePath::new(PlanePoint::ORIGIN);
        p.push(10.0, 10.0, PlanePoint::new(1.0, 0.0));
        assert_eq!(p.at(0.0), PlanePoint::ORIGIN);
        assert!((p.at(15.0).x - 0.5).abs() < 1e-12);
        assert_eq!(p.at(25.0), PlanePoint::new(1.0, 0.0));
    }
}

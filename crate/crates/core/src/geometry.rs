//! Planar geometry of the task plane.
//!
//! Positions live in meters on a vertical plane facing the viewer, with the
//! origin at the ring center (x right, y up). Visual angles and dmm are views
//! onto that space and are converted at the edges.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Viewing distance of the task plane, in meters.
pub const DEFAULT_PLANE_DISTANCE_M: f64 = 1.3;
/// Number of targets on the ring.
pub const DEFAULT_TARGET_COUNT: usize = 9;
/// Adjacent-target spacings used by the two ring setups.
pub const INTER_TARGET_DISTANCES_M: [f64; 2] = [0.13, 0.26];
/// Target diameters, as visual angles, cycled across rounds.
pub const TARGET_SIZES_DEG: [f64; 5] = [1.43, 2.03, 2.86, 4.05, 5.72];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Linear interpolation, `frac = 0` at `self` and `1` at `other`.
    pub fn lerp(self, other: PlanePoint, frac: f64) -> PlanePoint {
        PlanePoint { x: self.x + (other.x - self.x) * frac, y: self.y + (other.y - self.y) * frac }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetId(pub u32);

impl TargetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub id: TargetId,
    pub center: PlanePoint,
    pub radius: f64,
}

impl Target {
    /// Boundary-inclusive disc test.
    pub fn contains(&self, p: PlanePoint) -> bool {
        self.center.distance(p) <= self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetLayout {
    pub targets: Vec<Target>,
    pub plane_distance: f64,
    pub ring_radius: f64,
    pub size_deg: f64,
    pub inter_target_m: f64,
}

impl TargetLayout {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn target(&self, id: TargetId) -> Option<&Target> {
        self.targets.get(id.index()).filter(|t| t.id == id)
    }

    pub fn contains_id(&self, id: TargetId) -> bool {
        self.target(id).is_some()
    }

    /// Target diameter in meters (Fitts W).
    pub fn target_width(&self) -> f64 {
        self.targets.first().map_or(0.0, |t| 2.0 * t.radius)
    }

    /// First target whose disc contains `p`.
    pub fn hit_test(&self, p: PlanePoint) -> Option<TargetId> {
        self.targets.iter().find(|t| t.contains(p)).map(|t| t.id)
    }
}

/// Visual angle in degrees subtended by `extent` meters at `distance` meters.
pub fn visual_angle_deg(extent: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {distance}")));
    }
    if !(extent >= 0.0) || !extent.is_finite() {
        return Err(Error::invalid(format!("extent must be non-negative, got {extent}")));
    }
    Ok((2.0 * (extent / (2.0 * distance)).atan()).to_degrees())
}

/// Inverse of [`visual_angle_deg`].
pub fn angle_to_extent(angle_deg: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {distance}")));
    }
    if !(0.0..180.0).contains(&angle_deg) {
        return Err(Error::invalid(format!("angle must lie in [0, 180), got {angle_deg}")));
    }
    Ok(2.0 * distance * (angle_deg.to_radians() / 2.0).tan())
}

/// Distance-independent millimeters to meters on a plane `distance` meters away.
///
/// One dmm subtends one millimeter at one meter and scales linearly with
/// distance.
pub fn dmm_to_meters(dmm: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {distance}")));
    }
    Ok(dmm / 1000.0 * distance)
}

pub fn meters_to_dmm(meters: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {distance}")));
    }
    Ok(meters * 1000.0 / distance)
}

/// Builds a ring of `n` equally spaced targets.
///
/// The ring radius follows from the adjacent chord length. Target 0 sits at
/// the top of the ring and ids increase clockwise. `size_deg` is the target
/// diameter as a visual angle.
pub fn make_ring_layout(n: usize, inter_target_m: f64, size_deg: f64, plane_distance: f64) -> Result<TargetLayout> {
    if n < 2 {
        return Err(Error::invalid(format!("ring needs at least 2 targets, got {n}")));
    }
    if !(inter_target_m > 0.0) || !inter_target_m.is_finite() {
        return Err(Error::invalid(format!("inter-target distance must be positive, got {inter_target_m}")));
    }
    if !(size_deg > 0.0) {
        return Err(Error::invalid(format!("target size must be positive, got {size_deg}")));
    }
    let radius = angle_to_extent(size_deg, plane_distance)? / 2.0;
    let ring_radius = inter_target_m / (2.0 * (PI / n as f64).sin());
    let step = 2.0 * PI / n as f64;
    let targets = (0..n)
        .map(|k| {
            let theta = PI / 2.0 - step * k as f64;
            Target {
                id: TargetId(k as u32),
                center: PlanePoint::new(ring_radius * theta.cos(), ring_radius * theta.sin()),
                radius,
            }
        })
        .collect();
    Ok(TargetLayout { targets, plane_distance, ring_radius, size_deg, inter_target_m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn visual_angles_of_ring_spacings() {
        assert_abs_diff_eq!(visual_angle_deg(0.13, 1.3).unwrap(), 5.72, epsilon = 0.01);
        assert_abs_diff_eq!(visual_angle_deg(0.26, 1.3).unwrap(), 11.42, epsilon = 0.01);
        assert_eq!(visual_angle_deg(0.0, 1.3).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_distances_and_angles() {
        assert!(matches!(visual_angle_deg(0.1, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(visual_angle_deg(0.1, -1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(angle_to_extent(180.0, 1.3), Err(Error::InvalidArgument(_))));
        assert!(matches!(angle_to_extent(-1.0, 1.3), Err(Error::InvalidArgument(_))));
        assert!(matches!(dmm_to_meters(20.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(make_ring_layout(1, 0.13, 2.0, 1.3).is_err());
        assert!(make_ring_layout(9, 0.0, 2.0, 1.3).is_err());
        assert!(make_ring_layout(9, 0.13, 0.0, 1.3).is_err());
    }

    #[test]
    fn angle_to_extent_matches_closed_form() {
        // 2·d·tan(a/2) evaluated by hand: 2·1.3·tan(2.86°) = 0.129887...
        assert_abs_diff_eq!(angle_to_extent(5.72, 1.3).unwrap(), 0.1299, epsilon = 0.0005);
        assert_eq!(angle_to_extent(0.0, 1.3).unwrap(), 0.0);
        assert_abs_diff_eq!(angle_to_extent(11.42, 1.3).unwrap(), 0.26, epsilon = 0.001);
    }

    #[test]
    fn dmm_scaling() {
        assert_abs_diff_eq!(dmm_to_meters(20.0, 1.3).unwrap(), 0.026, epsilon = 1e-15);
        assert_abs_diff_eq!(dmm_to_meters(20.0, 1.0).unwrap(), 0.020, epsilon = 1e-15);
        assert_eq!(dmm_to_meters(0.0, 1.3).unwrap(), 0.0);
        let m = dmm_to_meters(13.0, 1.7).unwrap();
        assert_abs_diff_eq!(meters_to_dmm(m, 1.7).unwrap(), 13.0, epsilon = 1e-12);
    }

    #[test]
    fn ring_radius_from_chord() {
        // c = 2R·sin(π/n) solved for R, checked against the adjacent chord.
        let l = make_ring_layout(9, 0.13, 5.72, 1.3).unwrap();
        assert_abs_diff_eq!(l.ring_radius, 0.1901, epsilon = 1e-4);
        let chord = l.targets[0].center.distance(l.targets[1].center);
        assert_abs_diff_eq!(chord, 0.13, epsilon = 1e-12);

        let l = make_ring_layout(9, 0.26, 5.72, 1.3).unwrap();
        assert_abs_diff_eq!(l.ring_radius, 0.3801, epsilon = 1e-4);

        let l = make_ring_layout(2, 0.26, 5.72, 1.3).unwrap();
        assert_abs_diff_eq!(l.ring_radius, 0.13, epsilon = 1e-15);
    }

    #[test]
    fn ring_orientation() {
        let l = make_ring_layout(9, 0.13, 2.0, 1.3).unwrap();
        let top = l.targets[0].center;
        assert_abs_diff_eq!(top.x, 0.0, epsilon = 1e-15);
        assert!(top.y > 0.0);
        // clockwise: target 1 is to the right of the top target
        assert!(l.targets[1].center.x > 0.0);
        assert_eq!(l.target(TargetId(3)).unwrap().id, TargetId(3));
        assert!(l.target(TargetId(9)).is_none());
    }

    #[test]
    fn hit_test_is_boundary_inclusive() {
        let t = Target { id: TargetId(2), center: PlanePoint::new(0.25, -0.5), radius: 0.125 };
        assert!(t.contains(PlanePoint::new(0.375, -0.5)));
        assert!(t.contains(PlanePoint::new(0.25, -0.625)));
        assert!(!t.contains(PlanePoint::new(0.375 + 1e-12, -0.5)));
        let l = make_ring_layout(9, 0.26, 2.0, 1.3).unwrap();
        let t = l.targets[4];
        assert_eq!(l.hit_test(t.center), Some(t.id));
        let outside = PlanePoint::new(t.center.x + t.radius * 1.000001, t.center.y);
        assert_eq!(l.hit_test(outside), None);
    }

    #[test]
    fn schedule_sizes_never_overlap() {
        for &d in &INTER_TARGET_DISTANCES_M {
            for &s in &TARGET_SIZES_DEG {
                let l = make_ring_layout(9, d, s, 1.3).unwrap();
                let w = l.target_width();
                assert!(w < d, "size {s} at spacing {d}");
                for a in &l.targets {
                    for b in &l.targets {
                        if a.id != b.id {
                            assert!(a.center.distance(b.center) > a.radius + b.radius);
                        }
                    }
                }
            }
        }
    }
}

//! Prints the ten ring layouts of a block: target size, ring radius and
//! magnetic margin in meters on the 1.3 m plane.

use gazekit::geometry::{dmm_to_meters, visual_angle_deg, DEFAULT_PLANE_DISTANCE_M};
use gazekit::reticle::DEFAULT_MAGNETIC_MARGIN_DMM;
use gazekit::task::RingSchedule;

fn main() -> gazekit::Result<()> {
    let schedule = RingSchedule::default();
    let d = DEFAULT_PLANE_DISTANCE_M;
    println!("round  size_deg  diameter_m  spacing_m  ring_radius_m");
    for (round, layout) in schedule.layouts()?.iter().enumerate() {
        println!(
            "{round:>5}  {:>8.2}  {:>10.4}  {:>9.2}  {:>13.4}",
            layout.size_deg,
            layout.target_width(),
            layout.inter_target_m,
            layout.ring_radius,
        );
    }
    for extent in [0.13, 0.26] {
        println!("{extent} m at {d} m subtends {:.2} deg", visual_angle_deg(extent, d)?);
    }
    println!(
        "magnetic margin {DEFAULT_MAGNETIC_MARGIN_DMM} dmm = {:.4} m",
        dmm_to_meters(DEFAULT_MAGNETIC_MARGIN_DMM, d)?
    );
    Ok(())
}

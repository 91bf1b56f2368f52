//! Steps a hand-made gaze trace through the reticle under each condition.
//!
//! The trace sits on target 0, drifts just outside its edge, drops out for
//! two frames and finally lands well away from the ring.

use gazekit::geometry::{dmm_to_meters, make_ring_layout, PlanePoint, TargetId};
use gazekit::reticle::{replay_stream, GazeSample};
use gazekit::task::Condition;

fn show(id: Option<TargetId>) -> String {
    id.map_or("-".into(), |t| t.to_string())
}

fn main() -> gazekit::Result<()> {
    let layout = make_ring_layout(9, 0.13, 2.86, 1.3)?;
    let t0 = layout.targets[0];
    let edge = |dmm: f64| -> gazekit::Result<PlanePoint> {
        Ok(PlanePoint::new(t0.center.x, t0.center.y + t0.radius + dmm_to_meters(dmm, 1.3)?))
    };
    let (inside, near, far) = (t0.center, edge(10.0)?, edge(60.0)?);
    let trace = [
        GazeSample::new(0.0, inside.x, inside.y),
        GazeSample::new(11.0, inside.x, inside.y),
        GazeSample::new(22.0, near.x, near.y),
        GazeSample::new(33.0, far.x, far.y),
        GazeSample::dropout(44.0, 0.0, 0.0),
        GazeSample::dropout(55.0, 0.0, 0.0),
        GazeSample::new(66.0, far.x, far.y),
        GazeSample::new(77.0, far.x, far.y),
        GazeSample::new(88.0, far.x, far.y),
    ];
    for cond in Condition::ALL {
        let res = replay_stream(&trace, &layout, &cond.heuristics())?;
        let row: Vec<String> = res
            .iter()
            .map(|r| {
                let tag = if r.snapped {
                    "m"
                } else if r.stuck {
                    "s"
                } else {
                    ""
                };
                format!("{}{tag}", show(r.effective_target))
            })
            .collect();
        println!("{:<16} {}", cond.as_str(), row.join(" "));
    }
    println!("(m = magnetic snap, s = sticky hold, - = nothing)");
    Ok(())
}

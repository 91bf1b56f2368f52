//! Classifies single selections from synthetic traces: a late trigger, an
//! early trigger and a plain miss, each with and without Sticky.

use gazekit::classify::{counterfactual, ClassifierConfig};
use gazekit::geometry::{make_ring_layout, TargetId};
use gazekit::reticle::{GazeSample, HeuristicConfig, PinchEvent};

fn main() -> gazekit::Result<()> {
    let layout = make_ring_layout(9, 0.13, 2.86, 1.3)?;
    let on = layout.targets[0].center;
    // ring center: inside no target and outside every magnetic field
    let off = gazekit::geometry::PlanePoint::ORIGIN;
    let hz = 1000.0 / 90.0;
    // gaze on target 0 during [enter, leave), elsewhere otherwise
    let trace = |enter: f64, leave: f64| -> Vec<GazeSample> {
        (0..120)
            .map(|f| {
                let t = f as f64 * hz;
                let p = if (enter..leave).contains(&t) { on } else { off };
                GazeSample::new(t, p.x, p.y)
            })
            .collect()
    };
    let cases = [
        ("left 30 ms before the pinch", trace(300.0, 570.0), 600.0),
        ("left 200 ms before the pinch", trace(300.0, 400.0), 600.0),
        ("arrived 100 ms after the pinch", trace(700.0, 1300.0), 600.0),
        ("never arrived", trace(5000.0, 5000.0), 600.0),
    ];
    let cls = ClassifierConfig::default();
    for (what, frames, pinch) in cases {
        for cfg in [HeuristicConfig::none(), HeuristicConfig::sticky()] {
            let cf = counterfactual(&frames, 0.0, &PinchEvent { t: pinch }, &layout, TargetId(0), &cfg, &cls)?;
            println!(
                "{what:<32} sticky={:<5} raw={:<13} effective={:<13} corrected={}",
                cfg.sticky_enabled, cf.outcome_raw, cf.outcome_effective, cf.corrected
            );
        }
    }
    Ok(())
}

//! Reads a session directory, validates it, replays it under every
//! condition and prints the metrics each replay would have produced.
//!
//!     cargo run --example replay_log -- crates/core/tests/fixtures/golden_session

use std::path::PathBuf;

use gazekit::io::{read_session, validate, SessionLog};
use gazekit::metrics::SessionMetrics;
use gazekit::session::replay;
use gazekit::task::Condition;

fn main() -> anyhow::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_session"));
    let report = validate(&dir);
    println!("{}: {:?}, {} findings", dir.display(), report.status, report.findings.len());
    for f in &report.findings {
        println!("  {f}");
    }

    let log = read_session(&dir)?;
    println!("logged as {}", log.manifest.condition);
    let samples = log.samples();
    let pinches = log.pinch_times();
    for cond in Condition::ALL {
        let mut manifest = log.manifest.clone();
        manifest.condition = cond;
        manifest.heuristics = cond.heuristics();
        let session = replay(&manifest, &samples, &pinches)?;
        let again: SessionLog = session.finish(&Default::default())?;
        let m = SessionMetrics::compute(&again)?;
        println!(
            "{:<16} errors {:>2}/{:<2} would-be {:>2} reduction {:>2} throughput {:.2} bit/s",
            cond.as_str(),
            m.errors_observed,
            m.selections,
            m.errors_would_be,
            m.error_reduction,
            m.throughput_bps
        );
    }
    Ok(())
}

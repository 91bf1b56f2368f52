//! Simulates a small within-subjects study in memory and prints the report
//! summary, without touching the disk.

use gazekit::metrics::SessionMetrics;
use gazekit::report::{aggregate_report, render_summary};
use gazekit::sim::{derive_seed, simulate_session, SimConfig};
use gazekit::task::{BlockConfig, Condition};

fn main() -> gazekit::Result<()> {
    let subjects = 6;
    let mut sessions = Vec::new();
    for s in 0..subjects {
        for cond in Condition::ALL {
            let seed = derive_seed(11, &[s, cond.index() as u64, 0]);
            let sim = SimConfig::with_seed(seed);
            let mut log = simulate_session(&BlockConfig::new(cond).with_rounds(4), &sim)?.log;
            log.manifest.subject_id = format!("s{s}");
            log.manifest.session_id = format!("s{s}_{cond}_b0");
            sessions.push(SessionMetrics::compute(&log)?);
        }
    }
    let report = aggregate_report(&sessions)?;
    print!("{}", render_summary(&report));
    Ok(())
}

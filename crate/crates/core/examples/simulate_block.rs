//! Simulates one block and compares the classifier's raw labels with the
//! simulator's ground truth.
//!
//!     cargo run --example simulate_block -- 7 sticky

use std::collections::BTreeMap;

use gazekit::classify::DEFAULT_WINDOW_MS;
use gazekit::sim::{simulate_session, SimConfig};
use gazekit::task::{BlockConfig, Condition};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;
    let cond: Condition = args.next().map_or(Ok(Condition::Sticky), |s| s.parse())?;

    let sim = SimConfig { dropout_rate: 0.01, ..SimConfig::with_seed(seed) };
    let out = simulate_session(&BlockConfig::new(cond), &sim)?;
    println!(
        "{} frames over {:.1} s, {} selections",
        out.log.frames.len(),
        out.samples.last().map_or(0.0, |s| s.t) / 1000.0,
        out.log.selections.len()
    );

    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut agree = 0;
    for (row, truth) in out.log.selections.iter().zip(&out.truth) {
        let want = truth.label(DEFAULT_WINDOW_MS);
        agree += usize::from(row.outcome_raw == want);
        counts.entry(row.outcome_raw.to_string()).or_default().0 += 1;
        counts.entry(row.outcome_effective.to_string()).or_default().1 += 1;
    }
    println!("raw labels agree with truth on {agree}/{}", out.truth.len());
    println!("{:<14} {:>5} {:>9}", "outcome", "raw", "effective");
    for (k, (raw, eff)) in counts {
        println!("{k:<14} {raw:>5} {eff:>9}");
    }
    Ok(())
}

//! Replay the built-in scenarios and show determinism: two runs of the
//! same scenario produce identical event-log digests, and each run matches
//! its pinned golden document byte for byte.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example scenario_replay
//! ```

use sentiment_protocol::scenarios::{run_scenario, SCENARIO_NAMES};

fn main() {
    for name in SCENARIO_NAMES {
        let first = run_scenario(name).unwrap();
        let second = run_scenario(name).unwrap();
        assert_eq!(first.event_digest, second.event_digest);
        println!(
            "{name}: {} events, digest {}",
            first.engine.events.len(),
            first.event_digest
        );
        for (poll, report) in &first.reports {
            println!(
                "  {poll}: staked {}, pool spent {}, residual {}",
                report.totals.total_staked,
                report.totals.pool_spent,
                report.totals.pool_residual_to_pollster
            );
        }
    }
    println!("all scenarios replayed deterministically and matched their goldens");
}

//! Append-only event log of engine state transitions.
//!
//! Every mutating engine operation appends one record. The JSON-lines
//! rendering is canonical, and its SHA-256 digest is how scenario replays
//! and CLI state validation check determinism.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

use crate::types::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub at: Timestamp,
    #[serde(flatten)]
    pub event: Event,
}

/// One engine state transition. Amounts are base-unit strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    PollCreated {
        poll_id: String,
        topic: String,
        pollster: String,
        pool_deposit: String,
        max_total: String,
        sealed: bool,
    },
    SubmissionAccepted {
        poll_id: String,
        submission_id: String,
        account: String,
        stake: String,
        /// Canonical sentiment key for clear submissions, commitment hex
        /// for sealed ones.
        choice: String,
        sealed: bool,
    },
    PollVoided {
        poll_id: String,
        total_staked: String,
        min_total: String,
    },
    RevealRejected {
        poll_id: String,
        submission_id: String,
        refunded: String,
    },
    TallyCompleted {
        poll_id: String,
        weights: BTreeMap<String, String>,
        withheld_total: String,
        winner: Option<String>,
    },
    PolicyExecuted {
        poll_id: String,
        hook: String,
        decision: String,
    },
    EvaluationSettled {
        poll_id: String,
        index: u32,
        outcome: Option<String>,
        rewards_total: String,
        released_total: String,
        forfeited_total: String,
    },
    PollClosed {
        poll_id: String,
        pool_residual: String,
        forfeited_to_pollster: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog {
    records: Vec<EventRecord>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog::default()
    }

    pub fn push(&mut self, at: Timestamp, event: Event) {
        let seq = self.records.len() as u64 + 1;
        self.records.push(EventRecord { seq, at, event });
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Canonical JSON-lines rendering, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 hex digest of the JSON-lines rendering.
    pub fn digest(&self) -> String {
        digest_jsonl(&self.to_jsonl())
    }
}

/// Digest of an externally stored JSON-lines event stream.
pub fn digest_jsonl(jsonl: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(jsonl.as_bytes());
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_event() -> Event {
        Event::PollCreated {
            poll_id: "poll-1".into(),
            topic: "t".into(),
            pollster: "p".into(),
            pool_deposit: "1000".into(),
            max_total: "10000".into(),
            sealed: false,
        }
    }

    #[test]
    fn sequencing_and_digest_stability() {
        let mut log = EventLog::new();
        log.push(Timestamp::from_seconds(0), sample_event());
        log.push(
            Timestamp::from_seconds(5),
            Event::PollClosed {
                poll_id: "poll-1".into(),
                pool_residual: "1000".into(),
                forfeited_to_pollster: "0".into(),
            },
        );
        assert_eq!(log.records()[0].seq, 1);
        assert_eq!(log.records()[1].seq, 2);

        let mut replay = EventLog::new();
        replay.push(Timestamp::from_seconds(0), sample_event());
        replay.push(
            Timestamp::from_seconds(5),
            Event::PollClosed {
                poll_id: "poll-1".into(),
                pool_residual: "1000".into(),
                forfeited_to_pollster: "0".into(),
            },
        );
        assert_eq!(log.digest(), replay.digest());
        assert_eq!(digest_jsonl(&log.to_jsonl()), log.digest());
    }

    #[test]
    fn jsonl_shape_is_flat() {
        let mut log = EventLog::new();
        log.push(Timestamp::from_seconds(3), sample_event());
        let line = log.to_jsonl();
        assert!(line.starts_with(r#"{"seq":1,"at":3,"event":"poll_created""#));
        assert!(line.ends_with('\n'));
        let parsed: EventRecord = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(parsed, log.records()[0]);
    }
}

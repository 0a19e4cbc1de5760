//! Outcome resolution from deterministic scenario feeds.
//!
//! Feeds are static data registered up front; there is no network fetching.
//! A feed is queryable once finalized, and resolution picks the entry with
//! the greatest timestamp at or before the query time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Outcome, OutcomeSet, Timestamp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("topic `{0}` already has a registered feed")]
    DuplicateTopic(String),
    #[error("unknown topic `{0}`")]
    UnknownTopic(String),
    #[error("feed for `{topic}` is not finalized at t={at} (finalized_at={finalized_at}, first entry at {first_entry:?})")]
    NotFinalized {
        topic: String,
        at: Timestamp,
        finalized_at: Timestamp,
        first_entry: Option<Timestamp>,
    },
    #[error("feed entries must be strictly increasing in time")]
    UnorderedEntries,
    #[error("feed for `{topic}` resolves outside the declared outcome set: {outcome}")]
    OutcomeOutsideSet { topic: String, outcome: Outcome },
}

/// A finalized series of outcome observations for one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFeed {
    pub topic: String,
    pub finalized_at: Timestamp,
    /// `(timestamp, outcome)` pairs, strictly increasing in time.
    pub entries: Vec<(Timestamp, Outcome)>,
}

impl OutcomeFeed {
    pub fn new(
        topic: impl Into<String>,
        finalized_at: Timestamp,
        entries: Vec<(Timestamp, Outcome)>,
    ) -> Result<Self, OracleError> {
        let feed = OutcomeFeed {
            topic: topic.into(),
            finalized_at,
            entries,
        };
        feed.check_ordering()?;
        Ok(feed)
    }

    fn check_ordering(&self) -> Result<(), OracleError> {
        if self.entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(OracleError::UnorderedEntries);
        }
        Ok(())
    }

    /// Reject feeds that could resolve outside a poll's outcome set.
    pub fn validate_against(&self, outcomes: &OutcomeSet) -> Result<(), OracleError> {
        for (_, outcome) in &self.entries {
            if !outcomes.contains(outcome) {
                return Err(OracleError::OutcomeOutsideSet {
                    topic: self.topic.clone(),
                    outcome: outcome.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Registry of feeds, keyed by topic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleBook {
    feeds: std::collections::BTreeMap<String, OutcomeFeed>,
}

impl OracleBook {
    pub fn new() -> Self {
        OracleBook::default()
    }

    pub fn register_feed(&mut self, feed: OutcomeFeed) -> Result<(), OracleError> {
        feed.check_ordering()?;
        if self.feeds.contains_key(&feed.topic) {
            return Err(OracleError::DuplicateTopic(feed.topic));
        }
        self.feeds.insert(feed.topic.clone(), feed);
        Ok(())
    }

    pub fn feed(&self, topic: &str) -> Option<&OutcomeFeed> {
        self.feeds.get(topic)
    }

    /// Resolve the outcome for a topic as of `at`. Requires the feed to be
    /// finalized no later than `at` and returns the entry with the greatest
    /// timestamp at or before `at`.
    pub fn resolve(&self, topic: &str, at: Timestamp) -> Result<Outcome, OracleError> {
        let feed = self
            .feeds
            .get(topic)
            .ok_or_else(|| OracleError::UnknownTopic(topic.to_string()))?;
        let not_finalized = || OracleError::NotFinalized {
            topic: topic.to_string(),
            at,
            finalized_at: feed.finalized_at,
            first_entry: feed.entries.first().map(|(t, _)| *t),
        };
        if at < feed.finalized_at {
            return Err(not_finalized());
        }
        feed.entries
            .iter()
            .rev()
            .find(|(t, _)| *t <= at)
            .map(|(_, o)| o.clone())
            .ok_or_else(not_finalized)
    }
}

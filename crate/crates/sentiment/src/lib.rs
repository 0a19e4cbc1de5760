//! A deterministic engine and simulator for staked-sentiment polling.
//!
//! Polls collect sentiment backed by token stakes; a pollster-funded reward
//! pool pays performance-based rewards once outcomes resolve, with payouts
//! following a declared performance evaluation function. The crate covers
//! the full lifecycle — staking, tallying, scheduled evaluations, closure —
//! on an exact-integer token ledger with transfer restrictions, escrow
//! accounting and strict conservation, plus commit-reveal sealing for
//! in-flight privacy, deterministic oracle fixtures, and replayable
//! scenarios pinned to golden reports.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run -p sentiment-protocol --example poll_lifecycle
//! cargo run -p sentiment-protocol --example buy_sell_settlement
//! cargo run -p sentiment-protocol --example sealed_submissions
//! cargo run -p sentiment-protocol --example rating_curves
//! cargo run -p sentiment-protocol --example arbitrage_scan
//! cargo run -p sentiment-protocol --example multi_evaluation
//! cargo run -p sentiment-protocol --example governance_rounds
//! cargo run -p sentiment-protocol --example scenario_replay
//! ```
//!
//! The `sentiment` binary drives the same engine from the command line with
//! persistent state; see the README for the command set.

pub mod cli;
pub mod engine;
pub mod events;
pub mod ledger;
pub mod minimax;
pub mod oracle;
pub mod pef;
pub mod rate;
pub mod report;
pub mod scenarios;
pub mod sealing;
pub mod types;

pub use engine::{ChoiceInput, Engine, EngineError, Phase, PollId, PollSpec, PollSpecFile};
pub use ledger::{AccountId, Ledger, LedgerError, Lot, TokenId, TokenPolicy, TransferRule};
pub use pef::{EvaluationSchedule, PeFunction, PefError};
pub use rate::Rate;
pub use report::SettlementReport;
pub use types::{Outcome, OutcomeSet, SentimentChoice, SignedPerToken, Timestamp, TokenAmount};

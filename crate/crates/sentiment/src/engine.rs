//! The poll lifecycle state machine: creation with pool validation, staking,
//! tallying with stake return, scheduled performance evaluations with exact
//! settlement, and closure.
//!
//! Rounding rules: rewards round down to base units, withholding rounds up,
//! and every unit of rounding dust accrues to the pollster at close — the
//! escrow can never go insolvent and supply is never inflated. Pool sizing
//! and withholding use exact rational arithmetic; evaluated per-token values
//! are doubles converted with mantissa-exact flooring.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

use crate::events::{Event, EventLog};
use crate::ledger::{
    AccountId, EscrowBucket, EscrowId, Ledger, LedgerError, Lot, LotSplit, TokenId,
};
use crate::oracle::{OracleBook, OracleError};
use crate::pef::{self, EvaluationSchedule, PeFunction, PefError};
use crate::rate::{mul_f64_floor, Rate};
use crate::report::{EvalRow, ReportTotals, SettlementReport, SubmissionRow};
use crate::sealing::{self, RevealKey, SealError, SealKey, SealedChoice};
use crate::types::{Outcome, OutcomeSet, SentimentChoice, Timestamp, TokenAmount};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PollId(String);

impl PollId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PollId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for PollId {
    fn from(s: &str) -> Self {
        PollId(s.to_string())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown poll `{0}`")]
    UnknownPoll(PollId),
    #[error("operation not valid in phase {actual} (expected {expected})")]
    WrongPhase { expected: String, actual: Phase },
    #[error("too early: allowed from t={allowed_at}, now t={now}")]
    TooEarly { allowed_at: Timestamp, now: Timestamp },
    #[error("sealed poll requires the reveal key at tally time")]
    MissingRevealKey,
    #[error("pool deposit {provided} below required pool {required}")]
    InsufficientPool {
        required: TokenAmount,
        provided: TokenAmount,
    },
    #[error("stake of {stake} would push total {total_staked} past the cap {max_total}; submission rejected whole")]
    CapExceeded {
        max_total: TokenAmount,
        total_staked: TokenAmount,
        stake: TokenAmount,
    },
    #[error("invalid choice: {0}")]
    InvalidChoice(String),
    #[error("invalid stake: {0}")]
    InvalidStake(String),
    #[error("invalid poll spec: {0}")]
    InvalidSpec(String),
    #[error("reserve has {available}, round needs {required}")]
    InsufficientReserve {
        required: TokenAmount,
        available: TokenAmount,
    },
    #[error("outcome unavailable from oracle: {0}")]
    OracleUnavailable(#[from] OracleError),
    #[error("resolved outcome {0} is outside the poll's declared outcome set")]
    OutcomeOutsideSet(Outcome),
    #[error("time went backwards: engine clock at {clock}, operation at {now}")]
    NonMonotonicTime { clock: Timestamp, now: Timestamp },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Pef(#[from] PefError),
    #[error(transparent)]
    Seal(#[from] SealError),
    #[error("amount overflow")]
    Overflow,
}

// ---------------------------------------------------------------------------
// Poll specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StakingParams {
    pub token: TokenId,
    pub window_start: Timestamp,
    pub window_end: Timestamp,
    pub min_total: TokenAmount,
    pub max_total: TokenAmount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollSpec {
    pub topic: String,
    pub outcomes: OutcomeSet,
    pub sentiments: Vec<SentimentChoice>,
    pub staking: StakingParams,
    /// Cool-down between the end of the contribution window and tallying.
    pub cooldown: Timestamp,
    pub schedule: EvaluationSchedule,
    pub pef: PeFunction,
    pub sealed: bool,
    pub policy_hook: Option<String>,
    pub pollster: AccountId,
}

impl PollSpec {
    /// Canonical tally time: window end plus cool-down.
    pub fn tally_time(&self) -> Timestamp {
        self.staking.window_end.saturating_add(self.cooldown)
    }

    /// Scheduled time of the 1-based evaluation `index`.
    pub fn evaluation_time(&self, index: u32) -> Timestamp {
        let mut t = self.tally_time();
        for entry in self.schedule.entries().iter().take(index as usize) {
            t = t.saturating_add(entry.delta);
        }
        t
    }

    pub fn contains_sentiment(&self, choice: &SentimentChoice) -> bool {
        let key = choice.canonical_key();
        self.sentiments.iter().any(|s| s.canonical_key() == key)
    }
}

/// On-disk poll definition with display amounts; resolved against the
/// ledger's token registry to get base units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollSpecFile {
    pub topic: String,
    pub outcomes: OutcomeSet,
    pub sentiments: Vec<SentimentChoice>,
    pub staking: StakingFile,
    pub dt0: u64,
    pub schedule: EvaluationSchedule,
    pub pef: PeFunction,
    #[serde(default)]
    pub sealed: bool,
    #[serde(default)]
    pub policy_hook: Option<String>,
    pub pollster: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StakingFile {
    pub token: String,
    pub start: u64,
    pub end: u64,
    pub min: String,
    pub max: String,
}

impl PollSpecFile {
    pub fn resolve(&self, ledger: &Ledger) -> Result<PollSpec, EngineError> {
        let token = TokenId::new(self.staking.token.clone());
        let decimals = ledger.decimals(&token)?;
        Ok(PollSpec {
            topic: self.topic.clone(),
            outcomes: self.outcomes.clone(),
            sentiments: self.sentiments.clone(),
            staking: StakingParams {
                token,
                window_start: Timestamp::from_seconds(self.staking.start),
                window_end: Timestamp::from_seconds(self.staking.end),
                min_total: TokenAmount::from_display(&self.staking.min, decimals)
                    .map_err(|e| EngineError::InvalidSpec(e.to_string()))?,
                max_total: TokenAmount::from_display(&self.staking.max, decimals)
                    .map_err(|e| EngineError::InvalidSpec(e.to_string()))?,
            },
            cooldown: Timestamp::from_seconds(self.dt0),
            schedule: self.schedule.clone(),
            pef: self.pef.clone(),
            sealed: self.sealed,
            policy_hook: self.policy_hook.clone(),
            pollster: AccountId::new(self.pollster.clone()),
        })
    }
}

// ---------------------------------------------------------------------------
// Poll state
// ---------------------------------------------------------------------------

/// Observable lifecycle phase. `Evaluated(0)` is the tallied state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Created,
    Contributing,
    AwaitingTally,
    Evaluated(u32),
    Closed,
    Voided,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Created => write!(f, "created"),
            Phase::Contributing => write!(f, "contributing"),
            Phase::AwaitingTally => write!(f, "awaiting_tally"),
            Phase::Evaluated(0) => write!(f, "tallied"),
            Phase::Evaluated(k) => write!(f, "evaluated({k})"),
            Phase::Closed => write!(f, "closed"),
            Phase::Voided => write!(f, "voided"),
        }
    }
}

/// Stored progression; pre-tally phases derive from the clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Progress {
    PreTally,
    Evaluated(u32),
    Voided,
    Closed { voided: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SubmittedChoice {
    Clear(SentimentChoice),
    Sealed(SealedChoice),
    Revealed(SentimentChoice),
}

impl SubmittedChoice {
    pub fn resolved(&self) -> Option<&SentimentChoice> {
        match self {
            SubmittedChoice::Clear(c) | SubmittedChoice::Revealed(c) => Some(c),
            SubmittedChoice::Sealed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPayout {
    pub index: u32,
    pub reward: TokenAmount,
    pub released: TokenAmount,
    pub forfeited: TokenAmount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub submission_id: String,
    pub account: AccountId,
    pub stake: TokenAmount,
    split: LotSplit,
    returned: LotSplit,
    pub choice: SubmittedChoice,
    pub submitted_at: Timestamp,
    /// Set when a sealed submission failed verification at tally.
    pub excluded: bool,
    pub returned_at_tally: TokenAmount,
    pub refunded: TokenAmount,
    pub withheld: TokenAmount,
    withheld_remaining: TokenAmount,
    pub evals: Vec<EvalPayout>,
}

impl Submission {
    fn live(&self) -> bool {
        !self.excluded
    }

    /// Allocate a return of `amount` against the stake's original lots,
    /// refilling `Originated` first.
    fn return_lots(&mut self, amount: TokenAmount) -> LotSplit {
        let originated_capacity = self
            .split
            .originated
            .checked_sub(self.returned.originated)
            .expect("returned lots exceed stake split");
        let originated = originated_capacity.min(amount);
        let earned = amount.checked_sub(originated).expect("split underflow");
        self.returned.originated = self.returned.originated.checked_add(originated).unwrap();
        self.returned.earned = self.returned.earned.checked_add(earned).unwrap();
        LotSplit { originated, earned }
    }

    pub fn net_delta(&self) -> i128 {
        let received = self.returned_at_tally.base_units()
            + self.refunded.base_units()
            + self
                .evals
                .iter()
                .map(|e| e.reward.base_units() + e.released.base_units())
                .sum::<u128>();
        received as i128 - self.stake.base_units() as i128
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyResult {
    pub weights: BTreeMap<String, TokenAmount>,
    pub total_live: TokenAmount,
    /// Unique plurality winner by staked weight; ties leave it empty.
    pub winner: Option<String>,
    pub withheld_total: TokenAmount,
    pub tallied_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TallyOutcome {
    Tallied(TallyResult),
    Voided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poll {
    pub poll_id: PollId,
    pub spec: PollSpec,
    pub escrow_id: EscrowId,
    progress: Progress,
    pub total_staked: TokenAmount,
    pub pool_deposit: TokenAmount,
    deposit_split: LotSplit,
    pub seal_key: Option<SealKey>,
    submissions: Vec<Submission>,
    pub tally: Option<TallyResult>,
    pub pool_spent: TokenAmount,
    pub forfeited_total: TokenAmount,
    pub pool_residual_returned: TokenAmount,
}

impl Poll {
    pub fn phase_at(&self, now: Timestamp) -> Phase {
        match self.progress {
            Progress::PreTally => {
                if now < self.spec.staking.window_start {
                    Phase::Created
                } else if now < self.spec.staking.window_end {
                    Phase::Contributing
                } else {
                    Phase::AwaitingTally
                }
            }
            Progress::Evaluated(k) => Phase::Evaluated(k),
            Progress::Voided => Phase::Voided,
            Progress::Closed { .. } => Phase::Closed,
        }
    }

    pub fn submissions(&self) -> &[Submission] {
        &self.submissions
    }

    pub fn voided(&self) -> bool {
        matches!(
            self.progress,
            Progress::Voided | Progress::Closed { voided: true }
        )
    }

    pub fn evaluations_done(&self) -> u32 {
        match self.progress {
            Progress::Evaluated(k) => k,
            Progress::Closed { voided: false } => self.spec.schedule.len() as u32,
            _ => 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Policy hooks
// ---------------------------------------------------------------------------

/// Named action fired from tally results (the governance use case). The
/// engine logs every execution; registered handlers additionally run
/// scenario-defined effects.
pub trait PolicyHandler: Send {
    fn execute(&mut self, poll_id: &PollId, hook: &str, decision: &str);
}

impl<F: FnMut(&PollId, &str, &str) + Send> PolicyHandler for F {
    fn execute(&mut self, poll_id: &PollId, hook: &str, decision: &str) {
        self(poll_id, hook, decision)
    }
}

/// A submission as handed to `submit`.
#[derive(Debug, Clone, PartialEq)]
pub enum ChoiceInput {
    Clear(SentimentChoice),
    Sealed(SealedChoice),
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct Engine {
    pub ledger: Ledger,
    pub oracle: OracleBook,
    polls: BTreeMap<PollId, Poll>,
    next_poll_seq: u64,
    clock: Timestamp,
    pub events: EventLog,
    #[serde(skip)]
    handlers: BTreeMap<String, Box<dyn PolicyHandler>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine {
            ledger: Ledger::new(),
            oracle: OracleBook::new(),
            polls: BTreeMap::new(),
            next_poll_seq: 1,
            clock: Timestamp::ZERO,
            events: EventLog::new(),
            handlers: BTreeMap::new(),
        }
    }

    pub fn now(&self) -> Timestamp {
        self.clock
    }

    /// Advance the logical clock without running an operation.
    pub fn advance(&mut self, delta: Timestamp) -> Timestamp {
        self.clock = self.clock.saturating_add(delta);
        self.clock
    }

    pub fn register_handler(&mut self, hook: impl Into<String>, handler: Box<dyn PolicyHandler>) {
        self.handlers.insert(hook.into(), handler);
    }

    pub fn poll(&self, poll_id: &PollId) -> Result<&Poll, EngineError> {
        self.polls
            .get(poll_id)
            .ok_or_else(|| EngineError::UnknownPoll(poll_id.clone()))
    }

    pub fn polls(&self) -> impl Iterator<Item = &Poll> {
        self.polls.values()
    }

    fn poll_mut(&mut self, poll_id: &PollId) -> Result<&mut Poll, EngineError> {
        self.polls
            .get_mut(poll_id)
            .ok_or_else(|| EngineError::UnknownPoll(poll_id.clone()))
    }

    fn touch_clock(&mut self, now: Timestamp) -> Result<(), EngineError> {
        if now < self.clock {
            return Err(EngineError::NonMonotonicTime {
                clock: self.clock,
                now,
            });
        }
        self.clock = now;
        Ok(())
    }

    // -- create ---------------------------------------------------------------

    pub fn create_poll(
        &mut self,
        spec: PollSpec,
        pool_deposit: TokenAmount,
        seal_key: Option<SealKey>,
        now: Timestamp,
    ) -> Result<PollId, EngineError> {
        self.touch_clock(now)?;
        self.validate_spec(&spec, now)?;
        if spec.sealed && seal_key.is_none() {
            return Err(EngineError::InvalidSpec(
                "sealed polls need a seal key at creation".into(),
            ));
        }

        let required = pef::required_pool(&spec.schedule, &spec.pef, spec.staking.max_total)?;
        if pool_deposit < required {
            return Err(EngineError::InsufficientPool {
                required,
                provided: pool_deposit,
            });
        }

        let poll_id = PollId(format!("poll-{}", self.next_poll_seq));
        let escrow_id = EscrowId::new(format!("escrow:{poll_id}"));
        self.ledger.create_escrow(escrow_id.clone(), &spec.staking.token)?;
        let deposit_split = self
            .ledger
            .draw_split(&spec.staking.token, &spec.pollster, pool_deposit)?;
        self.ledger
            .deposit_to_escrow(&escrow_id, &spec.pollster, EscrowBucket::Pool, deposit_split)?;

        self.events.push(
            now,
            Event::PollCreated {
                poll_id: poll_id.to_string(),
                topic: spec.topic.clone(),
                pollster: spec.pollster.to_string(),
                pool_deposit: pool_deposit.to_string(),
                max_total: spec.staking.max_total.to_string(),
                sealed: spec.sealed,
            },
        );

        self.next_poll_seq += 1;
        self.polls.insert(
            poll_id.clone(),
            Poll {
                poll_id: poll_id.clone(),
                spec,
                escrow_id,
                progress: Progress::PreTally,
                total_staked: TokenAmount::ZERO,
                pool_deposit,
                deposit_split,
                seal_key,
                submissions: Vec::new(),
                tally: None,
                pool_spent: TokenAmount::ZERO,
                forfeited_total: TokenAmount::ZERO,
                pool_residual_returned: TokenAmount::ZERO,
            },
        );
        Ok(poll_id)
    }

    fn validate_spec(&self, spec: &PollSpec, now: Timestamp) -> Result<(), EngineError> {
        let invalid = |msg: &str| Err(EngineError::InvalidSpec(msg.to_string()));
        if spec.staking.window_start >= spec.staking.window_end {
            return invalid("contribution window must have start < end");
        }
        if now > spec.staking.window_start {
            return invalid("polls must be created no later than the window start");
        }
        if spec.staking.min_total > spec.staking.max_total {
            return invalid("min_total exceeds max_total");
        }
        if spec.staking.max_total.is_zero() {
            return invalid("max_total must be positive");
        }
        if spec.sentiments.is_empty() {
            return invalid("sentiment set must be non-empty");
        }
        let mut keys = std::collections::BTreeSet::new();
        for sentiment in &spec.sentiments {
            if !keys.insert(sentiment.canonical_key()) {
                return invalid("sentiment set has duplicate entries");
            }
            if !sentiment.admissible_for(&spec.outcomes) {
                return invalid("interval sentiments need a continuous outcome set");
            }
        }
        self.ledger.token(&spec.staking.token)?;
        spec.pef.validate()?;

        // The schedule must never withhold more than the stake itself.
        let withhold = pef::withhold_rate(&spec.schedule, &spec.pef)?;
        if withhold > Rate::ONE {
            return invalid("schedule withholds more than the full stake");
        }

        // Every declared (outcome, sentiment) pair must evaluate cleanly:
        // exhaustively for discrete outcome sets, on a probe grid otherwise.
        let probes: Vec<Outcome> = match &spec.outcomes {
            OutcomeSet::Discrete(labels) => {
                labels.iter().map(|l| Outcome::discrete(l.clone())).collect()
            }
            OutcomeSet::ContinuousPositive => [0.5, 1.0, 2.0]
                .iter()
                .map(|v| Outcome::Continuous(*v))
                .collect(),
        };
        for outcome in &probes {
            for sentiment in &spec.sentiments {
                spec.pef.evaluate(outcome, sentiment).map_err(|e| {
                    EngineError::InvalidSpec(format!(
                        "performance function rejects ({outcome}, {sentiment}): {e}"
                    ))
                })?;
            }
        }
        Ok(())
    }

    // -- submit ---------------------------------------------------------------

    pub fn submit(
        &mut self,
        poll_id: &PollId,
        account: &AccountId,
        choice: ChoiceInput,
        stake: TokenAmount,
        now: Timestamp,
    ) -> Result<String, EngineError> {
        self.touch_clock(now)?;
        let poll = self.poll_mut(poll_id)?;
        let phase = poll.phase_at(now);
        if phase != Phase::Contributing {
            return Err(EngineError::WrongPhase {
                expected: "contributing".into(),
                actual: phase,
            });
        }
        if stake.is_zero() {
            return Err(EngineError::InvalidStake("stake must be positive".into()));
        }
        let new_total = poll
            .total_staked
            .checked_add(stake)
            .ok_or(EngineError::Overflow)?;
        if new_total > poll.spec.staking.max_total {
            return Err(EngineError::CapExceeded {
                max_total: poll.spec.staking.max_total,
                total_staked: poll.total_staked,
                stake,
            });
        }

        let (stored, logged) = match (&choice, poll.spec.sealed) {
            (ChoiceInput::Clear(c), false) => {
                if !poll.spec.contains_sentiment(c) {
                    return Err(EngineError::InvalidChoice(format!(
                        "`{}` is not in the poll's sentiment set",
                        c.canonical_key()
                    )));
                }
                (SubmittedChoice::Clear(c.clone()), c.canonical_key())
            }
            (ChoiceInput::Sealed(s), true) => (
                SubmittedChoice::Sealed(s.clone()),
                hex::encode(s.commitment),
            ),
            (ChoiceInput::Clear(_), true) => {
                return Err(EngineError::InvalidChoice(
                    "this poll only accepts sealed submissions".into(),
                ));
            }
            (ChoiceInput::Sealed(_), false) => {
                return Err(EngineError::InvalidChoice(
                    "this poll only accepts clear submissions".into(),
                ));
            }
        };

        let token = poll.spec.staking.token.clone();
        let escrow_id = poll.escrow_id.clone();
        let split = self.ledger.draw_split(&token, account, stake)?;
        self.ledger
            .deposit_to_escrow(&escrow_id, account, EscrowBucket::Stake, split)?;

        let poll = self.poll_mut(poll_id)?;
        poll.total_staked = new_total;
        let sealed = poll.spec.sealed;
        let submission_id = format!("s-{}", poll.submissions.len() + 1);
        poll.submissions.push(Submission {
            submission_id: submission_id.clone(),
            account: account.clone(),
            stake,
            split,
            returned: LotSplit::ZERO,
            choice: stored,
            submitted_at: now,
            excluded: false,
            returned_at_tally: TokenAmount::ZERO,
            refunded: TokenAmount::ZERO,
            withheld: TokenAmount::ZERO,
            withheld_remaining: TokenAmount::ZERO,
            evals: Vec::new(),
        });
        self.events.push(
            now,
            Event::SubmissionAccepted {
                poll_id: poll_id.to_string(),
                submission_id: submission_id.clone(),
                account: account.to_string(),
                stake: stake.to_string(),
                choice: logged,
                sealed,
            },
        );
        Ok(submission_id)
    }

    // -- tally ----------------------------------------------------------------

    pub fn tally(
        &mut self,
        poll_id: &PollId,
        now: Timestamp,
        reveal_key: Option<&RevealKey>,
    ) -> Result<TallyOutcome, EngineError> {
        self.touch_clock(now)?;
        let poll = self.poll_mut(poll_id)?;
        match poll.phase_at(now) {
            Phase::AwaitingTally => {}
            other @ (Phase::Created | Phase::Contributing) => {
                return Err(EngineError::WrongPhase {
                    expected: "awaiting_tally".into(),
                    actual: other,
                });
            }
            other => {
                return Err(EngineError::WrongPhase {
                    expected: "awaiting_tally".into(),
                    actual: other,
                });
            }
        }
        let tally_time = poll.spec.tally_time();
        if now < tally_time {
            return Err(EngineError::TooEarly {
                allowed_at: tally_time,
                now,
            });
        }
        // Undersubscribed polls void: full refunds, pool back to pollster.
        // No reveals are needed for that, so a lost key cannot trap funds.
        if poll.total_staked < poll.spec.staking.min_total {
            return self.void_poll(poll_id, now);
        }
        if poll.spec.sealed && reveal_key.is_none() {
            return Err(EngineError::MissingRevealKey);
        }

        // Reveal before any mutation so a wrong key aborts cleanly.
        let mut revealed: Vec<Option<Result<SentimentChoice, SealError>>> = Vec::new();
        {
            let poll = self.poll(poll_id)?;
            for submission in &poll.submissions {
                match &submission.choice {
                    SubmittedChoice::Sealed(sealed) => {
                        let key = reveal_key.expect("checked above");
                        revealed.push(Some(sealing::reveal(sealed, key).map(|(c, _)| c)));
                    }
                    _ => revealed.push(None),
                }
            }
            let sealed_results: Vec<&Result<SentimentChoice, SealError>> =
                revealed.iter().flatten().collect();
            if !sealed_results.is_empty()
                && sealed_results
                    .iter()
                    .all(|r| matches!(r, Err(SealError::KeyMismatch)))
            {
                return Err(EngineError::Seal(SealError::KeyMismatch));
            }
        }

        let poll = self.poll(poll_id)?;
        let escrow_id = poll.escrow_id.clone();
        let withhold_rate = pef::withhold_rate(&poll.spec.schedule, &poll.spec.pef)?;
        let evaluations = poll.spec.schedule.len() as u32;
        let hook = poll.spec.policy_hook.clone();

        let mut weights: BTreeMap<String, TokenAmount> = BTreeMap::new();
        let mut withheld_total = TokenAmount::ZERO;
        let mut total_live = TokenAmount::ZERO;
        let mut reveal_rejections: Vec<(String, TokenAmount)> = Vec::new();

        for index in 0..self.poll(poll_id)?.submissions.len() {
            let resolved: Option<SentimentChoice> = {
                let poll = self.poll_mut(poll_id)?;
                let submission = &mut poll.submissions[index];
                match revealed[index].take() {
                    Some(Ok(choice)) => {
                        if poll.spec.contains_sentiment(&choice) {
                            submission.choice = SubmittedChoice::Revealed(choice.clone());
                            Some(choice)
                        } else {
                            None
                        }
                    }
                    Some(Err(_)) => None,
                    None => submission.choice.resolved().cloned(),
                }
            };

            let poll = self.poll_mut(poll_id)?;
            let submission = &mut poll.submissions[index];
            let stake = submission.stake;
            match resolved {
                None => {
                    // Failed or out-of-set reveal: full refund, excluded
                    // from tallying and every evaluation.
                    submission.excluded = true;
                    submission.refunded = stake;
                    let split = submission.return_lots(stake);
                    let account = submission.account.clone();
                    let submission_id = submission.submission_id.clone();
                    self.ledger.withdraw_from_escrow(
                        &escrow_id,
                        EscrowBucket::Stake,
                        &account,
                        split,
                    )?;
                    reveal_rejections.push((submission_id, stake));
                }
                Some(choice) => {
                    let withheld = if withhold_rate.is_zero() {
                        TokenAmount::ZERO
                    } else {
                        withhold_rate
                            .mul_amount_ceil(stake)
                            .ok_or(EngineError::Overflow)?
                            .min(stake)
                    };
                    let returned = stake.checked_sub(withheld).unwrap();
                    submission.withheld = withheld;
                    submission.withheld_remaining = withheld;
                    submission.returned_at_tally = returned;
                    let split = submission.return_lots(returned);
                    let account = submission.account.clone();
                    self.ledger.escrow_move(
                        &escrow_id,
                        EscrowBucket::Stake,
                        EscrowBucket::Withheld,
                        withheld,
                    )?;
                    self.ledger.withdraw_from_escrow(
                        &escrow_id,
                        EscrowBucket::Stake,
                        &account,
                        split,
                    )?;
                    withheld_total = withheld_total
                        .checked_add(withheld)
                        .ok_or(EngineError::Overflow)?;
                    total_live = total_live.checked_add(stake).ok_or(EngineError::Overflow)?;
                    let slot = weights.entry(choice.canonical_key()).or_default();
                    *slot = slot.checked_add(stake).ok_or(EngineError::Overflow)?;
                }
            }
        }

        for (submission_id, refunded) in reveal_rejections {
            self.events.push(
                now,
                Event::RevealRejected {
                    poll_id: poll_id.to_string(),
                    submission_id,
                    refunded: refunded.to_string(),
                },
            );
        }

        // Plurality winner; exact ties leave the decision unmade.
        let winner = {
            let best = weights.values().max().copied();
            match best {
                Some(best) if !best.is_zero() => {
                    let mut at_best = weights.iter().filter(|(_, w)| **w == best);
                    let candidate = at_best.next().map(|(k, _)| k.clone());
                    if at_best.next().is_some() {
                        None
                    } else {
                        candidate
                    }
                }
                _ => None,
            }
        };

        let result = TallyResult {
            weights: weights.clone(),
            total_live,
            winner: winner.clone(),
            withheld_total,
            tallied_at: now,
        };
        let poll = self.poll_mut(poll_id)?;
        poll.tally = Some(result.clone());
        poll.progress = Progress::Evaluated(0);
        debug_assert!(evaluations >= 1);

        self.events.push(
            now,
            Event::TallyCompleted {
                poll_id: poll_id.to_string(),
                weights: weights
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_string()))
                    .collect(),
                withheld_total: withheld_total.to_string(),
                winner: winner.clone(),
            },
        );

        if let (Some(hook), Some(decision)) = (hook, winner) {
            self.events.push(
                now,
                Event::PolicyExecuted {
                    poll_id: poll_id.to_string(),
                    hook: hook.clone(),
                    decision: decision.clone(),
                },
            );
            if let Some(handler) = self.handlers.get_mut(&hook) {
                handler.execute(poll_id, &hook, &decision);
            }
        }

        debug_assert!(self.ledger.check_conservation().is_ok());
        Ok(TallyOutcome::Tallied(result))
    }

    fn void_poll(&mut self, poll_id: &PollId, now: Timestamp) -> Result<TallyOutcome, EngineError> {
        let poll = self.poll(poll_id)?;
        let escrow_id = poll.escrow_id.clone();
        let total_staked = poll.total_staked;
        let min_total = poll.spec.staking.min_total;
        let pollster = poll.spec.pollster.clone();
        let deposit_split = poll.deposit_split;

        for index in 0..self.poll(poll_id)?.submissions.len() {
            let poll = self.poll_mut(poll_id)?;
            let submission = &mut poll.submissions[index];
            let stake = submission.stake;
            submission.refunded = stake;
            let split = submission.return_lots(stake);
            let account = submission.account.clone();
            self.ledger
                .withdraw_from_escrow(&escrow_id, EscrowBucket::Stake, &account, split)?;
        }
        self.ledger
            .withdraw_from_escrow(&escrow_id, EscrowBucket::Pool, &pollster, deposit_split)?;

        let poll = self.poll_mut(poll_id)?;
        poll.progress = Progress::Voided;
        poll.pool_residual_returned = poll.pool_deposit;
        self.events.push(
            now,
            Event::PollVoided {
                poll_id: poll_id.to_string(),
                total_staked: total_staked.to_string(),
                min_total: min_total.to_string(),
            },
        );
        debug_assert!(self.ledger.check_conservation().is_ok());
        Ok(TallyOutcome::Voided)
    }

    // -- performance evaluation -------------------------------------------------

    pub fn evaluate_performance(
        &mut self,
        poll_id: &PollId,
        index: u32,
        now: Timestamp,
    ) -> Result<(), EngineError> {
        self.touch_clock(now)?;
        let poll = self.poll(poll_id)?;
        let phase = poll.phase_at(now);
        let evaluations = poll.spec.schedule.len() as u32;
        match phase {
            Phase::Evaluated(k) if k + 1 == index && index <= evaluations => {}
            other => {
                return Err(EngineError::WrongPhase {
                    expected: format!("evaluated({})", index.saturating_sub(1)),
                    actual: other,
                });
            }
        }
        let eval_time = poll.spec.evaluation_time(index);
        if now < eval_time {
            return Err(EngineError::TooEarly {
                allowed_at: eval_time,
                now,
            });
        }

        // Resolve the outcome only when the function reads it; constant
        // functions settle with no oracle at all.
        let outcome: Option<Outcome> = if poll.spec.pef.needs_outcome() {
            let resolved = self.oracle.resolve(&poll.spec.topic, now)?;
            if !poll.spec.outcomes.contains(&resolved) {
                return Err(EngineError::OutcomeOutsideSet(resolved));
            }
            Some(resolved)
        } else {
            None
        };

        let escrow_id = poll.escrow_id.clone();
        let weight = poll.spec.schedule.weight(index as usize)?;
        let tranche_rate = weight
            .checked_mul((-poll.spec.pef.inf_rate()).clamp_non_negative())
            .ok_or(EngineError::Overflow)?;
        let tranche_rate_f64 = tranche_rate.to_f64();
        let weight_f64 = weight.to_f64();
        let pef = poll.spec.pef.clone();
        let last = index == evaluations;

        let mut rewards_total = TokenAmount::ZERO;
        let mut released_total = TokenAmount::ZERO;
        let mut forfeited_total = TokenAmount::ZERO;

        for sub_index in 0..self.poll(poll_id)?.submissions.len() {
            let (stake, choice, withheld_remaining) = {
                let submission = &self.poll(poll_id)?.submissions[sub_index];
                if !submission.live() {
                    continue;
                }
                (
                    submission.stake,
                    submission
                        .choice
                        .resolved()
                        .expect("live submissions are resolved after tally")
                        .clone(),
                    submission.withheld_remaining,
                )
            };

            // Withheld tranche for this evaluation.
            let tranche = if last {
                withheld_remaining
            } else {
                tranche_rate
                    .mul_amount_ceil(stake)
                    .ok_or(EngineError::Overflow)?
                    .min(withheld_remaining)
            };

            // Settlement rule: reward = floor(max(v, 0) * stake) from the
            // pool; released = floor((w*|inf| + min(v, 0)) * stake) from the
            // withheld tranche. Variants with stored rational payoffs settle
            // in exact rational arithmetic; curves go through the double
            // with mantissa-exact flooring.
            let exact_value = match &outcome {
                Some(o) => pef.evaluate_rate(o, &choice)?,
                None => Some(pef.sup_rate()),
            };
            let (mut reward, released_uncapped) = match exact_value {
                Some(base_rate) => {
                    let scaled = weight
                        .checked_mul(base_rate)
                        .ok_or(EngineError::Overflow)?;
                    let reward = scaled
                        .clamp_non_negative()
                        .mul_amount_floor(stake)
                        .ok_or(EngineError::Overflow)?;
                    let released_rate = tranche_rate
                        .checked_add(scaled.min(Rate::ZERO))
                        .ok_or(EngineError::Overflow)?
                        .clamp_non_negative();
                    let released = released_rate
                        .mul_amount_floor(stake)
                        .ok_or(EngineError::Overflow)?;
                    (reward, released)
                }
                None => {
                    let resolved = outcome.as_ref().expect("curved variants read the outcome");
                    let value = weight_f64 * pef.evaluate(resolved, &choice)?.value();
                    let reward = TokenAmount::from_base_units(
                        mul_f64_floor(stake.base_units(), value.max(0.0))
                            .ok_or(EngineError::Overflow)?,
                    );
                    let released_rate = (tranche_rate_f64 + value.min(0.0)).max(0.0);
                    let released = TokenAmount::from_base_units(
                        mul_f64_floor(stake.base_units(), released_rate)
                            .ok_or(EngineError::Overflow)?,
                    );
                    (reward, released)
                }
            };
            // The pool bound can only bind on ulp-level excess over the
            // declared supremum at astronomically large stakes.
            let pool_left = self.ledger.escrow(&escrow_id)?.bucket(EscrowBucket::Pool);
            reward = reward.min(pool_left);
            let released = released_uncapped.min(tranche);
            let forfeited = tranche.checked_sub(released).unwrap();

            let account = self.poll(poll_id)?.submissions[sub_index].account.clone();
            if !reward.is_zero() {
                self.ledger.withdraw_from_escrow(
                    &escrow_id,
                    EscrowBucket::Pool,
                    &account,
                    LotSplit::single(Lot::Earned, reward),
                )?;
            }
            if !released.is_zero() {
                let split = self.poll_mut(poll_id)?.submissions[sub_index].return_lots(released);
                self.ledger.withdraw_from_escrow(
                    &escrow_id,
                    EscrowBucket::Withheld,
                    &account,
                    split,
                )?;
            }
            self.ledger.escrow_move(
                &escrow_id,
                EscrowBucket::Withheld,
                EscrowBucket::Forfeited,
                forfeited,
            )?;

            let submission = &mut self.poll_mut(poll_id)?.submissions[sub_index];
            submission.withheld_remaining =
                submission.withheld_remaining.checked_sub(tranche).unwrap();
            submission.evals.push(EvalPayout {
                index,
                reward,
                released,
                forfeited,
            });
            rewards_total = rewards_total.checked_add(reward).ok_or(EngineError::Overflow)?;
            released_total = released_total
                .checked_add(released)
                .ok_or(EngineError::Overflow)?;
            forfeited_total = forfeited_total
                .checked_add(forfeited)
                .ok_or(EngineError::Overflow)?;
        }

        let poll = self.poll_mut(poll_id)?;
        poll.progress = Progress::Evaluated(index);
        poll.pool_spent = poll
            .pool_spent
            .checked_add(rewards_total)
            .ok_or(EngineError::Overflow)?;
        poll.forfeited_total = poll
            .forfeited_total
            .checked_add(forfeited_total)
            .ok_or(EngineError::Overflow)?;

        self.events.push(
            now,
            Event::EvaluationSettled {
                poll_id: poll_id.to_string(),
                index,
                outcome: outcome.map(|o| o.to_string()),
                rewards_total: rewards_total.to_string(),
                released_total: released_total.to_string(),
                forfeited_total: forfeited_total.to_string(),
            },
        );
        debug_assert!(self.ledger.check_conservation().is_ok());
        Ok(())
    }

    // -- close ------------------------------------------------------------------

    pub fn close_poll(
        &mut self,
        poll_id: &PollId,
        now: Timestamp,
    ) -> Result<SettlementReport, EngineError> {
        self.touch_clock(now)?;
        let poll = self.poll(poll_id)?;
        let evaluations = poll.spec.schedule.len() as u32;
        let was_voided = match poll.progress {
            Progress::Evaluated(k) if k == evaluations => false,
            Progress::Voided => true,
            _ => {
                return Err(EngineError::WrongPhase {
                    expected: format!("evaluated({evaluations}) or voided"),
                    actual: poll.phase_at(now),
                });
            }
        };

        let escrow_id = poll.escrow_id.clone();
        let pollster = poll.spec.pollster.clone();
        let deposit_split = poll.deposit_split;

        let (pool_residual, forfeited) = if was_voided {
            // Funds were already returned when the poll voided.
            (poll.pool_deposit, TokenAmount::ZERO)
        } else {
            let escrow = self.ledger.escrow(&escrow_id)?;
            let pool_residual = escrow.bucket(EscrowBucket::Pool);
            let forfeited = escrow.bucket(EscrowBucket::Forfeited);
            debug_assert!(escrow.bucket(EscrowBucket::Stake).is_zero());
            debug_assert!(escrow.bucket(EscrowBucket::Withheld).is_zero());

            // The pool comes back to the lots it was funded from,
            // originated first; forfeited counter-party stakes are earnings.
            let originated = deposit_split.originated.min(pool_residual);
            let earned = pool_residual.checked_sub(originated).unwrap();
            self.ledger.withdraw_from_escrow(
                &escrow_id,
                EscrowBucket::Pool,
                &pollster,
                LotSplit { originated, earned },
            )?;
            self.ledger.withdraw_from_escrow(
                &escrow_id,
                EscrowBucket::Forfeited,
                &pollster,
                LotSplit::single(Lot::Earned, forfeited),
            )?;
            (pool_residual, forfeited)
        };

        let poll = self.poll_mut(poll_id)?;
        poll.progress = Progress::Closed { voided: was_voided };
        poll.pool_residual_returned = pool_residual;

        self.events.push(
            now,
            Event::PollClosed {
                poll_id: poll_id.to_string(),
                pool_residual: pool_residual.to_string(),
                forfeited_to_pollster: forfeited.to_string(),
            },
        );
        debug_assert!(self.ledger.check_conservation().is_ok());
        debug_assert!(self.ledger.escrow(&escrow_id)?.total().is_zero());
        self.report(poll_id, now)
    }

    // -- governance ---------------------------------------------------------------

    /// Create one round of a geometrically funded governance series: a
    /// constant-reward poll whose pool is round `index`'s slice of the
    /// reserve and whose submission cap is what that pool can pay for.
    pub fn run_governance_round(
        &mut self,
        round_index: u32,
        template: &PollSpec,
        total_reserve: TokenAmount,
        ratio: f64,
        now: Timestamp,
    ) -> Result<PollId, EngineError> {
        let cap = match &template.pef {
            PeFunction::Constant { cap } => *cap,
            _ => {
                return Err(EngineError::InvalidSpec(
                    "governance rounds use a constant performance function".into(),
                ));
            }
        };
        let round_pool = pef::geometric_pool(total_reserve, ratio, round_index)?;
        let available = self
            .ledger
            .balance(&template.staking.token, &template.pollster)?;
        if available < round_pool {
            return Err(EngineError::InsufficientReserve {
                required: round_pool,
                available,
            });
        }

        // The pool fixes how much sentiment it can reward.
        let fundable = cap
            .div_amount_floor(round_pool)
            .ok_or(EngineError::Overflow)?;
        let mut spec = template.clone();
        spec.staking.max_total = template.staking.max_total.min(fundable);
        spec.staking.min_total = template.staking.min_total.min(spec.staking.max_total);
        self.create_poll(spec, round_pool, None, now)
    }

    // -- reports ---------------------------------------------------------------

    pub fn report(&self, poll_id: &PollId, now: Timestamp) -> Result<SettlementReport, EngineError> {
        let poll = self.poll(poll_id)?;
        let decimals = self.ledger.decimals(&poll.spec.staking.token)?;
        let display = |a: TokenAmount| a.to_display(decimals);

        let mut refunded_total = TokenAmount::ZERO;
        let mut withheld_total = TokenAmount::ZERO;
        let rows: Vec<SubmissionRow> = poll
            .submissions
            .iter()
            .map(|submission| {
                refunded_total = refunded_total
                    .checked_add(submission.refunded)
                    .expect("refund total overflow");
                withheld_total = withheld_total
                    .checked_add(submission.withheld)
                    .expect("withheld total overflow");
                let sentiment = match (&submission.choice, submission.excluded) {
                    (_, true) => "(invalid)".to_string(),
                    (SubmittedChoice::Sealed(_), false) => "(sealed)".to_string(),
                    (choice, false) => choice
                        .resolved()
                        .map(|c| c.canonical_key())
                        .unwrap_or_else(|| "(sealed)".to_string()),
                };
                SubmissionRow {
                    submission_id: submission.submission_id.clone(),
                    account: submission.account.to_string(),
                    sentiment,
                    stake: display(submission.stake),
                    returned_at_tally: display(submission.returned_at_tally),
                    refunded: display(submission.refunded),
                    evals: submission
                        .evals
                        .iter()
                        .map(|e| EvalRow {
                            index: e.index,
                            reward: display(e.reward),
                            released: display(e.released),
                            forfeited: display(e.forfeited),
                            payout: display(
                                e.reward.checked_add(e.released).expect("payout overflow"),
                            ),
                        })
                        .collect(),
                    net: crate::types::signed_display(submission.net_delta(), decimals),
                }
            })
            .collect();

        Ok(SettlementReport {
            poll_id: poll_id.to_string(),
            topic: poll.spec.topic.clone(),
            phase: poll.phase_at(now).to_string(),
            voided: poll.voided(),
            token: poll.spec.staking.token.to_string(),
            decimals,
            rows,
            totals: ReportTotals {
                total_staked: display(poll.total_staked),
                pool_deposit: display(poll.pool_deposit),
                pool_spent: display(poll.pool_spent),
                pool_residual_to_pollster: display(poll.pool_residual_returned),
                forfeited_to_pollster: display(poll.forfeited_total),
                withheld_total: display(withheld_total),
                refunded_total: display(refunded_total),
            },
        })
    }
}

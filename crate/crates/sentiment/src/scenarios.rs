//! Deterministic end-to-end scenario runs with golden-report comparison.
//!
//! A scenario is a JSON document: token and account fixtures, oracle feeds,
//! and a time-ordered step script driving the engine. Replaying one is
//! byte-deterministic, and the built-in scenarios are pinned to golden
//! documents capturing reports, the final ledger and the event digest.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::engine::{ChoiceInput, Engine, EngineError, PollId, PollSpecFile};
use crate::ledger::{AccountId, LedgerError, Lot, TokenId, TokenPolicy, TransferRule};
use crate::oracle::{OracleError, OutcomeFeed};
use crate::report::SettlementReport;
use crate::sealing::{self, PollKeyPair, SealError};
use crate::types::{SentimentChoice, Timestamp, TokenAmount, TypeError};

pub const SCENARIO_NAMES: [&str; 5] = [
    "election2020",
    "tesla_buy_sell",
    "governance_dao",
    "rating_agency",
    "multi_pe",
];

/// Source text of a built-in scenario definition.
pub fn scenario_source(name: &str) -> Option<&'static str> {
    match name {
        "election2020" => Some(include_str!("../scenarios/election2020.json")),
        "tesla_buy_sell" => Some(include_str!("../scenarios/tesla_buy_sell.json")),
        "governance_dao" => Some(include_str!("../scenarios/governance_dao.json")),
        "rating_agency" => Some(include_str!("../scenarios/rating_agency.json")),
        "multi_pe" => Some(include_str!("../scenarios/multi_pe.json")),
        _ => None,
    }
}

/// Source text of a built-in scenario's golden document.
pub fn golden_source(name: &str) -> Option<&'static str> {
    match name {
        "election2020" => Some(include_str!("../golden/election2020.json")),
        "tesla_buy_sell" => Some(include_str!("../golden/tesla_buy_sell.json")),
        "governance_dao" => Some(include_str!("../golden/governance_dao.json")),
        "rating_agency" => Some(include_str!("../golden/rating_agency.json")),
        "multi_pe" => Some(include_str!("../golden/multi_pe.json")),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("malformed scenario definition: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("scenario step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: EngineError,
    },
    #[error("scenario fixture: {0}")]
    Fixture(String),
    #[error("unknown poll name `{0}` in step script")]
    UnknownPollName(String),
    #[error("golden mismatch for `{name}`:\n{diff}")]
    GoldenMismatch { name: String, diff: String },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Seal(#[from] SealError),
    #[error(transparent)]
    Amount(#[from] TypeError),
}

// ---------------------------------------------------------------------------
// Definition format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDef {
    pub name: String,
    #[serde(default)]
    pub notes: String,
    pub tokens: Vec<TokenDef>,
    pub accounts: Vec<AccountDef>,
    #[serde(default)]
    pub feeds: Vec<OutcomeFeed>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenDef {
    pub id: String,
    pub decimals: u32,
    pub rule: TransferRule,
    #[serde(default = "default_true")]
    pub reward_lots_free: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountDef {
    pub id: String,
    pub token: String,
    #[serde(default)]
    pub originated: Option<String>,
    #[serde(default)]
    pub earned: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    CreatePoll {
        at: u64,
        poll: String,
        deposit: String,
        #[serde(default)]
        seal_seed: Option<String>,
        spec: PollSpecFile,
    },
    Submit {
        at: u64,
        poll: String,
        account: String,
        choice: String,
        stake: String,
    },
    Tally {
        at: u64,
        poll: String,
    },
    Evaluate {
        at: u64,
        poll: String,
        index: u32,
    },
    Close {
        at: u64,
        poll: String,
    },
    Transfer {
        at: u64,
        token: String,
        from: String,
        to: String,
        amount: String,
        lot: Lot,
    },
    GovernanceRound {
        at: u64,
        poll: String,
        round: u32,
        reserve: String,
        ratio: f64,
        template: PollSpecFile,
    },
}

impl Step {
    fn at(&self) -> u64 {
        match self {
            Step::CreatePoll { at, .. }
            | Step::Submit { at, .. }
            | Step::Tally { at, .. }
            | Step::Evaluate { at, .. }
            | Step::Close { at, .. }
            | Step::Transfer { at, .. }
            | Step::GovernanceRound { at, .. } => *at,
        }
    }
}

pub fn load_scenario(json: &str) -> Result<ScenarioDef, ScenarioError> {
    let def: ScenarioDef = serde_json::from_str(json)?;
    if def.steps.windows(2).any(|w| w[0].at() > w[1].at()) {
        return Err(ScenarioError::Fixture(
            "steps must be ordered by non-decreasing time".into(),
        ));
    }
    Ok(def)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// The output of one scenario execution.
pub struct ScenarioRun {
    pub engine: Engine,
    pub reports: BTreeMap<String, SettlementReport>,
    pub event_digest: String,
    /// Canonical golden document for this run.
    pub golden_json: String,
}

#[derive(Serialize)]
struct GoldenDoc<'a> {
    scenario: &'a str,
    event_digest: &'a str,
    reports: &'a BTreeMap<String, SettlementReport>,
    ledger: crate::ledger::LedgerSnapshot,
}

/// Deterministic per-submission nonce for sealed scenario submissions.
pub fn deterministic_nonce(seed: &[u8; 32], account: &str, ordinal: u64) -> [u8; 32] {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(b"sentiment-scenario-nonce");
    hasher.update(seed);
    hasher.update(account.as_bytes());
    hasher.update(ordinal.to_le_bytes());
    hasher.finalize().into()
}

/// Execute a scenario definition from a fresh engine.
pub fn execute(def: &ScenarioDef) -> Result<ScenarioRun, ScenarioError> {
    let mut engine = Engine::new();

    for token in &def.tokens {
        let mut policy = TokenPolicy::new(token.id.clone(), token.decimals, token.rule.clone());
        policy.reward_lots_free = token.reward_lots_free;
        engine.ledger.create_token(policy)?;
    }
    for account in &def.accounts {
        let token = TokenId::new(account.token.clone());
        let decimals = engine.ledger.decimals(&token)?;
        let account_id = AccountId::new(account.id.clone());
        for (display, lot) in [
            (&account.originated, Lot::Originated),
            (&account.earned, Lot::Earned),
        ] {
            if let Some(display) = display {
                let amount = TokenAmount::from_display(display, decimals)?;
                engine.ledger.mint(&token, &account_id, amount, lot)?;
            }
        }
    }
    for feed in &def.feeds {
        engine.oracle.register_feed(feed.clone())?;
    }

    // Poll-name bookkeeping local to the script.
    let mut polls: BTreeMap<String, PollId> = BTreeMap::new();
    let mut keys: BTreeMap<String, PollKeyPair> = BTreeMap::new();
    let mut sealed_counters: BTreeMap<String, u64> = BTreeMap::new();
    let mut reports: BTreeMap<String, SettlementReport> = BTreeMap::new();

    for (step_index, step) in def.steps.iter().enumerate() {
        let step_err = |source: EngineError| ScenarioError::Step {
            step: step_index,
            source,
        };
        let now = Timestamp::from_seconds(step.at());
        match step {
            Step::CreatePoll {
                poll,
                deposit,
                seal_seed,
                spec,
                ..
            } => {
                let resolved = spec.resolve(&engine.ledger).map_err(step_err)?;
                let decimals = engine.ledger.decimals(&resolved.staking.token)?;
                let deposit = TokenAmount::from_display(deposit, decimals)?;
                let seal_key = match seal_seed {
                    Some(seed_hex) => {
                        let seed: [u8; 32] = hex::decode(seed_hex)
                            .ok()
                            .and_then(|v| v.try_into().ok())
                            .ok_or_else(|| {
                                ScenarioError::Fixture(format!(
                                    "seal_seed must be 32 hex bytes, got `{seed_hex}`"
                                ))
                            })?;
                        let pair = PollKeyPair::from_seed(seed);
                        let key = pair.seal_key.clone();
                        keys.insert(poll.clone(), pair);
                        Some(key)
                    }
                    None => None,
                };
                let poll_id = engine
                    .create_poll(resolved, deposit, seal_key, now)
                    .map_err(step_err)?;
                polls.insert(poll.clone(), poll_id);
            }
            Step::Submit {
                poll,
                account,
                choice,
                stake,
                ..
            } => {
                let poll_id = polls
                    .get(poll)
                    .ok_or_else(|| ScenarioError::UnknownPollName(poll.clone()))?
                    .clone();
                let token = engine.poll(&poll_id).map_err(step_err)?.spec.staking.token.clone();
                let decimals = engine.ledger.decimals(&token)?;
                let stake = TokenAmount::from_display(stake, decimals)?;
                let sentiment = SentimentChoice::parse_key(choice)?;
                let input = match keys.get(poll) {
                    Some(pair) => {
                        let ordinal = sealed_counters.entry(poll.clone()).or_default();
                        *ordinal += 1;
                        let seed: [u8; 32] = pair.reveal_key.to_hex().as_bytes()[..32]
                            .try_into()
                            .expect("hex string is long enough");
                        let nonce = deterministic_nonce(&seed, account, *ordinal);
                        ChoiceInput::Sealed(sealing::seal(&sentiment, nonce, &pair.seal_key)?)
                    }
                    None => ChoiceInput::Clear(sentiment),
                };
                engine
                    .submit(&poll_id, &AccountId::new(account.clone()), input, stake, now)
                    .map_err(step_err)?;
            }
            Step::Tally { poll, .. } => {
                let poll_id = polls
                    .get(poll)
                    .ok_or_else(|| ScenarioError::UnknownPollName(poll.clone()))?
                    .clone();
                let reveal_key = keys.get(poll).map(|pair| pair.reveal_key.clone());
                engine
                    .tally(&poll_id, now, reveal_key.as_ref())
                    .map_err(step_err)?;
            }
            Step::Evaluate { poll, index, .. } => {
                let poll_id = polls
                    .get(poll)
                    .ok_or_else(|| ScenarioError::UnknownPollName(poll.clone()))?
                    .clone();
                engine
                    .evaluate_performance(&poll_id, *index, now)
                    .map_err(step_err)?;
            }
            Step::Close { poll, .. } => {
                let poll_id = polls
                    .get(poll)
                    .ok_or_else(|| ScenarioError::UnknownPollName(poll.clone()))?
                    .clone();
                let report = engine.close_poll(&poll_id, now).map_err(step_err)?;
                reports.insert(poll.clone(), report);
            }
            Step::Transfer {
                token,
                from,
                to,
                amount,
                lot,
                ..
            } => {
                let token = TokenId::new(token.clone());
                let decimals = engine.ledger.decimals(&token)?;
                let amount = TokenAmount::from_display(amount, decimals)?;
                engine.ledger.transfer(
                    &token,
                    &AccountId::new(from.clone()),
                    &AccountId::new(to.clone()),
                    amount,
                    *lot,
                    now,
                )?;
            }
            Step::GovernanceRound {
                poll,
                round,
                reserve,
                ratio,
                template,
                ..
            } => {
                let resolved = template.resolve(&engine.ledger).map_err(step_err)?;
                let decimals = engine.ledger.decimals(&resolved.staking.token)?;
                let reserve = TokenAmount::from_display(reserve, decimals)?;
                let poll_id = engine
                    .run_governance_round(*round, &resolved, reserve, *ratio, now)
                    .map_err(step_err)?;
                polls.insert(poll.clone(), poll_id);
            }
        }
    }

    engine.ledger.check_conservation()?;

    let event_digest = engine.events.digest();
    let golden_json = {
        let doc = GoldenDoc {
            scenario: &def.name,
            event_digest: &event_digest,
            reports: &reports,
            ledger: engine.ledger.snapshot(),
        };
        let mut json = serde_json::to_string_pretty(&doc).expect("golden serializes");
        json.push('\n');
        json
    };

    Ok(ScenarioRun {
        engine,
        reports,
        event_digest,
        golden_json,
    })
}

/// Run a built-in scenario and compare against its golden document.
pub fn run_scenario(name: &str) -> Result<ScenarioRun, ScenarioError> {
    let source =
        scenario_source(name).ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))?;
    let def = load_scenario(source)?;
    let run = execute(&def)?;
    let golden =
        golden_source(name).ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))?;
    if run.golden_json != golden {
        return Err(ScenarioError::GoldenMismatch {
            name: name.to_string(),
            diff: diff_lines(golden, &run.golden_json),
        });
    }
    Ok(run)
}

/// Structured line diff for golden mismatches: every differing line with
/// its number, truncated after a handful.
pub fn diff_lines(expected: &str, actual: &str) -> String {
    let mut out = String::new();
    let expected: Vec<&str> = expected.lines().collect();
    let actual: Vec<&str> = actual.lines().collect();
    let mut shown = 0;
    for i in 0..expected.len().max(actual.len()) {
        let e = expected.get(i);
        let a = actual.get(i);
        if e != a {
            out.push_str(&format!(
                "line {}:\n  expected: {}\n  actual:   {}\n",
                i + 1,
                e.unwrap_or(&"<eof>"),
                a.unwrap_or(&"<eof>"),
            ));
            shown += 1;
            if shown >= 8 {
                out.push_str("  ... further differences truncated\n");
                break;
            }
        }
    }
    if shown == 0 {
        out.push_str("(documents differ only in line endings or length)\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_ordering_is_enforced() {
        let json = r#"{
            "name": "bad",
            "tokens": [],
            "accounts": [],
            "steps": [
                {"op": "tally", "at": 10, "poll": "x"},
                {"op": "tally", "at": 5, "poll": "x"}
            ]
        }"#;
        assert!(matches!(
            load_scenario(json),
            Err(ScenarioError::Fixture(_))
        ));
    }

    #[test]
    fn unknown_scenario_name() {
        assert!(matches!(
            run_scenario("nope"),
            Err(ScenarioError::UnknownScenario(_))
        ));
    }

    #[test]
    fn diff_reports_first_differences() {
        let diff = diff_lines("a\nb\nc", "a\nX\nc");
        assert!(diff.contains("line 2"));
        assert!(diff.contains("expected: b"));
        assert!(diff.contains("actual:   X"));
    }

    #[test]
    fn builtin_definitions_parse() {
        for name in SCENARIO_NAMES {
            let def = load_scenario(scenario_source(name).unwrap()).unwrap();
            assert_eq!(def.name, name);
            assert!(!def.steps.is_empty());
        }
    }

    #[test]
    fn builtin_scenarios_match_goldens_and_replay_identically() {
        for name in SCENARIO_NAMES {
            let run = run_scenario(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            let replay = run_scenario(name).unwrap();
            assert_eq!(run.event_digest, replay.event_digest, "{name} diverged");
            run.engine.ledger.check_conservation().unwrap();
        }
    }

    #[test]
    fn governance_rounds_pay_c_per_token_and_stay_on_budget() {
        use crate::pef::geometric_pool;
        use crate::rate::{div_wide, mul_wide};

        // Every scripted participant nets exactly c = 0.01 per staked token.
        let run = run_scenario("governance_dao").unwrap();
        for report in run.reports.values() {
            for row in &report.rows {
                let stake = TokenAmount::from_display(&row.stake, 9).unwrap();
                let expected = stake.base_units() / 100;
                let net = TokenAmount::from_display(&row.net, 9).unwrap();
                assert_eq!(net.base_units(), expected, "{}", row.account);
            }
        }

        // Twenty rounds of pools sum to the closed form 100,000*(1 - 0.99^20)
        // up to one base unit of flooring per round. The closed form is
        // computed exactly: 10^14 * 0.99^20 = 99^20 / 10^26, via wide ints.
        let total = TokenAmount::from_display("100000", 9).unwrap();
        let mut sum: u128 = 0;
        for i in 1..=20 {
            sum += geometric_pool(total, 0.99, i).unwrap().base_units();
        }
        let pow10 = 99u128.pow(10);
        let (hi, lo) = mul_wide(pow10, pow10); // 99^20, 256-bit
        let (q, r) = div_wide(hi, lo, 10u128.pow(26)).unwrap();
        let closed_form = 10u128.pow(14) - q - u128::from(r != 0);
        assert!(sum <= closed_form, "sum {sum} exceeds closed form {closed_form}");
        assert!(
            closed_form - sum < 20,
            "sum {sum} lost more than rounding to {closed_form}"
        );
    }

    /// Regenerate the golden documents in-place. Run explicitly after an
    /// intentional behavior change:
    /// `cargo test -p sentiment-protocol --lib regen_goldens -- --ignored`
    #[test]
    #[ignore]
    fn regen_goldens() {
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("golden");
        for name in SCENARIO_NAMES {
            let def = load_scenario(scenario_source(name).unwrap()).unwrap();
            let run = execute(&def).unwrap();
            std::fs::write(root.join(format!("{name}.json")), run.golden_json).unwrap();
        }
    }
}

//! Command-line front end: define polls, advance simulated time, drive
//! lifecycles, run scenarios, and emit curve/report data.
//!
//! State between invocations lives in a single directory: `state.json`
//! (the engine) plus `events.jsonl` (the append-only event stream). Every
//! command validates the stream digest before acting and rewrites both
//! files atomically afterwards. A lock file serializes invocations per
//! state directory. There is no wall clock; `advance` is the only way time
//! moves.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::engine::{ChoiceInput, Engine, EngineError, PollId, PollSpecFile};
use crate::ledger::{
    AccountId, LedgerError, LedgerSnapshot, Lot, TokenId, TokenPolicy, TransferRule,
};
use crate::oracle::{OracleError, OutcomeFeed};
use crate::pef::{self, PeFunction, PefError};
use crate::rate::RateError;
use crate::scenarios::{self, ScenarioError};
use crate::sealing::{self, PollKeyPair, RevealKey, SealError};
use crate::types::{SentimentChoice, Timestamp, TokenAmount, TypeError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Pef(#[from] PefError),
    #[error(transparent)]
    Seal(#[from] SealError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Amount(#[from] TypeError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("{0}")]
    Usage(String),
    #[error("state directory is locked by another invocation (remove {0} if stale)")]
    Locked(PathBuf),
    #[error("state corrupted: event stream digest does not match stored state")]
    StateCorrupted,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    /// Stable exit codes, one per error category (documented in the README).
    pub fn exit_code(&self) -> i32 {
        use CliError::*;
        match self {
            Engine(e) => engine_exit_code(e),
            Ledger(e) => ledger_exit_code(e),
            Oracle(_) => 19,
            Pef(e) => pef_exit_code(e),
            Seal(_) => 18,
            Scenario(e) => scenario_exit_code(e),
            Amount(_) | Rate(_) | Usage(_) => 14,
            Locked(_) | StateCorrupted | Io { .. } | Json { .. } => 22,
        }
    }
}

fn engine_exit_code(e: &EngineError) -> i32 {
    use EngineError::*;
    match e {
        WrongPhase { .. } => 10,
        TooEarly { .. } => 11,
        InsufficientPool { .. } | InsufficientReserve { .. } => 12,
        CapExceeded { .. } => 13,
        InvalidChoice(_) | InvalidStake(_) | InvalidSpec(_) => 14,
        UnknownPoll(_) => 16,
        MissingRevealKey | Seal(_) => 18,
        OracleUnavailable(_) | OutcomeOutsideSet(_) => 19,
        Overflow => 21,
        NonMonotonicTime { .. } => 23,
        Ledger(e) => ledger_exit_code(e),
        Pef(e) => pef_exit_code(e),
    }
}

fn ledger_exit_code(e: &LedgerError) -> i32 {
    use LedgerError::*;
    match e {
        InsufficientBalance { .. } | InsufficientBucket { .. } => 12,
        TransferRestricted { .. } | AllowanceExhausted { .. } => 15,
        UnknownToken(_) | UnknownEscrow(_) => 16,
        DuplicateToken(_) | DuplicateEscrow(_) => 17,
        Overflow => 21,
        ConservationViolated { .. } => 22,
        InvalidPolicy(_) | Amount(_) => 14,
    }
}

fn pef_exit_code(e: &PefError) -> i32 {
    use PefError::*;
    match e {
        Overflow => 21,
        EmptyGrid | BadGrid | InvalidRatio | IndexOutOfRange { .. } => 14,
        _ => 14,
    }
}

fn scenario_exit_code(e: &ScenarioError) -> i32 {
    use ScenarioError::*;
    match e {
        UnknownScenario(_) | UnknownPollName(_) => 16,
        GoldenMismatch { .. } => 20,
        Step { source, .. } => engine_exit_code(source),
        Ledger(e) => ledger_exit_code(e),
        Oracle(_) => 19,
        Seal(_) => 18,
        Malformed(_) | Fixture(_) | Amount(_) => 14,
    }
}

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "sentiment",
    about = "Deterministic engine and simulator for staked-sentiment polling",
    version
)]
pub struct Cli {
    /// Directory holding persisted engine state between invocations.
    #[arg(long, global = true, default_value = ".sentiment-state")]
    pub state_dir: PathBuf,
    /// Output format for results on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// Suppress human-oriented chatter; machine output still prints.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Advance the simulated clock by a number of seconds.
    Advance { seconds: u64 },
    /// Token registry operations.
    #[command(subcommand)]
    Token(TokenCmd),
    /// Oracle feed operations.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Poll lifecycle operations.
    #[command(subcommand)]
    Poll(PollCmd),
    /// Scenario simulation.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Performance-evaluation function tools (stateless).
    #[command(subcommand)]
    Pef(PefCmd),
    /// Ledger inspection and snapshots.
    #[command(subcommand)]
    Ledger(LedgerCmd),
}

#[derive(Debug, Subcommand)]
pub enum TokenCmd {
    /// Register a token: `--rule free`, `--rule locked` (no user-to-user
    /// transfers), or `--rule quarterly:1/10`.
    Create {
        id: String,
        #[arg(long, default_value_t = 9)]
        decimals: u32,
        #[arg(long, default_value = "free")]
        rule: String,
        /// Restrict earned-reward lots like originated ones.
        #[arg(long)]
        restrict_rewards: bool,
    },
    /// Mint new supply to an account.
    Mint {
        token: String,
        account: String,
        amount: String,
        #[arg(long, value_enum, default_value_t = LotArg::Originated)]
        lot: LotArg,
    },
    /// Transfer between users (subject to the token's transfer rule).
    Transfer {
        token: String,
        from: String,
        to: String,
        amount: String,
        #[arg(long, value_enum, default_value_t = LotArg::Originated)]
        lot: LotArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LotArg {
    Originated,
    Earned,
}

impl From<LotArg> for Lot {
    fn from(l: LotArg) -> Lot {
        match l {
            LotArg::Originated => Lot::Originated,
            LotArg::Earned => Lot::Earned,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum OracleCmd {
    /// Register an outcome feed from a JSON file.
    Register { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum PollCmd {
    /// Create a poll from a spec file, escrowing the reward pool.
    Create {
        spec_file: PathBuf,
        #[arg(long)]
        deposit: String,
        /// 32-byte hex seed for the poll key pair (sealed polls). A random
        /// pair is generated when omitted; the reveal key prints once.
        #[arg(long)]
        seal_seed: Option<String>,
    },
    /// Stake sentiment on a poll.
    Submit {
        poll: String,
        account: String,
        /// Sentiment key: a label like `buy`, or an interval like `[1,2)`.
        choice: String,
        stake: String,
        /// 32-byte hex nonce for sealed submissions (random when omitted).
        #[arg(long)]
        nonce: Option<String>,
    },
    /// Tally a poll after its window and cool-down have passed.
    Tally {
        poll: String,
        /// Reveal key hex (required for sealed polls).
        #[arg(long)]
        reveal_key: Option<String>,
    },
    /// Run the next scheduled performance evaluation.
    Evaluate {
        poll: String,
        /// 1-based evaluation index; defaults to the next pending one.
        #[arg(long)]
        index: Option<u32>,
    },
    /// Close a fully evaluated (or voided) poll.
    Close { poll: String },
    /// Print the settlement report.
    Report {
        poll: String,
        /// Also write the CSV rendering to a file.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCmd {
    /// Run a built-in scenario (checked against its golden document) or a
    /// scenario definition file.
    Run {
        scenario: String,
        /// Write the run's golden document to a file.
        #[arg(long)]
        write_golden: Option<PathBuf>,
    },
    /// List built-in scenarios.
    List,
}

#[derive(Debug, Subcommand)]
pub enum PefCmd {
    /// Sample a payoff curve to CSV (stdout or --out).
    Curve {
        pef_file: PathBuf,
        /// Sentiment label; arrow aliases are accepted.
        sentiment: String,
        /// Grid as start:stop:steps over positive ratios.
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a stake mix with outcome-independent profit.
    Arbitrage {
        pef_file: PathBuf,
        /// Comma-separated sentiment labels (defaults per variant).
        #[arg(long)]
        sentiments: Option<String>,
        /// Discrete outcome labels, comma separated.
        #[arg(long)]
        outcomes: Option<String>,
        /// Continuous outcome grid as start:stop:steps (default: 1001
        /// log-spaced points over [0.01, 100]).
        #[arg(long)]
        grid: Option<String>,
        /// Profit threshold (default: 1e-9 of the function's supremum).
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Compute the required reward pool and withholding for a function.
    Pool {
        pef_file: PathBuf,
        #[arg(long)]
        max_total: String,
        #[arg(long, default_value_t = 9)]
        decimals: u32,
        /// Schedule weights, comma separated (default: a single full-weight
        /// evaluation).
        #[arg(long)]
        weights: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LedgerCmd {
    /// Show balances and escrows.
    Show,
    /// Export the canonical ledger snapshot JSON.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Import a ledger snapshot into a fresh state directory.
    Import { file: PathBuf },
}

// ---------------------------------------------------------------------------
// State directory
// ---------------------------------------------------------------------------

struct StateDir {
    root: PathBuf,
}

struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

impl StateDir {
    fn new(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(StateDir {
            root: root.to_path_buf(),
        })
    }

    fn lock(&self) -> Result<LockGuard, CliError> {
        let path = self.root.join(".lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked(path))
            }
            Err(source) => Err(CliError::Io { path, source }),
        }
    }

    fn state_path(&self) -> PathBuf {
        self.root.join("state.json")
    }

    fn events_path(&self) -> PathBuf {
        self.root.join("events.jsonl")
    }

    fn load(&self) -> Result<Engine, CliError> {
        let path = self.state_path();
        if !path.exists() {
            return Ok(Engine::new());
        }
        let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let engine: Engine =
            serde_json::from_str(&text).map_err(|source| CliError::Json { path, source })?;

        // The stored stream must replay to the digest of the stored state.
        let events_path = self.events_path();
        let stream = if events_path.exists() {
            std::fs::read_to_string(&events_path).map_err(|source| CliError::Io {
                path: events_path,
                source,
            })?
        } else {
            String::new()
        };
        if crate::events::digest_jsonl(&stream) != engine.events.digest() {
            return Err(CliError::StateCorrupted);
        }
        Ok(engine)
    }

    fn save(&self, engine: &Engine) -> Result<(), CliError> {
        self.write_atomic(
            &self.state_path(),
            &serde_json::to_string_pretty(engine).expect("engine serializes"),
        )?;
        self.write_atomic(&self.events_path(), &engine.events.to_jsonl())
    }

    fn write_atomic(&self, path: &Path, contents: &str) -> Result<(), CliError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, contents).map_err(|source| CliError::Io {
            path: tmp.clone(),
            source,
        })?;
        std::fs::rename(&tmp, path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parse argv, run, print errors to stderr, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage; 2 is the usage exit code.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let printer = Printer {
        format: cli.format,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Pef(cmd) => run_pef(cmd, &printer),
        Command::Sim(cmd) => run_sim(cmd, &printer),
        command => {
            let state = StateDir::new(&cli.state_dir)?;
            let _guard = state.lock()?;
            let mut engine = state.load()?;
            run_stateful(command, &mut engine, &printer)?;
            state.save(&engine)
        }
    }
}

struct Printer {
    format: OutputFormat,
    quiet: bool,
}

impl Printer {
    fn emit(&self, human: &str, machine: serde_json::Value) {
        match self.format {
            OutputFormat::Json => println!(
                "{}",
                serde_json::to_string_pretty(&machine).expect("machine output serializes")
            ),
            _ => {
                if !self.quiet {
                    println!("{human}");
                }
            }
        }
    }

    fn emit_raw(&self, payload: &str) {
        print!("{payload}");
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_to_string(path)?).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_rule(rule: &str) -> Result<TransferRule, CliError> {
    match rule {
        "free" => Ok(TransferRule::Free),
        "locked" => Ok(TransferRule::NonTransferableBetweenUsers),
        other => {
            let spec = other.strip_prefix("quarterly:").ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown rule `{other}`; expected free, locked, or quarterly:<num>/<den>"
                ))
            })?;
            let (num, den) = spec
                .split_once('/')
                .ok_or_else(|| CliError::Usage("quarterly rule needs <num>/<den>".into()))?;
            Ok(TransferRule::QuarterlyAllowance {
                numerator: num
                    .parse()
                    .map_err(|_| CliError::Usage("bad allowance numerator".into()))?,
                denominator: den
                    .parse()
                    .map_err(|_| CliError::Usage("bad allowance denominator".into()))?,
            })
        }
    }
}

fn parse_hex32(s: &str, what: &str) -> Result<[u8; 32], CliError> {
    hex::decode(s)
        .ok()
        .and_then(|v| <[u8; 32]>::try_from(v).ok())
        .ok_or_else(|| CliError::Usage(format!("{what} must be 32 bytes of hex")))
}

fn display_amount(engine: &Engine, token: &TokenId, s: &str) -> Result<TokenAmount, CliError> {
    let decimals = engine.ledger.decimals(token)?;
    Ok(TokenAmount::from_display(s, decimals)?)
}

// ---------------------------------------------------------------------------
// Stateful commands
// ---------------------------------------------------------------------------

fn run_stateful(
    command: Command,
    engine: &mut Engine,
    printer: &Printer,
) -> Result<(), CliError> {
    match command {
        Command::Advance { seconds } => {
            let now = engine.advance(Timestamp::from_seconds(seconds));
            printer.emit(
                &format!("clock advanced to t={now}"),
                json!({ "now": now.seconds() }),
            );
            Ok(())
        }
        Command::Token(cmd) => run_token(cmd, engine, printer),
        Command::Oracle(OracleCmd::Register { file }) => {
            let feed: OutcomeFeed = parse_json(&file)?;
            let topic = feed.topic.clone();
            engine.oracle.register_feed(feed)?;
            printer.emit(
                &format!("feed registered for topic {topic}"),
                json!({ "topic": topic }),
            );
            Ok(())
        }
        Command::Poll(cmd) => run_poll(cmd, engine, printer),
        Command::Ledger(cmd) => run_ledger(cmd, engine, printer),
        Command::Pef(_) | Command::Sim(_) => unreachable!("stateless commands handled earlier"),
    }
}

fn run_token(cmd: TokenCmd, engine: &mut Engine, printer: &Printer) -> Result<(), CliError> {
    match cmd {
        TokenCmd::Create {
            id,
            decimals,
            rule,
            restrict_rewards,
        } => {
            let mut policy = TokenPolicy::new(id.clone(), decimals, parse_rule(&rule)?);
            policy.reward_lots_free = !restrict_rewards;
            engine.ledger.create_token(policy)?;
            printer.emit(
                &format!("token {id} registered ({decimals} decimals, rule {rule})"),
                json!({ "token": id, "decimals": decimals, "rule": rule }),
            );
            Ok(())
        }
        TokenCmd::Mint {
            token,
            account,
            amount,
            lot,
        } => {
            let token = TokenId::new(token);
            let amount = display_amount(engine, &token, &amount)?;
            engine
                .ledger
                .mint(&token, &AccountId::new(account.clone()), amount, lot.into())?;
            let decimals = engine.ledger.decimals(&token)?;
            printer.emit(
                &format!("minted {} {token} to {account}", amount.to_display(decimals)),
                json!({
                    "token": token.to_string(),
                    "account": account,
                    "amount": amount.to_display(decimals),
                }),
            );
            Ok(())
        }
        TokenCmd::Transfer {
            token,
            from,
            to,
            amount,
            lot,
        } => {
            let token = TokenId::new(token);
            let amount = display_amount(engine, &token, &amount)?;
            let now = engine.now();
            engine.ledger.transfer(
                &token,
                &AccountId::new(from.clone()),
                &AccountId::new(to.clone()),
                amount,
                lot.into(),
                now,
            )?;
            let decimals = engine.ledger.decimals(&token)?;
            printer.emit(
                &format!("transferred {} {token}: {from} -> {to}", amount.to_display(decimals)),
                json!({
                    "token": token.to_string(),
                    "from": from,
                    "to": to,
                    "amount": amount.to_display(decimals),
                }),
            );
            Ok(())
        }
    }
}

fn run_poll(cmd: PollCmd, engine: &mut Engine, printer: &Printer) -> Result<(), CliError> {
    match cmd {
        PollCmd::Create {
            spec_file,
            deposit,
            seal_seed,
        } => {
            let spec_file: PollSpecFile = parse_json(&spec_file)?;
            let spec = spec_file.resolve(&engine.ledger)?;
            let deposit = display_amount(engine, &spec.staking.token, &deposit)?;
            let keys = if spec.sealed {
                let seed = match seal_seed {
                    Some(s) => parse_hex32(&s, "--seal-seed")?,
                    None => {
                        let mut seed = [0u8; 32];
                        rand::Rng::fill(&mut rand::thread_rng(), &mut seed);
                        seed
                    }
                };
                Some(PollKeyPair::from_seed(seed))
            } else {
                None
            };
            let now = engine.now();
            let poll_id = engine.create_poll(
                spec,
                deposit,
                keys.as_ref().map(|k| k.seal_key.clone()),
                now,
            )?;
            let reveal_hex = keys.map(|k| k.reveal_key.to_hex());
            let mut human = format!("created {poll_id}");
            if let Some(reveal) = &reveal_hex {
                human.push_str(&format!("\nreveal key (save it, shown once): {reveal}"));
            }
            printer.emit(
                &human,
                json!({ "poll_id": poll_id.to_string(), "reveal_key": reveal_hex }),
            );
            Ok(())
        }
        PollCmd::Submit {
            poll,
            account,
            choice,
            stake,
            nonce,
        } => {
            let poll_id = PollId::from(poll.as_str());
            let sentiment = SentimentChoice::parse_key(&pef::normalize_label(&choice))?;
            let (token, seal_key, sealed) = {
                let p = engine.poll(&poll_id)?;
                (
                    p.spec.staking.token.clone(),
                    p.seal_key.clone(),
                    p.spec.sealed,
                )
            };
            let stake = display_amount(engine, &token, &stake)?;
            let input = if sealed {
                let key = seal_key.ok_or_else(|| {
                    CliError::Usage("sealed poll has no stored seal key".into())
                })?;
                let nonce = match nonce {
                    Some(s) => parse_hex32(&s, "--nonce")?,
                    None => {
                        let mut n = [0u8; 32];
                        rand::Rng::fill(&mut rand::thread_rng(), &mut n);
                        n
                    }
                };
                ChoiceInput::Sealed(sealing::seal(&sentiment, nonce, &key)?)
            } else {
                ChoiceInput::Clear(sentiment)
            };
            let now = engine.now();
            let submission_id =
                engine.submit(&poll_id, &AccountId::new(account.clone()), input, stake, now)?;
            printer.emit(
                &format!("accepted {submission_id} on {poll_id}"),
                json!({ "poll_id": poll_id.to_string(), "submission_id": submission_id }),
            );
            Ok(())
        }
        PollCmd::Tally { poll, reveal_key } => {
            let poll_id = PollId::from(poll.as_str());
            let key = reveal_key
                .map(|s| RevealKey::from_hex(&s))
                .transpose()?;
            let now = engine.now();
            let outcome = engine.tally(&poll_id, now, key.as_ref())?;
            match outcome {
                crate::engine::TallyOutcome::Voided => {
                    printer.emit(
                        &format!("{poll_id} voided: minimum stake not reached, all funds refunded"),
                        json!({ "poll_id": poll_id.to_string(), "voided": true }),
                    );
                }
                crate::engine::TallyOutcome::Tallied(result) => {
                    let decimals = {
                        let p = engine.poll(&poll_id)?;
                        engine.ledger.decimals(&p.spec.staking.token)?
                    };
                    let weights: serde_json::Map<String, serde_json::Value> = result
                        .weights
                        .iter()
                        .map(|(k, v)| (k.clone(), json!(v.to_display(decimals))))
                        .collect();
                    let mut human = format!("{poll_id} tallied:");
                    for (sentiment, weight) in &result.weights {
                        human.push_str(&format!("\n  {sentiment}: {}", weight.to_display(decimals)));
                    }
                    if let Some(winner) = &result.winner {
                        human.push_str(&format!("\n  plurality: {winner}"));
                    } else {
                        human.push_str("\n  plurality: tie (no action)");
                    }
                    printer.emit(
                        &human,
                        json!({
                            "poll_id": poll_id.to_string(),
                            "voided": false,
                            "weights": weights,
                            "winner": result.winner,
                            "withheld_total": result.withheld_total.to_display(decimals),
                        }),
                    );
                }
            }
            Ok(())
        }
        PollCmd::Evaluate { poll, index } => {
            let poll_id = PollId::from(poll.as_str());
            let index = match index {
                Some(i) => i,
                None => engine.poll(&poll_id)?.evaluations_done() + 1,
            };
            let now = engine.now();
            engine.evaluate_performance(&poll_id, index, now)?;
            printer.emit(
                &format!("{poll_id} evaluation {index} settled"),
                json!({ "poll_id": poll_id.to_string(), "index": index }),
            );
            Ok(())
        }
        PollCmd::Close { poll } => {
            let poll_id = PollId::from(poll.as_str());
            let now = engine.now();
            let report = engine.close_poll(&poll_id, now)?;
            printer.emit(
                &format!(
                    "{poll_id} closed: pool residual {} back to pollster, {} forfeited",
                    report.totals.pool_residual_to_pollster, report.totals.forfeited_to_pollster
                ),
                serde_json::to_value(&report).expect("report serializes"),
            );
            Ok(())
        }
        PollCmd::Report { poll, csv_out } => {
            let poll_id = PollId::from(poll.as_str());
            let now = engine.now();
            let report = engine.report(&poll_id, now)?;
            let csv = report.to_csv();
            if let Some(path) = csv_out {
                std::fs::write(&path, &csv).map_err(|source| CliError::Io { path, source })?;
            }
            match printer.format {
                OutputFormat::Csv => {
                    printer.emit_raw(&csv);
                    printer.emit_raw(&format!("{}\n", report.totals_json()));
                }
                OutputFormat::Json => {
                    printer.emit("", serde_json::to_value(&report).expect("report serializes"));
                }
                OutputFormat::Table => {
                    let mut human = format!(
                        "report for {} ({}, phase {})",
                        report.poll_id, report.topic, report.phase
                    );
                    for row in &report.rows {
                        human.push_str(&format!(
                            "\n  {} {} on `{}`: stake {}, tally return {}, net {}",
                            row.submission_id,
                            row.account,
                            row.sentiment,
                            row.stake,
                            row.returned_at_tally,
                            row.net
                        ));
                    }
                    human.push_str(&format!(
                        "\n  totals: staked {}, pool {}, spent {}, residual {}",
                        report.totals.total_staked,
                        report.totals.pool_deposit,
                        report.totals.pool_spent,
                        report.totals.pool_residual_to_pollster
                    ));
                    printer.emit(&human, serde_json::Value::Null);
                }
            }
            Ok(())
        }
    }
}

fn run_ledger(cmd: LedgerCmd, engine: &mut Engine, printer: &Printer) -> Result<(), CliError> {
    match cmd {
        LedgerCmd::Show => {
            let snapshot = engine.ledger.snapshot();
            let mut human = String::from("ledger:");
            for account in &snapshot.accounts {
                human.push_str(&format!("\n  {}:", account.id));
                for (token, balance) in &account.balances {
                    human.push_str(&format!(
                        "\n    {token}: originated {}, earned {}",
                        balance.originated, balance.earned
                    ));
                }
            }
            for escrow in &snapshot.escrows {
                human.push_str(&format!("\n  escrow {} ({}):", escrow.id, escrow.token));
                for (bucket, amount) in &escrow.buckets {
                    human.push_str(&format!("\n    {bucket:?}: {amount}"));
                }
            }
            printer.emit(
                &human,
                serde_json::to_value(&snapshot).expect("snapshot serializes"),
            );
            Ok(())
        }
        LedgerCmd::Export { out } => {
            let snapshot = engine.ledger.snapshot();
            let json = serde_json::to_string(&snapshot).expect("snapshot serializes");
            match out {
                Some(path) => {
                    std::fs::write(&path, &json)
                        .map_err(|source| CliError::Io { path, source })?;
                }
                None => printer.emit_raw(&format!("{json}\n")),
            }
            Ok(())
        }
        LedgerCmd::Import { file } => {
            if engine.polls().next().is_some() {
                return Err(CliError::Usage(
                    "ledger import requires a state directory with no polls".into(),
                ));
            }
            let snapshot: LedgerSnapshot = parse_json(&file)?;
            engine.ledger = crate::ledger::Ledger::from_snapshot(&snapshot)?;
            printer.emit("ledger imported", json!({ "imported": true }));
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Stateless commands
// ---------------------------------------------------------------------------

fn run_sim(cmd: SimCmd, printer: &Printer) -> Result<(), CliError> {
    match cmd {
        SimCmd::List => {
            printer.emit(
                &scenarios::SCENARIO_NAMES.join("\n"),
                json!(scenarios::SCENARIO_NAMES),
            );
            Ok(())
        }
        SimCmd::Run {
            scenario,
            write_golden,
        } => {
            let run = if scenarios::scenario_source(&scenario).is_some() {
                scenarios::run_scenario(&scenario)?
            } else {
                // Treat the argument as a path to a custom definition; no
                // golden exists for those, so only execute.
                let path = PathBuf::from(&scenario);
                let def = scenarios::load_scenario(&read_to_string(&path)?)?;
                scenarios::execute(&def)?
            };
            if let Some(path) = write_golden {
                std::fs::write(&path, &run.golden_json)
                    .map_err(|source| CliError::Io { path, source })?;
            }
            let polls: Vec<String> = run.reports.keys().cloned().collect();
            printer.emit(
                &format!(
                    "scenario ok: {} poll(s) settled, event digest {}",
                    polls.len(),
                    run.event_digest
                ),
                json!({
                    "scenario": scenario,
                    "event_digest": run.event_digest,
                    "polls": polls,
                }),
            );
            Ok(())
        }
    }
}

fn run_pef(cmd: PefCmd, printer: &Printer) -> Result<(), CliError> {
    match cmd {
        PefCmd::Curve {
            pef_file,
            sentiment,
            grid,
            out,
        } => {
            let function: PeFunction = parse_json(&pef_file)?;
            function.validate()?;
            let choice = SentimentChoice::label(pef::normalize_label(&sentiment));
            let grid = pef::parse_grid_spec(&grid)?;
            let samples = pef::curve_samples(&function, &choice, &grid)?;
            let csv = pef::curve_csv(&samples);
            match out {
                Some(path) => {
                    std::fs::write(&path, &csv)
                        .map_err(|source| CliError::Io { path, source })?;
                    printer.emit(
                        &format!("{} samples written", samples.len()),
                        json!({ "samples": samples.len() }),
                    );
                }
                None => printer.emit_raw(&csv),
            }
            Ok(())
        }
        PefCmd::Arbitrage {
            pef_file,
            sentiments,
            outcomes,
            grid,
            epsilon,
        } => {
            let function: PeFunction = parse_json(&pef_file)?;
            function.validate()?;
            let sentiments: Vec<SentimentChoice> = match sentiments {
                Some(list) => list
                    .split(',')
                    .map(|s| SentimentChoice::label(pef::normalize_label(s)))
                    .collect(),
                None => default_sentiments(&function).ok_or_else(|| {
                    CliError::Usage(
                        "--sentiments is required for this function variant".into(),
                    )
                })?,
            };
            let outcome_grid: Vec<crate::types::Outcome> = match (&outcomes, &grid) {
                (Some(labels), _) => labels
                    .split(',')
                    .map(|l| crate::types::Outcome::discrete(l.trim()))
                    .collect(),
                (None, Some(spec)) => pef::parse_grid_spec(spec)?
                    .into_iter()
                    .map(crate::types::Outcome::Continuous)
                    .collect(),
                (None, None) => match &function {
                    PeFunction::DiscreteMatch { .. } | PeFunction::Tabulated { .. } => {
                        default_discrete_grid(&function).ok_or_else(|| {
                            CliError::Usage(
                                "--outcomes is required for discrete functions".into(),
                            )
                        })?
                    }
                    _ => pef::default_continuous_grid(),
                },
            };
            let epsilon = epsilon.unwrap_or_else(|| pef::default_epsilon(&function));
            let result = pef::detect_arbitrage(&function, &sentiments, &outcome_grid, epsilon)?;
            match &result {
                None => printer.emit("NONE", json!({ "arbitrage": null })),
                Some(mix) => {
                    let weights: Vec<String> = mix
                        .weights
                        .iter()
                        .map(|(k, w)| format!("{k}={w:.6}"))
                        .collect();
                    printer.emit(
                        &format!(
                            "ARBITRAGE: mix {{{}}} guarantees {:.9} per staked token",
                            weights.join(", "),
                            mix.guaranteed_profit
                        ),
                        json!({ "arbitrage": mix }),
                    );
                }
            }
            Ok(())
        }
        PefCmd::Pool {
            pef_file,
            max_total,
            decimals,
            weights,
        } => {
            let function: PeFunction = parse_json(&pef_file)?;
            function.validate()?;
            let max_total = TokenAmount::from_display(&max_total, decimals)?;
            let schedule = match weights {
                None => crate::pef::EvaluationSchedule::single(Timestamp::ZERO),
                Some(list) => {
                    let entries = list
                        .split(',')
                        .map(|w| {
                            Ok(crate::pef::ScheduleEntry {
                                delta: Timestamp::ZERO,
                                weight: w.trim().parse()?,
                            })
                        })
                        .collect::<Result<Vec<_>, RateError>>()?;
                    crate::pef::EvaluationSchedule::new(entries)?
                }
            };
            let pool = pef::required_pool(&schedule, &function, max_total)?;
            let withhold = pef::withhold_rate(&schedule, &function)?;
            printer.emit(
                &format!(
                    "required pool: {} tokens; withholding per staked token: {}",
                    pool.to_display(decimals),
                    withhold
                ),
                json!({
                    "required_pool": pool.to_display(decimals),
                    "withhold_per_token": withhold.to_string(),
                    "sup": function.sup_rate().to_string(),
                    "inf": function.inf_rate().to_string(),
                }),
            );
            Ok(())
        }
    }
}

fn default_sentiments(function: &PeFunction) -> Option<Vec<SentimentChoice>> {
    match function {
        PeFunction::ArctanBuySell { .. } => Some(vec![
            SentimentChoice::label(pef::BUY),
            SentimentChoice::label(pef::SELL),
        ]),
        PeFunction::RatingTriple { .. } => Some(vec![
            SentimentChoice::label(pef::RATING_UP),
            SentimentChoice::label(pef::RATING_FLAT),
            SentimentChoice::label(pef::RATING_DOWN),
        ]),
        PeFunction::Tabulated { matrix, .. } => {
            let mut labels = std::collections::BTreeSet::new();
            for row in matrix.values() {
                labels.extend(row.keys().cloned());
            }
            Some(labels.into_iter().map(SentimentChoice::label).collect())
        }
        _ => None,
    }
}

fn default_discrete_grid(function: &PeFunction) -> Option<Vec<crate::types::Outcome>> {
    match function {
        PeFunction::Tabulated { matrix, .. } => Some(
            matrix
                .keys()
                .map(|k| crate::types::Outcome::discrete(k.clone()))
                .collect(),
        ),
        _ => None,
    }
}

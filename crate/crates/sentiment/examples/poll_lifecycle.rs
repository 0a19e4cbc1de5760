//! End-to-end lifecycle of the simplest poll: a constant per-token reward,
//! so every participant earns `c` per staked token regardless of outcome
//! and no oracle is needed.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example poll_lifecycle
//! ```

use sentiment_protocol::engine::{ChoiceInput, StakingParams};
use sentiment_protocol::pef::EvaluationSchedule;
use sentiment_protocol::{
    Engine, OutcomeSet, PeFunction, PollSpec, SentimentChoice, Timestamp, TokenAmount,
    TokenPolicy, TransferRule,
};

fn amount(display: &str) -> TokenAmount {
    TokenAmount::from_display(display, 9).unwrap()
}

fn ts(seconds: u64) -> Timestamp {
    Timestamp::from_seconds(seconds)
}

fn main() {
    let mut engine = Engine::new();
    engine
        .ledger
        .create_token(TokenPolicy::new("ETH", 9, TransferRule::Free))
        .unwrap();
    for (account, balance) in [("alice", "100"), ("bob", "400"), ("carol", "600"), ("pollco", "1000")] {
        engine
            .ledger
            .mint(&"ETH".into(), &account.into(), amount(balance), sentiment_protocol::Lot::Originated)
            .unwrap();
    }

    // c = 0.1 with a cap of 10,000 staked tokens: the pool must hold 1,000.
    let spec = PollSpec {
        topic: "opinion-round".into(),
        outcomes: OutcomeSet::discrete(["yes", "no"]).unwrap(),
        sentiments: vec![SentimentChoice::label("yes"), SentimentChoice::label("no")],
        staking: StakingParams {
            token: "ETH".into(),
            window_start: ts(0),
            window_end: ts(777_600),
            min_total: amount("1000"),
            max_total: amount("10000"),
        },
        cooldown: ts(86_400),
        schedule: EvaluationSchedule::single(ts(0)),
        pef: PeFunction::constant("0.1".parse().unwrap()),
        sealed: false,
        policy_hook: None,
        pollster: "pollco".into(),
    };
    let poll = engine.create_poll(spec, amount("1000"), None, ts(0)).unwrap();
    println!("created {poll} with a 1000 ETH reward pool");

    for (account, choice, stake, at) in [
        ("alice", "yes", "100", 1_000),
        ("bob", "no", "400", 2_000),
        ("carol", "yes", "600", 3_000),
    ] {
        let id = engine
            .submit(
                &poll,
                &account.into(),
                ChoiceInput::Clear(SentimentChoice::label(choice)),
                amount(stake),
                ts(at),
            )
            .unwrap();
        println!("{account} staked {stake} ETH on `{choice}` ({id})");
    }

    // Tally after the window plus the 24h cool-down. No penalties are
    // possible, so stakes come straight back.
    engine.tally(&poll, ts(864_000), None).unwrap();
    println!("tallied; stakes returned in full");

    engine.evaluate_performance(&poll, 1, ts(864_000)).unwrap();
    let report = engine.close_poll(&poll, ts(864_000)).unwrap();

    for row in &report.rows {
        println!(
            "{} net {:>6} ETH on a stake of {}",
            row.account, row.net, row.stake
        );
    }
    println!(
        "pollster recovered {} of the 1000 ETH pool",
        report.totals.pool_residual_to_pollster
    );

    // Every provider ends with exactly (1 + c) per staked token.
    assert_eq!(
        engine.ledger.balance(&"ETH".into(), &"alice".into()).unwrap(),
        amount("110")
    );
    assert_eq!(report.totals.pool_residual_to_pollster, "890");
    engine.ledger.check_conservation().unwrap();
    println!("conservation holds");
}

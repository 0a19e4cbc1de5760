//! Buy/sell sentiment on a price ratio with real penalties: the bounded
//! arctan payoff rewards buy raters when the ratio rises and penalizes them
//! when it falls, symmetrically for sell raters. Because losses are
//! possible, only `(1 - c)` of each stake returns at tally; the rest stays
//! withheld until settlement.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example buy_sell_settlement
//! ```

use sentiment_protocol::engine::{ChoiceInput, StakingParams};
use sentiment_protocol::oracle::OutcomeFeed;
use sentiment_protocol::pef::EvaluationSchedule;
use sentiment_protocol::{
    Engine, Outcome, OutcomeSet, PeFunction, PollSpec, SentimentChoice, Timestamp, TokenAmount,
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
    for (account, balance) in [("bull", "1000"), ("bear", "1000"), ("pollco", "1000")] {
        engine
            .ledger
            .mint(&"ETH".into(), &account.into(), amount(balance), sentiment_protocol::Lot::Originated)
            .unwrap();
    }

    // The outcome: price ratio over the horizon. This fixture doubles it.
    engine
        .oracle
        .register_feed(
            OutcomeFeed::new(
                "stock-ratio",
                ts(950_400),
                vec![(ts(950_400), Outcome::continuous(2.0).unwrap())],
            )
            .unwrap(),
        )
        .unwrap();

    let spec = PollSpec {
        topic: "stock-ratio".into(),
        outcomes: OutcomeSet::ContinuousPositive,
        sentiments: vec![SentimentChoice::label("buy"), SentimentChoice::label("sell")],
        staking: StakingParams {
            token: "ETH".into(),
            window_start: ts(0),
            window_end: ts(777_600),
            min_total: amount("1000"),
            max_total: amount("10000"),
        },
        cooldown: ts(86_400),
        schedule: EvaluationSchedule::single(ts(86_400)),
        pef: PeFunction::arctan_buy_sell("0.1".parse().unwrap()),
        sealed: false,
        policy_hook: None,
        pollster: "pollco".into(),
    };
    let poll = engine.create_poll(spec, amount("1000"), None, ts(0)).unwrap();

    engine
        .submit(
            &poll,
            &"bull".into(),
            ChoiceInput::Clear(SentimentChoice::label("buy")),
            amount("1000"),
            ts(100),
        )
        .unwrap();
    engine
        .submit(
            &poll,
            &"bear".into(),
            ChoiceInput::Clear(SentimentChoice::label("sell")),
            amount("1000"),
            ts(200),
        )
        .unwrap();

    engine.tally(&poll, ts(864_000), None).unwrap();
    // 10% of each stake stays withheld against the worst-case penalty.
    let bull_after_tally = engine.ledger.balance(&"ETH".into(), &"bull".into()).unwrap();
    println!("bull balance after tally: {} (100 ETH withheld)", bull_after_tally.to_display(9));
    assert_eq!(bull_after_tally, amount("900"));

    engine.evaluate_performance(&poll, 1, ts(950_400)).unwrap();
    let report = engine.close_poll(&poll, ts(950_400)).unwrap();

    // A doubling pays the buy side exactly c/2 per token: arctan(1) is a
    // quarter turn, half the payoff scale. The sell side loses the mirror.
    for row in &report.rows {
        println!("{} ({}) net {} ETH", row.account, row.sentiment, row.net);
    }
    assert_eq!(report.rows[0].net, "50");
    assert_eq!(report.rows[1].net, "-50");
    assert_eq!(
        engine.ledger.balance(&"ETH".into(), &"bull".into()).unwrap(),
        amount("1050")
    );
    assert_eq!(
        engine.ledger.balance(&"ETH".into(), &"bear".into()).unwrap(),
        amount("950")
    );
    engine.ledger.check_conservation().unwrap();
    println!("zero-sum between the two sides; forfeits went to the pollster");
}

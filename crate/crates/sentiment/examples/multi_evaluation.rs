//! Several performance evaluations from one poll with halving weights
//! `1/2, 1/4, ...`: because the weights sum to at most 1, the same pool
//! that funds one full-weight evaluation funds the whole series, and each
//! withheld tranche is released or forfeited per evaluation.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example multi_evaluation
//! ```

use sentiment_protocol::engine::{ChoiceInput, StakingParams};
use sentiment_protocol::oracle::OutcomeFeed;
use sentiment_protocol::pef::{required_pool, EvaluationSchedule};
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

const QUARTER: u64 = 7_776_000;

fn main() {
    let function = PeFunction::arctan_buy_sell("0.2".parse().unwrap());
    let max_total = amount("10000");

    // Pool sizing: a single full-weight evaluation needs sup * cap = 2000;
    // the halving series never needs more, whatever its length.
    let single = EvaluationSchedule::single(ts(QUARTER));
    let single_pool = required_pool(&single, &function, max_total).unwrap();
    println!("single evaluation pool: {}", single_pool.to_display(9));
    for n in [1, 2, 4, 8] {
        let series = EvaluationSchedule::halving(n, ts(QUARTER)).unwrap();
        let pool = required_pool(&series, &function, max_total).unwrap();
        println!("halving series with {n} evaluations: {}", pool.to_display(9));
        assert!(pool <= single_pool);
    }

    // Run two evaluations a quarter apart: up 40% first, then down 20%.
    let mut engine = Engine::new();
    engine
        .ledger
        .create_token(TokenPolicy::new("ETH", 9, TransferRule::Free))
        .unwrap();
    for (account, balance) in [("fran", "3000"), ("pollco", "2000")] {
        engine
            .ledger
            .mint(&"ETH".into(), &account.into(), amount(balance), sentiment_protocol::Lot::Originated)
            .unwrap();
    }
    engine
        .oracle
        .register_feed(
            OutcomeFeed::new(
                "stock-long",
                ts(500_000 + QUARTER),
                vec![
                    (ts(500_000 + QUARTER), Outcome::continuous(1.4).unwrap()),
                    (ts(500_000 + 2 * QUARTER), Outcome::continuous(0.8).unwrap()),
                ],
            )
            .unwrap(),
        )
        .unwrap();

    let schedule = EvaluationSchedule::halving(2, ts(QUARTER)).unwrap();
    let spec = PollSpec {
        topic: "stock-long".into(),
        outcomes: OutcomeSet::ContinuousPositive,
        sentiments: vec![SentimentChoice::label("buy"), SentimentChoice::label("sell")],
        staking: StakingParams {
            token: "ETH".into(),
            window_start: ts(0),
            window_end: ts(500_000),
            min_total: amount("1000"),
            max_total,
        },
        cooldown: ts(0),
        schedule,
        pef: function,
        sealed: false,
        policy_hook: None,
        pollster: "pollco".into(),
    };
    let deposit = amount("1500"); // 0.75 * 0.2 * 10000
    let poll = engine.create_poll(spec, deposit, None, ts(0)).unwrap();
    engine
        .submit(
            &poll,
            &"fran".into(),
            ChoiceInput::Clear(SentimentChoice::label("buy")),
            amount("2000"),
            ts(100),
        )
        .unwrap();

    engine.tally(&poll, ts(500_000), None).unwrap();
    println!(
        "after tally fran holds {} (15% withheld for two penalty tranches)",
        engine
            .ledger
            .balance(&"ETH".into(), &"fran".into())
            .unwrap()
            .to_display(9)
    );

    engine.evaluate_performance(&poll, 1, ts(500_000 + QUARTER)).unwrap();
    engine
        .evaluate_performance(&poll, 2, ts(500_000 + 2 * QUARTER))
        .unwrap();
    let report = engine.close_poll(&poll, ts(500_000 + 2 * QUARTER)).unwrap();

    for eval in &report.rows[0].evals {
        println!(
            "evaluation {}: reward {}, released {}, forfeited {}",
            eval.index, eval.reward, eval.released, eval.forfeited
        );
    }
    println!("fran's lifecycle net: {} ETH", report.rows[0].net);
    engine.ledger.check_conservation().unwrap();
}

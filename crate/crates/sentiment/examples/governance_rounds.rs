//! Decentralized governance on a geometric funding series: a 100,000-token
//! reserve pays an unbounded sequence of constant-reward voting rounds with
//! pools 1000, 990, 980.1, ... (ratio 0.99), and the winning option fires a
//! registered policy hook at tally. No oracle is involved anywhere.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example governance_rounds
//! ```

use std::sync::{Arc, Mutex};

use sentiment_protocol::engine::{ChoiceInput, PollId, StakingParams};
use sentiment_protocol::pef::{geometric_pool, EvaluationSchedule};
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
    let reserve = amount("100000");

    // The series never exhausts the reserve.
    let mut sum = TokenAmount::ZERO;
    for i in 1..=5 {
        let pool = geometric_pool(reserve, 0.99, i).unwrap();
        sum = sum.checked_add(pool).unwrap();
        println!("round {i} pool: {} GOV", pool.to_display(9));
    }
    assert!(sum < reserve);

    let mut engine = Engine::new();
    engine
        .ledger
        .create_token(TokenPolicy::new("GOV", 9, TransferRule::Free))
        .unwrap();
    for (account, balance) in [("treasury", "100000"), ("u1", "3000"), ("u2", "2000")] {
        engine
            .ledger
            .mint(&"GOV".into(), &account.into(), amount(balance), sentiment_protocol::Lot::Originated)
            .unwrap();
    }

    // Adopted policies land in this list via the registered hook.
    let adopted: Arc<Mutex<Vec<String>>> = Arc::new(Mutex::new(Vec::new()));
    let sink = adopted.clone();
    engine.register_handler(
        "apply-policy",
        Box::new(move |poll: &PollId, _hook: &str, decision: &str| {
            sink.lock().unwrap().push(format!("{poll}: {decision}"));
        }),
    );

    let mut window = (100, 86_400);
    for round in 1..=2u32 {
        let template = PollSpec {
            topic: format!("policy-{round}"),
            outcomes: OutcomeSet::discrete(["adopt", "reject"]).unwrap(),
            sentiments: vec![
                SentimentChoice::label("adopt"),
                SentimentChoice::label("reject"),
            ],
            staking: StakingParams {
                token: "GOV".into(),
                window_start: ts(window.0),
                window_end: ts(window.1),
                min_total: amount("100"),
                max_total: amount("1000000"),
            },
            cooldown: ts(0),
            schedule: EvaluationSchedule::single(ts(0)),
            pef: PeFunction::constant("0.01".parse().unwrap()),
            sealed: false,
            policy_hook: Some("apply-policy".into()),
            pollster: "treasury".into(),
        };
        let poll = engine
            .run_governance_round(round, &template, reserve, 0.99, ts(window.0 - 100))
            .unwrap();
        engine
            .submit(
                &poll,
                &"u1".into(),
                ChoiceInput::Clear(SentimentChoice::label("adopt")),
                amount("1000"),
                ts(window.0 + 10),
            )
            .unwrap();
        engine
            .submit(
                &poll,
                &"u2".into(),
                ChoiceInput::Clear(SentimentChoice::label(if round == 1 {
                    "reject"
                } else {
                    "adopt"
                })),
                amount("500"),
                ts(window.0 + 20),
            )
            .unwrap();
        engine.tally(&poll, ts(window.1), None).unwrap();
        engine.evaluate_performance(&poll, 1, ts(window.1)).unwrap();
        engine.close_poll(&poll, ts(window.1)).unwrap();
        window = (window.1 + 100, window.1 + 86_400);
    }

    println!("policies executed: {:?}", adopted.lock().unwrap());
    // Participation pays c per staked token, win or lose.
    assert_eq!(
        engine.ledger.balance(&"GOV".into(), &"u1".into()).unwrap(),
        amount("3020")
    );
    assert_eq!(
        engine.ledger.balance(&"GOV".into(), &"u2".into()).unwrap(),
        amount("2010")
    );
    engine.ledger.check_conservation().unwrap();
}

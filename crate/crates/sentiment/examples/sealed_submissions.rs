//! Commit-reveal sealing: sentiment travels encrypted with a binding
//! commitment, so nobody reads in-flight votes; the pollster opens them
//! with the reveal key at tally time. Tampered submissions fail
//! verification and are refunded in full.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example sealed_submissions
//! ```

use sentiment_protocol::engine::{ChoiceInput, StakingParams};
use sentiment_protocol::pef::EvaluationSchedule;
use sentiment_protocol::sealing::{self, PollKeyPair};
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
    // The pollster generates a key pair; submitters get the seal half.
    let keys = PollKeyPair::from_seed([42u8; 32]);

    let choice = SentimentChoice::label("D");
    let nonce = [7u8; 32];
    let sealed = sealing::seal(&choice, nonce, &keys.seal_key).unwrap();
    println!("commitment: {}", hex::encode(sealed.commitment));
    let (revealed, revealed_nonce) = sealing::reveal(&sealed, &keys.reveal_key).unwrap();
    assert_eq!(revealed, choice);
    assert_eq!(revealed_nonce, nonce);
    assert!(sealing::verify(&sealed, &choice, &nonce));
    println!("round trip verified");

    // Now a sealed poll end to end, including one tampered submission.
    let mut engine = Engine::new();
    engine
        .ledger
        .create_token(TokenPolicy::new("ETH", 9, TransferRule::Free))
        .unwrap();
    for (account, balance) in [("alice", "900"), ("bob", "400"), ("mallory", "300"), ("pollco", "1000")] {
        engine
            .ledger
            .mint(&"ETH".into(), &account.into(), amount(balance), sentiment_protocol::Lot::Originated)
            .unwrap();
    }

    let spec = PollSpec {
        topic: "sealed-vote".into(),
        outcomes: OutcomeSet::discrete(["R", "D"]).unwrap(),
        sentiments: vec![SentimentChoice::label("R"), SentimentChoice::label("D")],
        staking: StakingParams {
            token: "ETH".into(),
            window_start: ts(0),
            window_end: ts(1_000),
            min_total: amount("100"),
            max_total: amount("10000"),
        },
        cooldown: ts(0),
        schedule: EvaluationSchedule::single(ts(0)),
        pef: PeFunction::constant("0.1".parse().unwrap()),
        sealed: true,
        policy_hook: None,
        pollster: "pollco".into(),
    };
    let poll = engine
        .create_poll(spec, amount("1000"), Some(keys.seal_key.clone()), ts(0))
        .unwrap();

    let seal = |label: &str, n: u8| {
        sealing::seal(&SentimentChoice::label(label), [n; 32], &keys.seal_key).unwrap()
    };
    engine
        .submit(&poll, &"alice".into(), ChoiceInput::Sealed(seal("D", 1)), amount("900"), ts(10))
        .unwrap();
    engine
        .submit(&poll, &"bob".into(), ChoiceInput::Sealed(seal("R", 2)), amount("400"), ts(20))
        .unwrap();
    // Mallory's ciphertext is corrupted in flight.
    let mut tampered = seal("D", 3);
    let last = tampered.ciphertext.len() - 1;
    tampered.ciphertext[last] ^= 0x01;
    engine
        .submit(&poll, &"mallory".into(), ChoiceInput::Sealed(tampered), amount("300"), ts(30))
        .unwrap();

    engine.tally(&poll, ts(1_000), Some(&keys.reveal_key)).unwrap();
    engine.evaluate_performance(&poll, 1, ts(1_000)).unwrap();
    let report = engine.close_poll(&poll, ts(1_000)).unwrap();

    for row in &report.rows {
        println!(
            "{}: sentiment {}, refunded {}, net {}",
            row.account, row.sentiment, row.refunded, row.net
        );
    }
    // The tampered vote was excluded but made whole; the others earned c.
    assert_eq!(report.rows[2].sentiment, "(invalid)");
    assert_eq!(report.rows[2].refunded, "300");
    assert_eq!(report.rows[2].net, "0");
    assert_eq!(report.rows[0].net, "90");
    engine.ledger.check_conservation().unwrap();
}

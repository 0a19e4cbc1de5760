//! Custom staking tokens with transfer restrictions. A polling company can
//! issue its own token that moves freely in and out of poll escrows but is
//! locked (or rate-limited) between users — while earned rewards always
//! transfer freely.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example restricted_token
//! ```

use sentiment_protocol::ledger::{EscrowBucket, LotSplit, QUARTER_SECONDS};
use sentiment_protocol::{
    Ledger, LedgerError, Lot, Timestamp, TokenAmount, TokenPolicy, TransferRule,
};

fn amount(display: &str) -> TokenAmount {
    TokenAmount::from_display(display, 9).unwrap()
}

fn main() {
    let mut ledger = Ledger::new();

    // A non-transferable polling token: 100 POLL per user.
    ledger
        .create_token(TokenPolicy::new(
            "POLL",
            9,
            TransferRule::NonTransferableBetweenUsers,
        ))
        .unwrap();
    ledger
        .mint(&"POLL".into(), &"alice".into(), amount("100"), Lot::Originated)
        .unwrap();

    let err = ledger
        .transfer(
            &"POLL".into(),
            &"alice".into(),
            &"bob".into(),
            amount("10"),
            Lot::Originated,
            Timestamp::ZERO,
        )
        .unwrap_err();
    println!("user-to-user POLL transfer: {err}");
    assert!(matches!(err, LedgerError::TransferRestricted { .. }));

    // Escrow movement is always allowed: stake and unstake at will.
    ledger.create_escrow("poll-escrow", &"POLL".into()).unwrap();
    ledger
        .deposit_to_escrow(
            &"poll-escrow".into(),
            &"alice".into(),
            EscrowBucket::Stake,
            LotSplit::single(Lot::Originated, amount("100")),
        )
        .unwrap();
    ledger
        .withdraw_from_escrow(
            &"poll-escrow".into(),
            EscrowBucket::Stake,
            &"alice".into(),
            LotSplit::single(Lot::Originated, amount("100")),
        )
        .unwrap();
    println!("stake and unstake through escrow: ok");

    // Earned rewards transfer freely even on a locked token.
    ledger
        .mint(&"POLL".into(), &"alice".into(), amount("7"), Lot::Earned)
        .unwrap();
    ledger
        .transfer(
            &"POLL".into(),
            &"alice".into(),
            &"bob".into(),
            amount("7"),
            Lot::Earned,
            Timestamp::ZERO,
        )
        .unwrap();
    println!("earned-lot transfer on a locked token: ok");

    // A rating token limited to 10% per quarter, measured against the
    // amount originally distributed — not the current balance.
    ledger
        .create_token(TokenPolicy::new(
            "RATE",
            9,
            TransferRule::QuarterlyAllowance {
                numerator: 1,
                denominator: 10,
            },
        ))
        .unwrap();
    ledger
        .mint(&"RATE".into(), &"holder".into(), amount("1000"), Lot::Originated)
        .unwrap();

    let transfer = |ledger: &mut Ledger, amt: &str, at: u64| {
        ledger.transfer(
            &"RATE".into(),
            &"holder".into(),
            &"buyer".into(),
            amount(amt),
            Lot::Originated,
            Timestamp::from_seconds(at),
        )
    };
    transfer(&mut ledger, "100", 0).unwrap();
    println!("first quarter: moved the full 10% allowance");
    let err = transfer(&mut ledger, "0.000000001", 100).unwrap_err();
    println!("one more base unit this quarter: {err}");
    transfer(&mut ledger, "100", QUARTER_SECONDS).unwrap();
    println!("next quarter: allowance reset, another 10% moved");

    ledger.check_conservation().unwrap();
    println!("conservation holds across every movement");
}

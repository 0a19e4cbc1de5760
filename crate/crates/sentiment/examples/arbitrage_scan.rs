//! Scan catalog payoff functions for arbitrage: a stake mix whose payoff is
//! positive no matter how the outcome resolves. Functions without penalties
//! admit riskless reward by construction; the symmetric buy/sell function
//! is zero-sum and admits none.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example arbitrage_scan
//! ```

use sentiment_protocol::pef::{
    default_continuous_grid, default_epsilon, detect_arbitrage, PeFunction, BUY, RATING_DOWN,
    RATING_FLAT, RATING_UP, SELL,
};
use sentiment_protocol::{Outcome, SentimentChoice};

fn labels(names: &[&str]) -> Vec<SentimentChoice> {
    names.iter().map(|n| SentimentChoice::label(*n)).collect()
}

fn main() {
    let c = "0.1".parse().unwrap();

    // Winner-takes-reward over two candidates: hedge half and half and the
    // winning half always pays c, so c/2 is locked in. The pollster opted
    // into that by choosing a no-penalty function.
    let election = PeFunction::discrete_match(c);
    let grid = vec![Outcome::discrete("R"), Outcome::discrete("D")];
    let mix = detect_arbitrage(&election, &labels(&["R", "D"]), &grid, default_epsilon(&election))
        .unwrap()
        .expect("no-penalty match function admits a hedge");
    println!(
        "discrete_match: hedge {:?} locks in {:.4} per token",
        mix.weights, mix.guaranteed_profit
    );
    assert!((mix.guaranteed_profit - 0.05).abs() < 1e-9);

    // The symmetric buy/sell function cannot be gamed: any mix of buy and
    // sell has a non-positive worst case across outcomes.
    let stock = PeFunction::arctan_buy_sell(c);
    let grid = default_continuous_grid();
    let result =
        detect_arbitrage(&stock, &labels(&[BUY, SELL]), &grid, default_epsilon(&stock)).unwrap();
    println!("arctan_buy_sell: {:?}", result);
    assert!(result.is_none());

    // The rating triple is also a no-penalty function with total coverage:
    // up pays for any rise, down for any fall, flat in between. Hedging
    // across all three locks in a small guaranteed reward — by design, the
    // price of a poll with no risk of loss.
    let rating = PeFunction::rating_triple(c);
    let mix = detect_arbitrage(
        &rating,
        &labels(&[RATING_UP, RATING_FLAT, RATING_DOWN]),
        &grid,
        default_epsilon(&rating),
    )
    .unwrap()
    .expect("full-coverage no-penalty function admits a hedge");
    println!(
        "rating_triple: mix {:?} guarantees {:.6} per token",
        mix.weights, mix.guaranteed_profit
    );
    assert!(mix.guaranteed_profit > 0.0);

    // Restricting the same function to one side of the market removes the
    // coverage: a pure up/flat book earns nothing when the price falls.
    let result = detect_arbitrage(
        &rating,
        &labels(&[RATING_UP, RATING_FLAT]),
        &grid,
        default_epsilon(&rating),
    )
    .unwrap();
    println!("rating_triple without the down side: {result:?}");
    assert!(result.is_none());
}

//! Sample the three-way rating payoff (up / flat / down) over a ratio grid
//! and print CSV suitable for plotting. The up curve is linear in the
//! ratio and capped at 1; the flat curve peaks at 0.5 when nothing moves
//! and hits zero outside (10/11, 1.1); the down curve mirrors up under
//! ratio inversion.
//!
//! ```bash
//! cargo run -p sentiment-protocol --example rating_curves > curves.csv
//! ```

use sentiment_protocol::pef::{curve_samples, PeFunction, RATING_DOWN, RATING_FLAT, RATING_UP};
use sentiment_protocol::SentimentChoice;

fn main() {
    let function = PeFunction::rating_triple("1000/9000000".parse().unwrap());
    function.validate().unwrap();

    // The plot range used for the published curve shape.
    let steps = 400;
    let (start, stop) = (0.4545454, 2.199);
    let grid: Vec<f64> = (0..steps)
        .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
        .collect();

    println!("outcome,up,flat,down");
    let columns: Vec<Vec<f64>> = [RATING_UP, RATING_FLAT, RATING_DOWN]
        .iter()
        .map(|label| {
            curve_samples(&function, &SentimentChoice::label(*label), &grid)
                .unwrap()
                .into_iter()
                .map(|s| s.normalized)
                .collect()
        })
        .collect();
    for (i, outcome) in grid.iter().enumerate() {
        println!(
            "{},{},{},{}",
            outcome, columns[0][i], columns[1][i], columns[2][i]
        );
    }

    // A few landmarks, normalized by c.
    let check = |label: &str, o: f64| {
        curve_samples(&function, &SentimentChoice::label(label), &[o]).unwrap()[0].normalized
    };
    assert!((check(RATING_UP, 2.0) - 1.0).abs() < 1e-12); // cap reached
    assert!((check(RATING_UP, 2.5) - 1.0).abs() < 1e-12); // plateau
    assert!((check(RATING_FLAT, 1.0) - 0.5).abs() < 1e-12); // peak
    assert!(check(RATING_FLAT, 1.2).abs() < 1e-12); // outside the band
    assert!((check(RATING_DOWN, 0.5) - 1.0).abs() < 1e-12); // halving maxes down
    eprintln!("landmark values verified");
}

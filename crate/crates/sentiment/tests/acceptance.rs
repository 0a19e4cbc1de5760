//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Tolerances are pinned in the
//! asserts themselves.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use sentiment_protocol::engine::{ChoiceInput, Engine, StakingParams, TallyOutcome};
use sentiment_protocol::ledger::Lot;
use sentiment_protocol::oracle::OutcomeFeed;
use sentiment_protocol::pef::{
    self, default_epsilon, detect_arbitrage, geometric_pool, required_pool, EvaluationSchedule,
    ScheduleEntry, BUY, RATING_DOWN, RATING_FLAT, RATING_UP, SELL,
};
use sentiment_protocol::{
    Outcome, OutcomeSet, PeFunction, PollSpec, Rate, SentimentChoice, Timestamp, TokenAmount,
    TokenPolicy, TransferRule,
};

fn ts(seconds: u64) -> Timestamp {
    Timestamp::from_seconds(seconds)
}

fn amount(display: &str) -> TokenAmount {
    TokenAmount::from_display(display, 9).unwrap()
}

fn rate(s: &str) -> Rate {
    s.parse().unwrap()
}

fn eth_engine(accounts: &[(&str, &str)]) -> Engine {
    let mut engine = Engine::new();
    engine
        .ledger
        .create_token(TokenPolicy::new("ETH", 9, TransferRule::Free))
        .unwrap();
    for (account, balance) in accounts {
        engine
            .ledger
            .mint(&"ETH".into(), &(*account).into(), amount(balance), Lot::Originated)
            .unwrap();
    }
    engine
}

fn basic_spec(
    topic: &str,
    outcomes: OutcomeSet,
    sentiments: &[&str],
    pef: PeFunction,
    min: &str,
    schedule: EvaluationSchedule,
) -> PollSpec {
    PollSpec {
        topic: topic.into(),
        outcomes,
        sentiments: sentiments.iter().map(|s| SentimentChoice::label(*s)).collect(),
        staking: StakingParams {
            token: "ETH".into(),
            window_start: ts(0),
            window_end: ts(777_600),
            min_total: amount(min),
            max_total: amount("10000"),
        },
        cooldown: ts(86_400),
        schedule,
        pef,
        sealed: false,
        policy_hook: None,
        pollster: "pollco".into(),
    }
}

const TALLY_AT: u64 = 864_000; // window end + 24h

/// Constant reward reproduction: a 100-token stake ends at exactly 110
/// tokens and the pollster recovers the unspent pool, integer-exact.
#[test]
fn criterion_01_constant_reward_exact() {
    let started = Instant::now();
    let mut engine = eth_engine(&[("pollco", "1000"), ("prov", "100")]);
    let spec = basic_spec(
        "any-topic",
        OutcomeSet::discrete(["yes", "no"]).unwrap(),
        &["yes", "no"],
        PeFunction::constant(rate("0.1")),
        "100",
        EvaluationSchedule::single(ts(0)),
    );
    let poll = engine.create_poll(spec, amount("1000"), None, ts(0)).unwrap();
    engine
        .submit(
            &poll,
            &"prov".into(),
            ChoiceInput::Clear(SentimentChoice::label("yes")),
            amount("100"),
            ts(10),
        )
        .unwrap();
    engine.tally(&poll, ts(TALLY_AT), None).unwrap();
    engine.evaluate_performance(&poll, 1, ts(TALLY_AT)).unwrap();
    engine.close_poll(&poll, ts(TALLY_AT)).unwrap();

    // (1 + c) * T, integer exact.
    assert_eq!(
        engine.ledger.balance(&"ETH".into(), &"prov".into()).unwrap(),
        sentiment_protocol::types::to_base_units("110", 9).unwrap()
    );
    // Pollster recovers pool minus the payout, integer exact.
    assert_eq!(
        engine.ledger.balance(&"ETH".into(), &"pollco".into()).unwrap(),
        amount("990")
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1s");
    println!("criterion 1 PASS: constant reward pays (1+c)T exactly ({elapsed:?})");
}

/// Two-candidate election with winner-takes-reward: D-stakers net exactly
/// floor(c*T), R-stakers net zero, on the published timeline.
#[test]
fn criterion_02_election_reproduction() {
    let mut engine = eth_engine(&[("pollco", "1000"), ("alice", "600"), ("bob", "400")]);
    engine
        .oracle
        .register_feed(
            OutcomeFeed::new(
                "election",
                ts(93_000_000),
                vec![(ts(93_000_000), Outcome::discrete("D"))],
            )
            .unwrap(),
        )
        .unwrap();
    let day = 86_400;
    let spec = basic_spec(
        "election",
        OutcomeSet::discrete(["R", "D"]).unwrap(),
        &["R", "D"],
        PeFunction::discrete_match(rate("0.1")),
        "1000",
        EvaluationSchedule::single(ts(1071 * day)),
    );
    let poll = engine.create_poll(spec, amount("1000"), None, ts(0)).unwrap();
    engine
        .submit(
            &poll,
            &"alice".into(),
            ChoiceInput::Clear(SentimentChoice::label("D")),
            amount("600"),
            ts(10),
        )
        .unwrap();
    engine
        .submit(
            &poll,
            &"bob".into(),
            ChoiceInput::Clear(SentimentChoice::label("R")),
            amount("400"),
            ts(20),
        )
        .unwrap();

    // Tally at window end + 24h; evaluation 1071 simulated days later.
    engine.tally(&poll, ts(TALLY_AT), None).unwrap();
    let eval_at = TALLY_AT + 1071 * day;
    assert!(matches!(
        engine.evaluate_performance(&poll, 1, ts(eval_at - 1)),
        Err(sentiment_protocol::EngineError::TooEarly { .. })
    ));
    engine.evaluate_performance(&poll, 1, ts(eval_at)).unwrap();
    let report = engine.close_poll(&poll, ts(eval_at)).unwrap();

    // floor(c*T): alice 600 * 0.1 = 60 exactly; bob exactly zero.
    assert_eq!(report.rows[0].net, "60");
    assert_eq!(report.rows[1].net, "0");
    assert_eq!(
        engine.ledger.balance(&"ETH".into(), &"alice".into()).unwrap(),
        amount("660")
    );
    assert_eq!(
        engine.ledger.balance(&"ETH".into(), &"bob".into()).unwrap(),
        amount("400")
    );
    println!("criterion 2 PASS: election nets +floor(c*T) for winners, 0 for losers, on the 1071-day timeline");
}

/// Arctan buy/sell settlement: withheld at tally is exactly c*T; a doubling
/// nets +50 tokens for a 1000-token buy stake and a halving nets -50, each
/// within one base unit.
#[test]
fn criterion_03_arctan_settlement() {
    // Independent check of the worked value before trusting the engine:
    // arctan(1) is pi/4, so the per-token value at o=2 is c/2 exactly.
    let independent = 0.1_f64 * (1.0_f64).atan() / std::f64::consts::FRAC_PI_2;
    assert!((independent - 0.05).abs() < 1e-16);

    let one_token = 1_000_000_000i128;
    for (outcome, expected_net) in [(2.0, 50 * one_token), (0.5, -50 * one_token)] {
        let mut engine = eth_engine(&[("pollco", "1000"), ("prov", "1000"), ("other", "1000")]);
        engine
            .oracle
            .register_feed(
                OutcomeFeed::new(
                    "ratio",
                    ts(TALLY_AT),
                    vec![(ts(TALLY_AT), Outcome::continuous(outcome).unwrap())],
                )
                .unwrap(),
            )
            .unwrap();
        let spec = basic_spec(
            "ratio",
            OutcomeSet::ContinuousPositive,
            &[BUY, SELL],
            PeFunction::arctan_buy_sell(rate("0.1")),
            "1000",
            EvaluationSchedule::single(ts(0)),
        );
        let poll = engine.create_poll(spec, amount("1000"), None, ts(0)).unwrap();
        engine
            .submit(
                &poll,
                &"prov".into(),
                ChoiceInput::Clear(SentimentChoice::label(BUY)),
                amount("1000"),
                ts(10),
            )
            .unwrap();
        engine
            .submit(
                &poll,
                &"other".into(),
                ChoiceInput::Clear(SentimentChoice::label(SELL)),
                amount("500"),
                ts(20),
            )
            .unwrap();
        let TallyOutcome::Tallied(result) = engine.tally(&poll, ts(TALLY_AT), None).unwrap()
        else {
            panic!("expected tally");
        };
        // Withheld at tally: exactly c*T across the two stakes (c * 1500).
        assert_eq!(result.withheld_total, amount("150"));

        engine.evaluate_performance(&poll, 1, ts(TALLY_AT)).unwrap();
        engine.close_poll(&poll, ts(TALLY_AT)).unwrap();
        let poll_state = engine.poll(&poll).unwrap();
        let net = poll_state.submissions()[0].net_delta();
        assert!(
            (net - expected_net).abs() <= 1,
            "o={outcome}: net {net}, expected {expected_net} +-1"
        );
    }
    println!("criterion 3 PASS: arctan nets +-50 tokens (tolerance 1 base unit), withholding exactly c*T");
}

/// The published three-curve figure, via the CLI curve command: 400 grid
/// points against the branch formulas at 1e-12 relative error, and
/// breakpoint continuity at 1e-12.
#[test]
fn criterion_04_curve_reproduction() {
    let dir = std::env::temp_dir().join(format!("sentiment-curve-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let pef_path = dir.join("rating.json");
    std::fs::write(
        &pef_path,
        r#"{"variant":"rating_triple","c":"1000/9000000"}"#,
    )
    .unwrap();

    // Branch formulas, normalized by c (the independent oracle).
    let up = |o: f64| (o - 1.0).clamp(0.0, 1.0);
    let down = |o: f64| (1.0 / o - 1.0).clamp(0.0, 1.0);
    let flat = |o: f64| {
        if (10.0 / 11.0..=1.0).contains(&o) {
            5.0 * (1.1 - 1.0 / o)
        } else if (1.0..=1.1).contains(&o) {
            5.0 * (1.1 - o)
        } else {
            0.0
        }
    };
    let oracle: [(&str, &dyn Fn(f64) -> f64); 3] =
        [("up", &up), ("flat", &flat), ("down", &down)];

    for (label, reference) in oracle {
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_sentiment"))
            .args([
                "pef",
                "curve",
                pef_path.to_str().unwrap(),
                label,
                "0.4545454:2.199:400",
            ])
            .output()
            .unwrap();
        assert!(output.status.success(), "curve command failed for {label}");
        let csv = String::from_utf8(output.stdout).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "outcome,normalized_value");
        let mut count = 0;
        for line in lines {
            let (o, v) = line.split_once(',').unwrap();
            let o: f64 = o.parse().unwrap();
            let v: f64 = v.parse().unwrap();
            let want = reference(o);
            let scale = want.abs().max(1.0);
            assert!(
                ((v - want) / scale).abs() <= 1e-12,
                "{label} at o={o}: got {v}, want {want}"
            );
            count += 1;
        }
        assert_eq!(count, 400);
    }

    // Continuity at every breakpoint: both adjoining branch expressions
    // agree there to 1e-12 (normalized), and the engine matches them.
    let f = PeFunction::rating_triple(rate("1000/9000000"));
    let c = f.sup_rate().to_f64();
    let breakpoints: [(&str, f64, f64); 5] = [
        (RATING_FLAT, 10.0 / 11.0, 0.0),
        (RATING_FLAT, 1.0, 0.5),
        (RATING_FLAT, 1.1, 0.0),
        (RATING_UP, 1.0, 0.0),
        (RATING_UP, 2.0, 1.0),
    ];
    for (label, point, want) in breakpoints {
        let value = f
            .evaluate(&Outcome::continuous(point).unwrap(), &SentimentChoice::label(label))
            .unwrap()
            .value()
            / c;
        assert!(
            (value - want).abs() <= 1e-12,
            "{label}@{point}: {value} vs {want}"
        );
    }
    // The down curve's breakpoints at 1/2 and 1 mirror the up curve's.
    for (point, want) in [(0.5, 1.0), (1.0, 0.0)] {
        let value = f
            .evaluate(
                &Outcome::continuous(point).unwrap(),
                &SentimentChoice::label(RATING_DOWN),
            )
            .unwrap()
            .value()
            / c;
        assert!((value - want).abs() <= 1e-12);
    }
    std::fs::remove_dir_all(&dir).ok();
    println!("criterion 4 PASS: CLI curves match branch formulas at 400 points to 1e-12, breakpoints continuous");
}

/// Pool sizing: the full-weight pool is exactly 10,000 * c, and halving
/// truncations never need more.
#[test]
fn criterion_05_pool_sizing_exact() {
    let max_total = amount("10000");
    let expected = amount("1000"); // 10,000 * 0.1
    let single = EvaluationSchedule::single(ts(0));
    let constant = PeFunction::constant(rate("0.1"));
    assert_eq!(required_pool(&single, &constant, max_total).unwrap(), expected);
    // Same supremum for the arctan function.
    assert_eq!(
        required_pool(&single, &PeFunction::arctan_buy_sell(rate("0.1")), max_total).unwrap(),
        expected
    );
    for n in 1..=30 {
        let truncated = EvaluationSchedule::halving(n, ts(0)).unwrap();
        let pool = required_pool(&truncated, &constant, max_total).unwrap();
        assert!(
            pool <= expected,
            "halving series of {n} needs {pool:?} > {expected:?}"
        );
    }
    println!("criterion 5 PASS: required pool is exactly 10,000*c; halving truncations never exceed it");
}

/// Geometric governance series: the first pool is exactly 1,000 of a
/// 100,000 reserve at ratio 0.99, and no partial sum ever reaches the
/// reserve through N = 10,000.
#[test]
fn criterion_06_geometric_series() {
    let started = Instant::now();
    let total = amount("100000");
    assert_eq!(geometric_pool(total, 0.99, 1).unwrap(), amount("1000"));
    assert_eq!(geometric_pool(total, 0.99, 2).unwrap(), amount("990"));

    let mut sum: u128 = 0;
    for i in 1..=10_000u32 {
        sum += geometric_pool(total, 0.99, i).unwrap().base_units();
        assert!(
            sum < total.base_units(),
            "partial sum reached the reserve at N={i}"
        );
    }
    println!(
        "criterion 6 PASS: R_1 = 1000 exactly; partial sums stay below the reserve through N=10,000 ({:?})",
        started.elapsed()
    );
}

/// The community-rating reward constant: 1000 tokens over ten stocks and
/// 900,000 public tokens gives c = 0.000111... (repeating), matched to 12
/// significant digits.
#[test]
fn criterion_07_rating_constant() {
    // As published: c = 1000 / (10 * 900,000).
    let c: Rate = "1000/9000000".parse().unwrap();
    // The repeating decimal 0.000111..., to 13 digits here.
    let repeating = 0.0001111111111111f64;
    let relative = (c.to_f64() - repeating).abs() / repeating;
    assert!(
        relative <= 1e-12,
        "c = {} differs from 0.000(1) by {relative}",
        c.to_f64()
    );
    // And exactly, as a rational: c * 9000 = 1.
    assert_eq!(c.checked_mul(Rate::from_integer(9000)).unwrap(), Rate::ONE);
    // The built-in scenario uses the same constant.
    let source = sentiment_protocol::scenarios::scenario_source("rating_agency").unwrap();
    assert!(source.contains("1000/9000000"));
    println!("criterion 7 PASS: rating constant matches 0.000(1) to 12 significant digits");
}

/// Arbitrage detector agrees with an independent brute-force search over a
/// 1e-3 lambda grid, on both the hedgeable and the zero-sum function.
#[test]
fn criterion_08_arbitrage_oracle_equivalence() {
    let started = Instant::now();

    // Brute force: maximize over lambda in {0, 0.001, ..., 1} the minimum
    // payoff across the outcome grid.
    let brute_force = |payoffs: &[Vec<f64>]| -> f64 {
        let mut best = f64::NEG_INFINITY;
        for step in 0..=1000 {
            let lambda = step as f64 / 1000.0;
            let worst = (0..payoffs[0].len())
                .map(|j| lambda * payoffs[0][j] + (1.0 - lambda) * payoffs[1][j])
                .fold(f64::INFINITY, f64::min);
            best = best.max(worst);
        }
        best
    };

    let c = 0.1;
    let tolerance = 1e-6 * c;

    // Winner-takes-reward on two candidates.
    let match_fn = PeFunction::discrete_match(rate("0.1"));
    let sentiments = [SentimentChoice::label("R"), SentimentChoice::label("D")];
    let grid = [Outcome::discrete("R"), Outcome::discrete("D")];
    let payoffs: Vec<Vec<f64>> = sentiments
        .iter()
        .map(|s| {
            grid.iter()
                .map(|o| match_fn.evaluate(o, s).unwrap().value())
                .collect()
        })
        .collect();
    let brute = brute_force(&payoffs);
    let mix = detect_arbitrage(&match_fn, &sentiments, &grid, default_epsilon(&match_fn))
        .unwrap()
        .expect("hedge exists");
    assert!(
        (mix.guaranteed_profit - brute).abs() <= tolerance,
        "solver {} vs brute force {brute}",
        mix.guaranteed_profit
    );
    assert!((mix.guaranteed_profit - c / 2.0).abs() <= tolerance);
    assert!((mix.weights[0].1 - 0.5).abs() <= 1e-6);
    assert!((mix.weights[1].1 - 0.5).abs() <= 1e-6);

    // The zero-sum buy/sell function: neither method finds profit.
    let arctan = PeFunction::arctan_buy_sell(rate("0.1"));
    let sentiments = [SentimentChoice::label(BUY), SentimentChoice::label(SELL)];
    let grid = pef::default_continuous_grid();
    let payoffs: Vec<Vec<f64>> = sentiments
        .iter()
        .map(|s| {
            grid.iter()
                .map(|o| arctan.evaluate(o, s).unwrap().value())
                .collect()
        })
        .collect();
    let brute = brute_force(&payoffs);
    assert!(brute <= tolerance, "brute force found profit {brute}");
    let result = detect_arbitrage(&arctan, &sentiments, &grid, default_epsilon(&arctan)).unwrap();
    assert!(result.is_none());

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
    println!("criterion 8 PASS: detector matches brute force within 1e-6*c on both functions ({elapsed:?})");
}

/// Randomized lifecycle property sweep: 10,000 full poll lifecycles with
/// random functions, schedules, stakes and outcomes uphold conservation,
/// solvency, forward-only phases and stake proportionality; the buy/sell
/// symmetry and monotonicity invariants hold on dense random grids.
#[test]
fn criterion_09_randomized_lifecycles() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5e_a7_1e_55);

    let weight_sets: [&[&str]; 4] = [&["1"], &["0.5", "0.25"], &["0.5", "0.25", "0.125"], &["0.6", "0.4"]];
    let mut voided_runs = 0u32;
    let runs = 10_000;
    for run in 0..runs {
        // Random catalog function and schedule.
        let c_raw = rng.gen_range(1..=50);
        let c = Rate::new(c_raw, 100).unwrap();
        let variant = rng.gen_range(0..4);
        let function = match variant {
            0 => PeFunction::constant(c),
            1 => PeFunction::discrete_match(c),
            2 => PeFunction::arctan_buy_sell(c),
            _ => PeFunction::rating_triple(c),
        };
        let weights = weight_sets[rng.gen_range(0..weight_sets.len())];
        let schedule = EvaluationSchedule::new(
            weights
                .iter()
                .map(|w| ScheduleEntry {
                    delta: ts(100),
                    weight: w.parse().unwrap(),
                })
                .collect(),
        )
        .unwrap();

        let (outcomes, sentiments, feed_outcome): (OutcomeSet, Vec<&str>, Outcome) = match variant
        {
            0 | 1 => {
                let winner = if rng.gen_bool(0.5) { "R" } else { "D" };
                (
                    OutcomeSet::discrete(["R", "D"]).unwrap(),
                    vec!["R", "D"],
                    Outcome::discrete(winner),
                )
            }
            2 => (
                OutcomeSet::ContinuousPositive,
                vec![BUY, SELL],
                Outcome::continuous(10f64.powf(rng.gen_range(-2.0..2.0))).unwrap(),
            ),
            _ => (
                OutcomeSet::ContinuousPositive,
                vec![RATING_UP, RATING_FLAT, RATING_DOWN],
                Outcome::continuous(10f64.powf(rng.gen_range(-0.5..0.5))).unwrap(),
            ),
        };

        let mut engine = eth_engine(&[
            ("pollco", "100000"),
            ("p1", "4000"),
            ("p2", "4000"),
            ("p3", "4000"),
        ]);
        engine
            .oracle
            .register_feed(
                OutcomeFeed::new("topic", ts(150), vec![(ts(150), feed_outcome)]).unwrap(),
            )
            .unwrap();

        let min_total = if rng.gen_bool(0.1) { "5000" } else { "1" };
        let spec = PollSpec {
            topic: "topic".into(),
            outcomes,
            sentiments: sentiments.iter().map(|s| SentimentChoice::label(*s)).collect(),
            staking: StakingParams {
                token: "ETH".into(),
                window_start: ts(0),
                window_end: ts(100),
                min_total: amount(min_total),
                max_total: amount("10000"),
            },
            cooldown: ts(0),
            schedule: schedule.clone(),
            pef: function.clone(),
            sealed: false,
            policy_hook: None,
        pollster: "pollco".into(),
        };
        let deposit = required_pool(&schedule, &function, amount("10000")).unwrap();
        let poll = engine.create_poll(spec, deposit, None, ts(0)).unwrap();

        // Random submissions; keep one pair at stakes T and 2T to check
        // proportionality within the same run.
        let base_stake = rng.gen_range(1..=1_000u64);
        let double_stake = base_stake * 2;
        let sentiment_of = |i: usize| sentiments[i % sentiments.len()];
        engine
            .submit(
                &poll,
                &"p1".into(),
                ChoiceInput::Clear(SentimentChoice::label(sentiment_of(0))),
                TokenAmount::from_base_units(base_stake as u128 * 1_000_000_000),
                ts(10),
            )
            .unwrap();
        engine
            .submit(
                &poll,
                &"p2".into(),
                ChoiceInput::Clear(SentimentChoice::label(sentiment_of(0))),
                TokenAmount::from_base_units(double_stake as u128 * 1_000_000_000),
                ts(11),
            )
            .unwrap();
        for extra in 0..rng.gen_range(0..3) {
            engine
                .submit(
                    &poll,
                    &"p3".into(),
                    ChoiceInput::Clear(SentimentChoice::label(sentiment_of(extra + 1))),
                    TokenAmount::from_base_units(rng.gen_range(1..=800u64) as u128 * 1_000_000_000),
                    ts(12 + extra as u64),
                )
                .unwrap();
        }

        match engine.tally(&poll, ts(100), None).unwrap() {
            TallyOutcome::Voided => {
                voided_runs += 1;
                let report = engine.close_poll(&poll, ts(100)).unwrap();
                assert!(report.voided);
                for row in &report.rows {
                    assert_eq!(row.net, "0", "voided polls refund in full");
                }
                engine.ledger.check_conservation().unwrap();
                continue;
            }
            TallyOutcome::Tallied(_) => {}
        }
        let mut now = 100;
        for index in 1..=schedule.len() as u32 {
            now += 100;
            // Solvency: every settlement succeeds from escrowed funds.
            engine.evaluate_performance(&poll, index, ts(now)).unwrap();
        }
        // Forward-only: the poll is fully evaluated, never beyond.
        assert_eq!(
            engine.poll(&poll).unwrap().evaluations_done(),
            schedule.len() as u32
        );
        engine.close_poll(&poll, ts(now)).unwrap();

        // Conservation after every lifecycle.
        engine.ledger.check_conservation().unwrap();

        // Proportionality: doubling the stake doubles each pre-rounding
        // payout, so the settled integer payouts differ from exact doubling
        // by less than one base unit per evaluation.
        let poll_state = engine.poll(&poll).unwrap();
        let submissions = poll_state.submissions();
        for (small, large) in submissions[0].evals.iter().zip(&submissions[1].evals) {
            let small_payout = (small.reward.base_units() + small.released.base_units()) as i128;
            let large_payout = (large.reward.base_units() + large.released.base_units()) as i128;
            assert!(
                (large_payout - 2 * small_payout).abs() <= 2,
                "run {run}: payout {large_payout} vs doubled {small_payout}"
            );
        }
    }
    assert!(voided_runs > 0, "the sweep should exercise voided polls");

    // Buy/sell symmetry and monotonicity at random points.
    let f = PeFunction::arctan_buy_sell(rate("0.1"));
    let buy = SentimentChoice::label(BUY);
    let sell = SentimentChoice::label(SELL);
    let mut last = f64::NEG_INFINITY;
    let mut grid: Vec<f64> = (0..10_000)
        .map(|_| 10f64.powf(rng.gen_range(-3.0..3.0)))
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for o in grid {
        let v_buy = f.evaluate(&Outcome::continuous(o).unwrap(), &buy).unwrap().value();
        let v_sell = f
            .evaluate(&Outcome::continuous(1.0 / o).unwrap(), &sell)
            .unwrap()
            .value();
        let scale = v_buy.abs().max(1e-30);
        assert!(((v_buy - v_sell) / scale).abs() <= 1e-12, "symmetry at o={o}");
        assert!(v_buy >= last - 1e-15, "monotonicity at o={o}");
        last = v_buy;
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60s");
    println!(
        "criterion 9 PASS: {runs} randomized lifecycles ({voided_runs} voided) uphold conservation, solvency, phases, proportionality; symmetry and monotonicity hold ({elapsed:?})"
    );
}

/// Determinism: every built-in scenario run twice produces identical event
/// digests (and matches its golden document).
#[test]
fn criterion_10_scenario_determinism() {
    for name in sentiment_protocol::scenarios::SCENARIO_NAMES {
        let first = sentiment_protocol::scenarios::run_scenario(name)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        let second = sentiment_protocol::scenarios::run_scenario(name).unwrap();
        assert_eq!(
            first.event_digest, second.event_digest,
            "{name} diverged between runs"
        );
    }
    println!("criterion 10 PASS: all scenarios replay to identical event digests");
}

/// The weights map in a tally is deterministic; spot-check the sealed
/// scenario's tally weights against the definition.
#[test]
fn election_scenario_weights_cross_check() {
    let run = sentiment_protocol::scenarios::run_scenario("election2020").unwrap();
    let report = &run.reports["election"];
    let by_account: BTreeMap<&str, &str> = report
        .rows
        .iter()
        .map(|r| (r.account.as_str(), r.net.as_str()))
        .collect();
    assert_eq!(by_account["alice"], "60");
    assert_eq!(by_account["bob"], "0");
    assert_eq!(by_account["carol"], "15");
}

//! Performance-evaluation function catalog with exact bounds, evaluation
//! schedules, reward-pool sizing, arbitrage detection and curve sampling.
//!
//! A performance evaluation function maps (outcome, sentiment) to a reward
//! or penalty per staked token in `[-1, +inf)`. Its supremum sizes the
//! reward pool a pollster must escrow; its infimum sizes the stake
//! withholding that covers worst-case penalties. Pool and withholding math
//! is exact rational arithmetic; only the evaluated per-token value itself
//! is a double.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::minimax::{self, GameError};
use crate::rate::{mul_f64_floor, Rate, RateError};
use crate::types::{Outcome, SentimentChoice, SignedPerToken, Timestamp, TokenAmount};

/// Sentiment labels understood by the buy/sell function.
pub const BUY: &str = "buy";
pub const SELL: &str = "sell";
/// Sentiment labels understood by the three-way rating function.
pub const RATING_UP: &str = "up";
pub const RATING_FLAT: &str = "flat";
pub const RATING_DOWN: &str = "down";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PefError {
    #[error("outcome type mismatch: {0}")]
    OutcomeTypeMismatch(String),
    #[error("unknown sentiment label `{0}` for this function")]
    UnknownSentimentLabel(String),
    #[error("declared bounds violated: {0}")]
    DeclaredBoundsViolated(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("evaluation index {index} out of range (schedule has {len} entries)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("geometric ratio must be strictly between 0 and 1")]
    InvalidRatio,
    #[error("outcome grid must be non-empty")]
    EmptyGrid,
    #[error("grid must be sorted ascending and strictly positive")]
    BadGrid,
    #[error("amount overflow")]
    Overflow,
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Map the arrow aliases onto canonical rating labels.
pub fn normalize_label(label: &str) -> String {
    match label.trim() {
        "↑" => RATING_UP.to_string(),
        "⇔" => RATING_FLAT.to_string(),
        "↓" => RATING_DOWN.to_string(),
        other => other.to_string(),
    }
}

// ---------------------------------------------------------------------------
// The catalog
// ---------------------------------------------------------------------------

/// A performance evaluation function from the built-in catalog.
///
/// `c` is the per-token reward cap (the function's supremum) and is kept as
/// an exact rational so pool sizing and withholding stay exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PeFunction {
    /// Reward `c` regardless of outcome and sentiment.
    Constant {
        #[serde(rename = "c")]
        cap: Rate,
    },
    /// Reward `c` iff the sentiment label equals the outcome label, else 0.
    DiscreteMatch {
        #[serde(rename = "c")]
        cap: Rate,
    },
    /// Smooth, bounded buy/sell function on a positive ratio outcome:
    /// `(2c/pi) * sgn(o-1) * arctan(max(o-1, 1/o-1)) * g(s)` with
    /// `g(buy) = 1`, `g(sell) = -1`.
    ArctanBuySell {
        #[serde(rename = "c")]
        cap: Rate,
    },
    /// Piecewise up/flat/down rating function on a positive ratio outcome.
    RatingTriple {
        #[serde(rename = "c")]
        cap: Rate,
    },
    /// Explicit payoff table over discrete outcome and sentiment labels,
    /// with declared bounds validated against the entries.
    Tabulated {
        matrix: BTreeMap<String, BTreeMap<String, Rate>>,
        sup: Rate,
        inf: Rate,
    },
}

impl PeFunction {
    pub fn constant(cap: Rate) -> Self {
        PeFunction::Constant { cap }
    }

    pub fn discrete_match(cap: Rate) -> Self {
        PeFunction::DiscreteMatch { cap }
    }

    pub fn arctan_buy_sell(cap: Rate) -> Self {
        PeFunction::ArctanBuySell { cap }
    }

    pub fn rating_triple(cap: Rate) -> Self {
        PeFunction::RatingTriple { cap }
    }

    /// Whether evaluation actually reads the outcome. Constant functions do
    /// not, so polls using them never need an oracle.
    pub fn needs_outcome(&self) -> bool {
        !matches!(self, PeFunction::Constant { .. })
    }

    /// Exact supremum as a rational.
    pub fn sup_rate(&self) -> Rate {
        match self {
            PeFunction::Constant { cap }
            | PeFunction::DiscreteMatch { cap }
            | PeFunction::ArctanBuySell { cap }
            | PeFunction::RatingTriple { cap } => *cap,
            PeFunction::Tabulated { sup, .. } => *sup,
        }
    }

    /// Exact infimum as a rational. For the arctan function the bounds are
    /// the limit values `+-c`, declared even though never attained; pool
    /// sizing and withholding use them.
    pub fn inf_rate(&self) -> Rate {
        match self {
            PeFunction::Constant { cap } => *cap,
            PeFunction::DiscreteMatch { .. } | PeFunction::RatingTriple { .. } => Rate::ZERO,
            PeFunction::ArctanBuySell { cap } => -*cap,
            PeFunction::Tabulated { inf, .. } => *inf,
        }
    }

    pub fn sup_bound(&self) -> SignedPerToken {
        SignedPerToken::new(self.sup_rate().to_f64()).expect("validated sup")
    }

    pub fn inf_bound(&self) -> SignedPerToken {
        SignedPerToken::new(self.inf_rate().to_f64()).expect("validated inf")
    }

    /// Structural validation: positive cap, bounds within `[-1, inf)`,
    /// tabulated entries inside the declared bounds (checked exhaustively),
    /// continuous variants spot-checked against their bounds by sampling.
    pub fn validate(&self) -> Result<(), PefError> {
        match self {
            PeFunction::Constant { cap }
            | PeFunction::DiscreteMatch { cap }
            | PeFunction::RatingTriple { cap } => {
                if !cap.is_positive() {
                    return Err(PefError::InvalidFunction("c must be positive".into()));
                }
            }
            PeFunction::ArctanBuySell { cap } => {
                if !cap.is_positive() {
                    return Err(PefError::InvalidFunction("c must be positive".into()));
                }
                if *cap > Rate::ONE {
                    return Err(PefError::InvalidFunction(
                        "c must be at most 1: the infimum -c may not fall below -1".into(),
                    ));
                }
            }
            PeFunction::Tabulated { matrix, sup, inf } => {
                if matrix.is_empty() || matrix.values().any(|row| row.is_empty()) {
                    return Err(PefError::InvalidFunction("empty payoff table".into()));
                }
                if *inf < Rate::from_integer(-1) {
                    return Err(PefError::InvalidFunction(
                        "declared infimum below -1".into(),
                    ));
                }
                if inf > sup {
                    return Err(PefError::InvalidFunction("inf exceeds sup".into()));
                }
                for (outcome, row) in matrix {
                    for (sentiment, value) in row {
                        if value < inf || value > sup {
                            return Err(PefError::DeclaredBoundsViolated(format!(
                                "entry ({outcome}, {sentiment}) = {value} outside [{inf}, {sup}]"
                            )));
                        }
                    }
                }
            }
        }
        // Sampled bound soundness for the continuous variants.
        if matches!(
            self,
            PeFunction::ArctanBuySell { .. } | PeFunction::RatingTriple { .. }
        ) {
            let sup = self.sup_rate().to_f64();
            let inf = self.inf_rate().to_f64();
            let slack = 1e-9 * sup.abs().max(1.0);
            for outcome in sample_grid(200) {
                for label in self.known_labels() {
                    let v = self
                        .evaluate(
                            &Outcome::Continuous(outcome),
                            &SentimentChoice::label(label),
                        )?
                        .value();
                    if v < inf - slack || v > sup + slack {
                        return Err(PefError::DeclaredBoundsViolated(format!(
                            "sampled value {v} at o={outcome} outside [{inf}, {sup}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn known_labels(&self) -> Vec<&'static str> {
        match self {
            PeFunction::ArctanBuySell { .. } => vec![BUY, SELL],
            PeFunction::RatingTriple { .. } => vec![RATING_UP, RATING_FLAT, RATING_DOWN],
            _ => vec![],
        }
    }

    /// Evaluate the per-token reward/penalty for an outcome and sentiment.
    pub fn evaluate(
        &self,
        outcome: &Outcome,
        choice: &SentimentChoice,
    ) -> Result<SignedPerToken, PefError> {
        let value = match self {
            PeFunction::Constant { cap } => cap.to_f64(),
            PeFunction::DiscreteMatch { cap } => {
                let outcome_label = discrete_label(outcome)?;
                let sentiment_label = choice_label(choice)?;
                if outcome_label == sentiment_label {
                    cap.to_f64()
                } else {
                    0.0
                }
            }
            PeFunction::ArctanBuySell { cap } => {
                let ratio = continuous_value(outcome)?;
                let direction = match choice_label(choice)? {
                    BUY => 1.0,
                    SELL => -1.0,
                    other => return Err(PefError::UnknownSentimentLabel(other.to_string())),
                };
                let sign = if ratio > 1.0 {
                    1.0
                } else if ratio < 1.0 {
                    -1.0
                } else {
                    0.0
                };
                let excess = (ratio - 1.0).max(1.0 / ratio - 1.0);
                // (2c/pi) * atan(x), written as c * (atan(x) / (pi/2)):
                // atan never exceeds pi/2, so the magnitude never exceeds c.
                cap.to_f64() * sign * (excess.atan() / std::f64::consts::FRAC_PI_2) * direction
            }
            PeFunction::RatingTriple { cap } => {
                let ratio = continuous_value(outcome)?;
                let c = cap.to_f64();
                match choice_label(choice)? {
                    RATING_UP => c * (ratio - 1.0).clamp(0.0, 1.0),
                    RATING_DOWN => c * (1.0 / ratio - 1.0).clamp(0.0, 1.0),
                    RATING_FLAT => {
                        let lower = 10.0 / 11.0;
                        if (lower..=1.0).contains(&ratio) {
                            5.0 * c * (1.1 - 1.0 / ratio)
                        } else if (1.0..=1.1).contains(&ratio) {
                            5.0 * c * (1.1 - ratio)
                        } else {
                            0.0
                        }
                    }
                    other => return Err(PefError::UnknownSentimentLabel(other.to_string())),
                }
            }
            PeFunction::Tabulated { matrix, .. } => {
                let outcome_label = discrete_label(outcome)?;
                let sentiment_label = choice_label(choice)?;
                let row = matrix.get(outcome_label).ok_or_else(|| {
                    PefError::OutcomeTypeMismatch(format!(
                        "outcome label `{outcome_label}` not in payoff table"
                    ))
                })?;
                row.get(sentiment_label)
                    .ok_or_else(|| PefError::UnknownSentimentLabel(sentiment_label.to_string()))?
                    .to_f64()
            }
        };
        SignedPerToken::new(value)
            .map_err(|_| PefError::InvalidFunction(format!("evaluated value {value} below -1")))
    }

    /// The exact rational per-token value, for variants whose payoff at
    /// this point is a stored rational rather than a curve: constant,
    /// label-match and tabulated lookups. Curved variants return `None`
    /// and settle through the double-precision path.
    pub fn evaluate_rate(
        &self,
        outcome: &Outcome,
        choice: &SentimentChoice,
    ) -> Result<Option<Rate>, PefError> {
        match self {
            PeFunction::Constant { cap } => Ok(Some(*cap)),
            PeFunction::DiscreteMatch { cap } => {
                let outcome_label = discrete_label(outcome)?;
                let sentiment_label = choice_label(choice)?;
                Ok(Some(if outcome_label == sentiment_label {
                    *cap
                } else {
                    Rate::ZERO
                }))
            }
            PeFunction::Tabulated { matrix, .. } => {
                let outcome_label = discrete_label(outcome)?;
                let sentiment_label = choice_label(choice)?;
                let row = matrix.get(outcome_label).ok_or_else(|| {
                    PefError::OutcomeTypeMismatch(format!(
                        "outcome label `{outcome_label}` not in payoff table"
                    ))
                })?;
                row.get(sentiment_label)
                    .copied()
                    .map(Some)
                    .ok_or_else(|| PefError::UnknownSentimentLabel(sentiment_label.to_string()))
            }
            PeFunction::ArctanBuySell { .. } | PeFunction::RatingTriple { .. } => Ok(None),
        }
    }

    /// The function scaled by a schedule weight: same shape, cap `w * c`.
    pub fn scaled(&self, weight: Rate) -> Result<PeFunction, PefError> {
        let scale = |cap: &Rate| cap.checked_mul(weight).ok_or(PefError::Overflow);
        Ok(match self {
            PeFunction::Constant { cap } => PeFunction::Constant { cap: scale(cap)? },
            PeFunction::DiscreteMatch { cap } => PeFunction::DiscreteMatch { cap: scale(cap)? },
            PeFunction::ArctanBuySell { cap } => PeFunction::ArctanBuySell { cap: scale(cap)? },
            PeFunction::RatingTriple { cap } => PeFunction::RatingTriple { cap: scale(cap)? },
            PeFunction::Tabulated { matrix, sup, inf } => {
                let mut scaled = BTreeMap::new();
                for (o, row) in matrix {
                    let mut out = BTreeMap::new();
                    for (s, v) in row {
                        out.insert(s.clone(), v.checked_mul(weight).ok_or(PefError::Overflow)?);
                    }
                    scaled.insert(o.clone(), out);
                }
                PeFunction::Tabulated {
                    matrix: scaled,
                    sup: scale(sup)?,
                    inf: inf.checked_mul(weight).ok_or(PefError::Overflow)?,
                }
            }
        })
    }
}

fn discrete_label(outcome: &Outcome) -> Result<&str, PefError> {
    match outcome {
        Outcome::Discrete(label) => Ok(label),
        Outcome::Continuous(v) => Err(PefError::OutcomeTypeMismatch(format!(
            "expected a discrete outcome, got continuous {v}"
        ))),
    }
}

fn continuous_value(outcome: &Outcome) -> Result<f64, PefError> {
    match outcome {
        Outcome::Continuous(v) if v.is_finite() && *v > 0.0 => Ok(*v),
        Outcome::Continuous(v) => Err(PefError::OutcomeTypeMismatch(format!(
            "continuous outcome must be a positive real, got {v}"
        ))),
        Outcome::Discrete(label) => Err(PefError::OutcomeTypeMismatch(format!(
            "expected a continuous outcome, got label `{label}`"
        ))),
    }
}

fn choice_label(choice: &SentimentChoice) -> Result<&str, PefError> {
    match choice {
        SentimentChoice::Label(label) => Ok(label),
        SentimentChoice::Interval(iv) => Err(PefError::UnknownSentimentLabel(iv.key())),
    }
}

fn sample_grid(points: usize) -> Vec<f64> {
    // Log-spaced over [0.01, 100].
    (0..points)
        .map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / (points - 1) as f64))
        .collect()
}

// ---------------------------------------------------------------------------
// Evaluation schedules
// ---------------------------------------------------------------------------

/// One scheduled performance evaluation: a delay after the previous
/// settlement event and the weight applied to the base function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    #[serde(rename = "dt")]
    pub delta: Timestamp,
    pub weight: Rate,
}

/// The ordered list of performance evaluations for a poll.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScheduleEntry>", into = "Vec<ScheduleEntry>")]
pub struct EvaluationSchedule {
    entries: Vec<ScheduleEntry>,
    weight_sum: Rate,
}

impl EvaluationSchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Result<Self, PefError> {
        if entries.is_empty() {
            return Err(PefError::InvalidFunction(
                "schedule must contain at least one evaluation".into(),
            ));
        }
        let mut weight_sum = Rate::ZERO;
        for entry in &entries {
            if !entry.weight.is_positive() {
                return Err(PefError::InvalidFunction(
                    "schedule weights must be positive".into(),
                ));
            }
            weight_sum = weight_sum
                .checked_add(entry.weight)
                .ok_or(PefError::Overflow)?;
        }
        Ok(EvaluationSchedule {
            entries,
            weight_sum,
        })
    }

    /// A single evaluation after `delta` with full weight.
    pub fn single(delta: Timestamp) -> Self {
        EvaluationSchedule::new(vec![ScheduleEntry {
            delta,
            weight: Rate::ONE,
        }])
        .expect("single entry is valid")
    }

    /// The halving schedule `w_i = 2^-i`: weight sums stay at most 1, so
    /// the pool for a single evaluation also covers the whole series.
    pub fn halving(evaluations: usize, delta: Timestamp) -> Result<Self, PefError> {
        if evaluations == 0 || evaluations > 64 {
            return Err(PefError::InvalidFunction(
                "halving schedule supports 1..=64 evaluations".into(),
            ));
        }
        let entries = (1..=evaluations as u32)
            .map(|i| ScheduleEntry {
                delta,
                weight: Rate::new(1, 1u128 << i).expect("positive denominator"),
            })
            .collect();
        EvaluationSchedule::new(entries)
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight_sum(&self) -> Rate {
        self.weight_sum
    }

    /// Weight of the 1-based evaluation `index`.
    pub fn weight(&self, index: usize) -> Result<Rate, PefError> {
        self.entries
            .get(index.checked_sub(1).ok_or(PefError::IndexOutOfRange {
                index,
                len: self.entries.len(),
            })?)
            .map(|e| e.weight)
            .ok_or(PefError::IndexOutOfRange {
                index,
                len: self.entries.len(),
            })
    }

    /// Whether this schedule can withhold anything for the given function.
    pub fn penalties_possible(&self, function: &PeFunction) -> bool {
        function.inf_rate().is_negative()
    }
}

impl TryFrom<Vec<ScheduleEntry>> for EvaluationSchedule {
    type Error = PefError;
    fn try_from(entries: Vec<ScheduleEntry>) -> Result<Self, Self::Error> {
        EvaluationSchedule::new(entries)
    }
}

impl From<EvaluationSchedule> for Vec<ScheduleEntry> {
    fn from(s: EvaluationSchedule) -> Self {
        s.entries
    }
}

/// The 1-based evaluation `index` of the schedule applied to `function`.
pub fn scheduled_pef(
    function: &PeFunction,
    index: usize,
    schedule: &EvaluationSchedule,
) -> Result<PeFunction, PefError> {
    function.scaled(schedule.weight(index)?)
}

/// Reward pool needed to cover every scheduled evaluation at the declared
/// submission limit: `ceil(weight_sum * sup * max_total)`, exactly.
pub fn required_pool(
    schedule: &EvaluationSchedule,
    function: &PeFunction,
    max_total_submissions: TokenAmount,
) -> Result<TokenAmount, PefError> {
    let rate = schedule
        .weight_sum()
        .checked_mul(function.sup_rate())
        .ok_or(PefError::Overflow)?
        .clamp_non_negative();
    rate.mul_amount_ceil(max_total_submissions)
        .ok_or(PefError::Overflow)
}

/// Stake fraction withheld at tallying to cover worst-case penalties:
/// `weight_sum * max(0, -inf)`, exactly. Zero for non-negative functions.
pub fn withhold_rate(schedule: &EvaluationSchedule, function: &PeFunction) -> Result<Rate, PefError> {
    schedule
        .weight_sum()
        .checked_mul((-function.inf_rate()).clamp_non_negative())
        .ok_or(PefError::Overflow)
}

/// Double view of [`withhold_rate`].
pub fn withhold_per_token(
    schedule: &EvaluationSchedule,
    function: &PeFunction,
) -> Result<SignedPerToken, PefError> {
    Ok(SignedPerToken::new(withhold_rate(schedule, function)?.to_f64())
        .expect("withhold rate is non-negative"))
}

/// Reward pool for round `index` (1-based) of a geometric funding series:
/// `floor(total * (1 - x) * x^(index-1))` in base units. Partial sums never
/// exhaust `total`.
pub fn geometric_pool(
    total: TokenAmount,
    ratio: f64,
    index: u32,
) -> Result<TokenAmount, PefError> {
    if !ratio.is_finite() || ratio <= 0.0 || ratio >= 1.0 {
        return Err(PefError::InvalidRatio);
    }
    if index == 0 {
        return Err(PefError::IndexOutOfRange { index: 0, len: 0 });
    }
    let mut factor = 1.0 - ratio;
    for _ in 1..index {
        factor *= ratio;
    }
    mul_f64_floor(total.base_units(), factor)
        .map(TokenAmount::from_base_units)
        .ok_or(PefError::Overflow)
}

// ---------------------------------------------------------------------------
// Arbitrage detection
// ---------------------------------------------------------------------------

/// A stake mix that locks in profit regardless of the outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArbitrageMix {
    /// Sentiment keys with their stake fractions (non-negative, sum 1).
    pub weights: Vec<(String, f64)>,
    /// Per-token profit guaranteed across every grid outcome.
    pub guaranteed_profit: f64,
}

/// Default outcome grid for arbitrage checks on continuous outcome sets:
/// 1001 log-spaced points over [1/100, 100].
pub fn default_continuous_grid() -> Vec<Outcome> {
    (0..=1000)
        .map(|k| Outcome::Continuous(10f64.powf(-2.0 + 4.0 * k as f64 / 1000.0)))
        .collect()
}

/// Default profit threshold separating arbitrage from floating-point noise.
pub fn default_epsilon(function: &PeFunction) -> f64 {
    1e-9 * function.sup_rate().to_f64().abs().max(f64::MIN_POSITIVE)
}

/// Search for a sentiment mix whose worst-case payoff across the outcome
/// grid exceeds `epsilon`. Solved as a small zero-sum matrix game.
pub fn detect_arbitrage(
    function: &PeFunction,
    sentiments: &[SentimentChoice],
    outcome_grid: &[Outcome],
    epsilon: f64,
) -> Result<Option<ArbitrageMix>, PefError> {
    if outcome_grid.is_empty() {
        return Err(PefError::EmptyGrid);
    }
    if sentiments.is_empty() {
        return Ok(None);
    }
    let payoffs: Vec<Vec<f64>> = sentiments
        .iter()
        .map(|s| {
            outcome_grid
                .iter()
                .map(|o| function.evaluate(o, s).map(|v| v.value()))
                .collect::<Result<Vec<f64>, PefError>>()
        })
        .collect::<Result<_, _>>()?;
    let solution = minimax::solve_zero_sum(&payoffs)?;
    if solution.value > epsilon {
        Ok(Some(ArbitrageMix {
            weights: sentiments
                .iter()
                .zip(&solution.strategy)
                .map(|(s, w)| (s.canonical_key(), *w))
                .collect(),
            guaranteed_profit: solution.value,
        }))
    } else {
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// Curve sampling
// ---------------------------------------------------------------------------

/// A normalized point on a payoff curve: `(outcome, f(o, s) / c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub outcome: f64,
    pub normalized: f64,
}

/// Sample `f(o, s) / c` over an ascending grid of positive ratios, suitable
/// for plotting the catalog curves.
pub fn curve_samples(
    function: &PeFunction,
    choice: &SentimentChoice,
    grid: &[f64],
) -> Result<Vec<CurveSample>, PefError> {
    if grid.is_empty()
        || grid.windows(2).any(|w| w[0] >= w[1])
        || grid.iter().any(|o| !o.is_finite() || *o <= 0.0)
    {
        return Err(PefError::BadGrid);
    }
    let normalizer = {
        let sup = function.sup_rate().to_f64();
        if sup != 0.0 {
            sup
        } else {
            1.0
        }
    };
    grid.iter()
        .map(|&o| {
            function
                .evaluate(&Outcome::Continuous(o), choice)
                .map(|v| CurveSample {
                    outcome: o,
                    normalized: v.value() / normalizer,
                })
        })
        .collect()
}

/// Render samples as CSV with the canonical header.
pub fn curve_csv(samples: &[CurveSample]) -> String {
    let mut out = String::from("outcome,normalized_value\n");
    for sample in samples {
        out.push_str(&format!("{},{}\n", sample.outcome, sample.normalized));
    }
    out
}

/// Parse a `start:stop:steps` grid specification into an ascending grid.
pub fn parse_grid_spec(spec: &str) -> Result<Vec<f64>, PefError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(PefError::BadGrid);
    }
    let start: f64 = parts[0].parse().map_err(|_| PefError::BadGrid)?;
    let stop: f64 = parts[1].parse().map_err(|_| PefError::BadGrid)?;
    let steps: usize = parts[2].parse().map_err(|_| PefError::BadGrid)?;
    if !(start.is_finite() && stop.is_finite()) || start <= 0.0 || stop <= start || steps < 2 {
        return Err(PefError::BadGrid);
    }
    Ok((0..steps)
        .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
        .collect())
}

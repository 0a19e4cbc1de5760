//! Shared primitive types: logical time, exact token amounts, outcomes and
//! sentiment choices.
//!
//! Everything that touches a balance is integer arithmetic on base units;
//! floating point only appears in per-token reward rates, never in ledger
//! state.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Seconds per day of logical time.
pub const SECONDS_PER_DAY: u64 = 86_400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("amount has more fractional digits than the token allows")]
    TooManyFractionalDigits,
    #[error("negative amounts are not representable")]
    NegativeAmount,
    #[error("malformed decimal amount `{0}`")]
    MalformedAmount(String),
    #[error("token amount overflow")]
    Overflow,
    #[error("per-token value must be finite and at least -1, got {0}")]
    BelowUnitLoss(f64),
    #[error("continuous outcomes must be positive and finite, got {0}")]
    NonPositiveOutcome(f64),
    #[error("interval bounds must satisfy 0 <= lo < hi and be finite")]
    BadInterval,
    #[error("discrete outcome sets must be non-empty with unique labels")]
    BadOutcomeSet,
}

// ---------------------------------------------------------------------------
// Logical time
// ---------------------------------------------------------------------------

/// Logical time: seconds since the scenario epoch.
///
/// There is no calendar here. Scenario definitions map real dates to epoch
/// offsets when they are written.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);
    pub const MAX: Timestamp = Timestamp(u64::MAX);

    pub const fn from_seconds(seconds: u64) -> Self {
        Timestamp(seconds)
    }

    pub const fn seconds(self) -> u64 {
        self.0
    }

    /// `self + delta`, saturating at the maximum representable instant.
    pub const fn saturating_add(self, delta: Timestamp) -> Timestamp {
        Timestamp(self.0.saturating_add(delta.0))
    }

    pub const fn saturating_sub(self, other: Timestamp) -> Timestamp {
        Timestamp(self.0.saturating_sub(other.0))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Saturating addition of two instants (the second acting as a delta).
pub fn saturating_time_add(t: Timestamp, delta: Timestamp) -> Timestamp {
    t.saturating_add(delta)
}

// ---------------------------------------------------------------------------
// Token amounts
// ---------------------------------------------------------------------------

/// An exact token amount in integer base units.
///
/// The number of decimals is a property of the token, not of the amount;
/// conversions to and from display strings take the token's `decimals`.
/// Overflow is always a hard error, never silent wraparound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenAmount(u128);

impl TokenAmount {
    pub const ZERO: TokenAmount = TokenAmount(0);
    pub const MAX: TokenAmount = TokenAmount(u128::MAX);

    pub const fn from_base_units(base_units: u128) -> Self {
        TokenAmount(base_units)
    }

    pub const fn base_units(self) -> u128 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, other: TokenAmount) -> Option<TokenAmount> {
        self.0.checked_add(other.0).map(TokenAmount)
    }

    pub fn checked_sub(self, other: TokenAmount) -> Option<TokenAmount> {
        self.0.checked_sub(other.0).map(TokenAmount)
    }

    /// Parse a non-negative decimal display string (`"100"`, `"0.25"`) into
    /// base units for a token with the given number of decimals.
    pub fn from_display(display: &str, decimals: u32) -> Result<TokenAmount, TypeError> {
        let s = display.trim();
        if s.starts_with('-') {
            return Err(TypeError::NegativeAmount);
        }
        if s.is_empty() || s == "." {
            return Err(TypeError::MalformedAmount(display.to_string()));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(TypeError::MalformedAmount(display.to_string()));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(TypeError::MalformedAmount(display.to_string()));
        }
        if frac_part.len() as u32 > decimals {
            // Trailing zeros beyond the token's precision are still exact.
            let (keep, rest) = frac_part.split_at(decimals as usize);
            if rest.bytes().any(|b| b != b'0') {
                return Err(TypeError::TooManyFractionalDigits);
            }
            return Self::from_display(&format!("{int_part}.{keep}"), decimals);
        }
        let scale = pow10_u128(decimals).ok_or(TypeError::Overflow)?;
        let int_units: u128 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| TypeError::Overflow)?
        };
        let mut frac_units: u128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| TypeError::Overflow)?
        };
        frac_units = frac_units
            .checked_mul(pow10_u128(decimals - frac_part.len() as u32).ok_or(TypeError::Overflow)?)
            .ok_or(TypeError::Overflow)?;
        int_units
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac_units))
            .map(TokenAmount)
            .ok_or(TypeError::Overflow)
    }

    /// Render as a normalized decimal display string: no trailing fractional
    /// zeros, `"0"` for zero. Round-trips exactly through `from_display`.
    pub fn to_display(self, decimals: u32) -> String {
        let scale = match pow10_u128(decimals) {
            Some(s) => s,
            None => return self.0.to_string(),
        };
        let int = self.0 / scale;
        let frac = self.0 % scale;
        if frac == 0 {
            int.to_string()
        } else {
            let digits = format!("{frac:0width$}", width = decimals as usize);
            format!("{int}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl fmt::Display for TokenAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// Base units serialize as decimal integer strings so that JSON round trips
// never touch floating point.
impl Serialize for TokenAmount {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for TokenAmount {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse::<u128>()
            .map(TokenAmount)
            .map_err(serde::de::Error::custom)
    }
}

/// Spec-level conversion: decimal display string to exact base units.
pub fn to_base_units(display: &str, decimals: u32) -> Result<TokenAmount, TypeError> {
    TokenAmount::from_display(display, decimals)
}

/// Spec-level conversion: base units back to a normalized display string.
pub fn from_base_units(amount: TokenAmount, decimals: u32) -> String {
    amount.to_display(decimals)
}

pub(crate) fn pow10_u128(exp: u32) -> Option<u128> {
    10u128.checked_pow(exp)
}

/// Render a signed base-unit delta as a display string.
pub fn signed_display(delta: i128, decimals: u32) -> String {
    if delta < 0 {
        format!(
            "-{}",
            TokenAmount::from_base_units(delta.unsigned_abs()).to_display(decimals)
        )
    } else {
        TokenAmount::from_base_units(delta as u128).to_display(decimals)
    }
}

// ---------------------------------------------------------------------------
// Per-token reward values
// ---------------------------------------------------------------------------

/// A reward or penalty per staked token, in `[-1, +inf)`.
///
/// A provider can lose at most the stake itself, so `-1` is the hard floor.
/// Carried as a double during evaluation; converted to base units only at
/// payout, where the rounding rules live in the engine.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedPerToken(f64);

impl SignedPerToken {
    pub const ZERO: SignedPerToken = SignedPerToken(0.0);

    pub fn new(value: f64) -> Result<Self, TypeError> {
        if !value.is_finite() || value < -1.0 {
            return Err(TypeError::BelowUnitLoss(value));
        }
        Ok(SignedPerToken(value))
    }

    pub const fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for SignedPerToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

/// A resolved poll outcome: a discrete label or a positive real (for example
/// a price ratio).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OutcomeRepr", into = "OutcomeRepr")]
pub enum Outcome {
    Discrete(String),
    Continuous(f64),
}

impl Outcome {
    pub fn discrete(label: impl Into<String>) -> Self {
        Outcome::Discrete(label.into())
    }

    pub fn continuous(value: f64) -> Result<Self, TypeError> {
        if !value.is_finite() || value <= 0.0 {
            return Err(TypeError::NonPositiveOutcome(value));
        }
        Ok(Outcome::Continuous(value))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Discrete(label) => write!(f, "{label}"),
            Outcome::Continuous(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(rename_all = "snake_case")]
enum OutcomeRepr {
    Discrete(String),
    // Continuous values travel as strings so JSON never re-rounds them.
    Continuous(String),
}

impl TryFrom<OutcomeRepr> for Outcome {
    type Error = TypeError;
    fn try_from(repr: OutcomeRepr) -> Result<Self, Self::Error> {
        match repr {
            OutcomeRepr::Discrete(label) => Ok(Outcome::Discrete(label)),
            OutcomeRepr::Continuous(s) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| TypeError::NonPositiveOutcome(f64::NAN))?;
                Outcome::continuous(v)
            }
        }
    }
}

impl From<Outcome> for OutcomeRepr {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Discrete(label) => OutcomeRepr::Discrete(label),
            Outcome::Continuous(v) => OutcomeRepr::Continuous(format!("{v}")),
        }
    }
}

/// The declared set of possible outcomes for a poll.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OutcomeSetRepr", into = "OutcomeSetRepr")]
pub enum OutcomeSet {
    Discrete(Vec<String>),
    /// All positive reals, e.g. a price ratio.
    ContinuousPositive,
}

impl OutcomeSet {
    pub fn discrete<I: IntoIterator<Item = S>, S: Into<String>>(
        labels: I,
    ) -> Result<Self, TypeError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = std::collections::BTreeSet::new();
        if labels.is_empty() || !labels.iter().all(|l| seen.insert(l.clone())) {
            return Err(TypeError::BadOutcomeSet);
        }
        Ok(OutcomeSet::Discrete(labels))
    }

    pub fn contains(&self, outcome: &Outcome) -> bool {
        match (self, outcome) {
            (OutcomeSet::Discrete(labels), Outcome::Discrete(l)) => labels.iter().any(|x| x == l),
            (OutcomeSet::ContinuousPositive, Outcome::Continuous(v)) => {
                v.is_finite() && *v > 0.0
            }
            _ => false,
        }
    }
}

#[derive(Serialize, Deserialize, Clone)]
struct OutcomeSetRepr {
    #[serde(skip_serializing_if = "Option::is_none")]
    discrete: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    continuous: Option<bool>,
}

impl TryFrom<OutcomeSetRepr> for OutcomeSet {
    type Error = TypeError;
    fn try_from(repr: OutcomeSetRepr) -> Result<Self, Self::Error> {
        match (repr.discrete, repr.continuous) {
            (Some(labels), None) => OutcomeSet::discrete(labels),
            (None, Some(true)) => Ok(OutcomeSet::ContinuousPositive),
            _ => Err(TypeError::BadOutcomeSet),
        }
    }
}

impl From<OutcomeSet> for OutcomeSetRepr {
    fn from(set: OutcomeSet) -> Self {
        match set {
            OutcomeSet::Discrete(labels) => OutcomeSetRepr {
                discrete: Some(labels),
                continuous: None,
            },
            OutcomeSet::ContinuousPositive => OutcomeSetRepr {
                discrete: None,
                continuous: Some(true),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Sentiment choices
// ---------------------------------------------------------------------------

/// A half-open or closed interval of positive reals, used as a sentiment over
/// a continuous outcome set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalChoice {
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
}

impl IntervalChoice {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self, TypeError> {
        if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo >= hi {
            return Err(TypeError::BadInterval);
        }
        Ok(IntervalChoice {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    pub fn key(&self) -> String {
        format!(
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' },
        )
    }
}

/// One sentiment a provider can stake on: a label from the poll's sentiment
/// set, or an interval subset of a continuous outcome set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SentimentRepr", into = "SentimentRepr")]
pub enum SentimentChoice {
    Label(String),
    Interval(IntervalChoice),
}

impl SentimentChoice {
    pub fn label(s: impl Into<String>) -> Self {
        SentimentChoice::Label(s.into())
    }

    /// Canonical string key used for tallying, reports and parsing.
    pub fn canonical_key(&self) -> String {
        match self {
            SentimentChoice::Label(l) => l.clone(),
            SentimentChoice::Interval(iv) => iv.key(),
        }
    }

    /// Unique byte encoding used for sealed-submission commitments.
    pub fn canonical_encoding(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            SentimentChoice::Label(l) => {
                out.extend_from_slice(b"L:");
                out.extend_from_slice(l.as_bytes());
            }
            SentimentChoice::Interval(iv) => {
                out.extend_from_slice(b"I:");
                out.extend_from_slice(iv.key().as_bytes());
            }
        }
        out
    }

    /// Parse a CLI-style key: `buy`, `D`, or `[1,2)`.
    pub fn parse_key(s: &str) -> Result<Self, TypeError> {
        let t = s.trim();
        let first = t.chars().next().ok_or(TypeError::BadInterval)?;
        if first == '[' || first == '(' {
            let last = t.chars().last().ok_or(TypeError::BadInterval)?;
            if last != ']' && last != ')' {
                return Err(TypeError::BadInterval);
            }
            let inner = &t[1..t.len() - 1];
            let (lo, hi) = inner.split_once(',').ok_or(TypeError::BadInterval)?;
            let lo: f64 = lo.trim().parse().map_err(|_| TypeError::BadInterval)?;
            let hi: f64 = hi.trim().parse().map_err(|_| TypeError::BadInterval)?;
            Ok(SentimentChoice::Interval(IntervalChoice::new(
                lo,
                hi,
                first == '[',
                last == ']',
            )?))
        } else {
            Ok(SentimentChoice::Label(t.to_string()))
        }
    }

    /// Whether this choice is structurally admissible for an outcome set.
    /// Labels are admitted everywhere (their meaning comes from the
    /// performance evaluation function); intervals require a continuous set.
    pub fn admissible_for(&self, outcomes: &OutcomeSet) -> bool {
        match self {
            SentimentChoice::Label(_) => true,
            SentimentChoice::Interval(_) => matches!(outcomes, OutcomeSet::ContinuousPositive),
        }
    }
}

impl fmt::Display for SentimentChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_key())
    }
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(untagged)]
enum SentimentRepr {
    Label(String),
    Interval { interval: IntervalReprInner },
}

#[derive(Serialize, Deserialize, Clone)]
struct IntervalReprInner {
    lo: String,
    hi: String,
    #[serde(default = "default_true")]
    lo_closed: bool,
    #[serde(default)]
    hi_closed: bool,
}

fn default_true() -> bool {
    true
}

impl TryFrom<SentimentRepr> for SentimentChoice {
    type Error = TypeError;
    fn try_from(repr: SentimentRepr) -> Result<Self, Self::Error> {
        match repr {
            SentimentRepr::Label(l) => Ok(SentimentChoice::Label(l)),
            SentimentRepr::Interval { interval } => {
                let lo: f64 = interval
                    .lo
                    .parse()
                    .map_err(|_| TypeError::BadInterval)?;
                let hi: f64 = interval
                    .hi
                    .parse()
                    .map_err(|_| TypeError::BadInterval)?;
                Ok(SentimentChoice::Interval(IntervalChoice::new(
                    lo,
                    hi,
                    interval.lo_closed,
                    interval.hi_closed,
                )?))
            }
        }
    }
}

impl From<SentimentChoice> for SentimentRepr {
    fn from(c: SentimentChoice) -> Self {
        match c {
            SentimentChoice::Label(l) => SentimentRepr::Label(l),
            SentimentChoice::Interval(iv) => SentimentRepr::Interval {
                interval: IntervalReprInner {
                    lo: format!("{}", iv.lo),
                    hi: format!("{}", iv.hi),
                    lo_closed: iv.lo_closed,
                    hi_closed: iv.hi_closed,
                },
            },
        }
    }
}

//! Exact per-token rates and wide-integer rounding.
//!
//! Reward-pool sizing and stake withholding are specified as exact `ceil`
//! operations; a rate that arrived as `"0.1"` must behave as exactly one
//! tenth there, not as the nearest double. [`Rate`] keeps such values as
//! reduced rationals. Payout conversion of evaluated (floating) per-token
//! values uses [`mul_f64_floor`], which floors `rate * amount` with exact
//! integer arithmetic on the float's mantissa rather than in floating point.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::types::TokenAmount;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RateError {
    #[error("malformed rate `{0}` (expected a decimal like `0.05` or a fraction like `1/9000`)")]
    Malformed(String),
    #[error("rate arithmetic overflow")]
    Overflow,
    #[error("division by zero rate")]
    DivisionByZero,
}

// ---------------------------------------------------------------------------
// 256-bit helpers
// ---------------------------------------------------------------------------

/// Full 256-bit product of two `u128`s as `(hi, lo)`.
pub fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = (1u128 << 64) - 1;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);

    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;

    let mid = (ll >> 64) + (lh & MASK) + (hl & MASK);
    let lo = (mid << 64) | (ll & MASK);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (hi, lo)
}

/// Divide the 256-bit value `(hi, lo)` by `divisor`, returning
/// `(quotient, remainder)`. `None` if the quotient does not fit in a `u128`
/// or the divisor is zero.
pub fn div_wide(hi: u128, lo: u128, divisor: u128) -> Option<(u128, u128)> {
    if divisor == 0 {
        return None;
    }
    if hi == 0 {
        return Some((lo / divisor, lo % divisor));
    }
    if hi >= divisor {
        // Quotient would need more than 128 bits.
        return None;
    }
    // Restoring long division, one bit of `lo` at a time. `rem` starts at
    // `hi` (< divisor) and the shifted value never exceeds 2*divisor - 1.
    let mut rem = hi;
    let mut quotient: u128 = 0;
    for i in (0..128).rev() {
        let carry = rem >> 127;
        rem = (rem << 1) | ((lo >> i) & 1);
        quotient <<= 1;
        if carry == 1 || rem >= divisor {
            rem = rem.wrapping_sub(divisor);
            quotient |= 1;
        }
    }
    Some((quotient, rem))
}

/// Exact `floor(amount * num / den)`.
pub fn mul_div_floor(amount: u128, num: u128, den: u128) -> Option<u128> {
    let (hi, lo) = mul_wide(amount, num);
    div_wide(hi, lo, den).map(|(q, _)| q)
}

/// Exact `ceil(amount * num / den)`.
pub fn mul_div_ceil(amount: u128, num: u128, den: u128) -> Option<u128> {
    let (hi, lo) = mul_wide(amount, num);
    let (q, r) = div_wide(hi, lo, den)?;
    if r == 0 {
        Some(q)
    } else {
        q.checked_add(1)
    }
}

/// Decompose a finite non-negative double into `(mantissa, exponent)` with
/// `value = mantissa * 2^exponent` exactly.
fn decompose(value: f64) -> (u128, i32) {
    debug_assert!(value.is_finite() && value >= 0.0);
    if value == 0.0 {
        return (0, 0);
    }
    let bits = value.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if raw_exp == 0 {
        (frac as u128, -1074)
    } else {
        ((frac | (1 << 52)) as u128, raw_exp - 1075)
    }
}

fn shifted(amount: u128, mantissa: u128, shift: u32, round_up: bool) -> Option<u128> {
    let (hi, lo) = mul_wide(amount, mantissa);
    let (q, discarded) = if shift >= 256 {
        (0u128, hi != 0 || lo != 0)
    } else if shift >= 128 {
        let s = shift - 128;
        let q = if s == 0 { hi } else { hi >> s };
        let dropped_hi = if s == 0 { 0 } else { hi & ((1u128 << s) - 1) };
        (q, dropped_hi != 0 || lo != 0)
    } else if shift == 0 {
        if hi != 0 {
            return None;
        }
        (lo, false)
    } else {
        if (hi >> shift) != 0 {
            return None;
        }
        let q = (hi << (128 - shift)) | (lo >> shift);
        (q, lo & ((1u128 << shift) - 1) != 0)
    };
    if round_up && discarded {
        q.checked_add(1)
    } else {
        Some(q)
    }
}

/// Mathematically exact `floor(rate * amount)` for a finite `rate >= 0`.
///
/// The double is treated as the exact rational it is; no floating-point
/// multiplication happens, so results near integers never wobble.
pub fn mul_f64_floor(amount: u128, rate: f64) -> Option<u128> {
    if !rate.is_finite() || rate < 0.0 {
        return None;
    }
    let (mantissa, exp) = decompose(rate);
    if exp >= 0 {
        let scaled = mantissa.checked_shl(exp as u32)?;
        return amount.checked_mul(scaled);
    }
    shifted(amount, mantissa, (-exp) as u32, false)
}

/// Mathematically exact `ceil(rate * amount)` for a finite `rate >= 0`.
pub fn mul_f64_ceil(amount: u128, rate: f64) -> Option<u128> {
    if !rate.is_finite() || rate < 0.0 {
        return None;
    }
    let (mantissa, exp) = decompose(rate);
    if exp >= 0 {
        let scaled = mantissa.checked_shl(exp as u32)?;
        return amount.checked_mul(scaled);
    }
    shifted(amount, mantissa, (-exp) as u32, true)
}

// ---------------------------------------------------------------------------
// Exact rational rates
// ---------------------------------------------------------------------------

/// An exact per-token rate, stored as a reduced fraction.
///
/// Parses from decimal strings (`"0.05"`) or fraction strings
/// (`"1000/9000000"`), so repeating decimals stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rate {
    num: i128,
    den: u128,
}

impl Rate {
    pub const ZERO: Rate = Rate { num: 0, den: 1 };
    pub const ONE: Rate = Rate { num: 1, den: 1 };

    pub fn new(num: i128, den: u128) -> Result<Self, RateError> {
        if den == 0 {
            return Err(RateError::DivisionByZero);
        }
        Ok(Rate { num, den }.reduced())
    }

    pub fn from_integer(n: i128) -> Self {
        Rate { num: n, den: 1 }
    }

    fn reduced(self) -> Self {
        if self.num == 0 {
            return Rate::ZERO;
        }
        let g = gcd(self.num.unsigned_abs(), self.den);
        Rate {
            num: self.num / g as i128,
            den: self.den / g,
        }
    }

    pub fn numerator(self) -> i128 {
        self.num
    }

    pub fn denominator(self) -> u128 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }

    pub fn is_positive(self) -> bool {
        self.num > 0
    }

    pub fn abs(self) -> Self {
        Rate {
            num: self.num.abs(),
            den: self.den,
        }
    }

    /// `max(0, self)`.
    pub fn clamp_non_negative(self) -> Self {
        if self.num < 0 {
            Rate::ZERO
        } else {
            self
        }
    }

    pub fn checked_add(self, other: Rate) -> Option<Rate> {
        let den = self.den.checked_mul(other.den)?;
        let left = self.num.checked_mul(other.den as i128)?;
        let right = other.num.checked_mul(self.den as i128)?;
        Some(
            Rate {
                num: left.checked_add(right)?,
                den,
            }
            .reduced(),
        )
    }

    pub fn checked_sub(self, other: Rate) -> Option<Rate> {
        self.checked_add(-other)
    }

    pub fn checked_mul(self, other: Rate) -> Option<Rate> {
        // Cross-reduce first to keep magnitudes small.
        let g1 = gcd(self.num.unsigned_abs(), other.den);
        let g2 = gcd(other.num.unsigned_abs(), self.den);
        let num = (self.num / g1 as i128).checked_mul(other.num / g2 as i128)?;
        let den = (self.den / g2).checked_mul(other.den / g1)?;
        Some(Rate { num, den }.reduced())
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact `floor(self * amount)` in base units; requires `self >= 0`.
    pub fn mul_amount_floor(self, amount: TokenAmount) -> Option<TokenAmount> {
        if self.num < 0 {
            return None;
        }
        mul_div_floor(amount.base_units(), self.num as u128, self.den)
            .map(TokenAmount::from_base_units)
    }

    /// Exact `ceil(self * amount)` in base units; requires `self >= 0`.
    pub fn mul_amount_ceil(self, amount: TokenAmount) -> Option<TokenAmount> {
        if self.num < 0 {
            return None;
        }
        mul_div_ceil(amount.base_units(), self.num as u128, self.den)
            .map(TokenAmount::from_base_units)
    }

    /// Exact `floor(amount / self)` in base units; requires `self > 0`.
    pub fn div_amount_floor(self, amount: TokenAmount) -> Option<TokenAmount> {
        if self.num <= 0 {
            return None;
        }
        mul_div_floor(amount.base_units(), self.den, self.num as u128)
            .map(TokenAmount::from_base_units)
    }
}

impl std::ops::Neg for Rate {
    type Output = Rate;

    fn neg(self) -> Rate {
        Rate {
            num: -self.num,
            den: self.den,
        }
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.num.signum(), other.num.signum()) {
            (a, b) if a != b => a.cmp(&b),
            (0, 0) => Ordering::Equal,
            (sign, _) => {
                // Compare |a.num| * b.den against |b.num| * a.den exactly.
                let left = mul_wide(self.num.unsigned_abs(), other.den);
                let right = mul_wide(other.num.unsigned_abs(), self.den);
                let mag = left.cmp(&right);
                if sign > 0 {
                    mag
                } else {
                    mag.reverse()
                }
            }
        }
    }
}

impl FromStr for Rate {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let malformed = || RateError::Malformed(s.to_string());
        if let Some((num, den)) = t.split_once('/') {
            let num: i128 = num.trim().parse().map_err(|_| malformed())?;
            let den: u128 = den.trim().parse().map_err(|_| malformed())?;
            return Rate::new(num, den);
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        if body.is_empty() || body == "." {
            return Err(malformed());
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || (int_part.is_empty() && frac_part.is_empty())
        {
            return Err(malformed());
        }
        if frac_part.len() > 38 {
            return Err(malformed());
        }
        let den = 10u128
            .checked_pow(frac_part.len() as u32)
            .ok_or(RateError::Overflow)?;
        let int: i128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| RateError::Overflow)?
        };
        let frac: i128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| RateError::Overflow)?
        };
        let num = int
            .checked_mul(den as i128)
            .and_then(|v| v.checked_add(frac))
            .ok_or(RateError::Overflow)?;
        Rate::new(if neg { -num } else { num }, den)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            return write!(f, "{}", self.num);
        }
        // Prefer a finite decimal rendering when the denominator allows one.
        if let Some(s) = decimal_string(self.num, self.den) {
            write!(f, "{s}")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl TryFrom<String> for Rate {
    type Error = RateError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rate> for String {
    fn from(r: Rate) -> String {
        r.to_string()
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    if a == 0 {
        1
    } else {
        a
    }
}

/// Finite decimal rendering of `num/den`, when `den` divides a power of ten.
fn decimal_string(num: i128, den: u128) -> Option<String> {
    let mut twos = 0u32;
    let mut fives = 0u32;
    let mut d = den;
    while d.is_multiple_of(2) {
        d /= 2;
        twos += 1;
    }
    while d.is_multiple_of(5) {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return None;
    }
    let digits = twos.max(fives);
    let scale_up = 10u128.checked_pow(digits)?.checked_div(den)?;
    let scaled = num.unsigned_abs().checked_mul(scale_up)?;
    let pow = 10u128.checked_pow(digits)?;
    let int = scaled / pow;
    let frac = scaled % pow;
    let sign = if num < 0 { "-" } else { "" };
    if frac == 0 {
        Some(format!("{sign}{int}"))
    } else {
        let frac_str = format!("{frac:0width$}", width = digits as usize);
        Some(format!("{sign}{int}.{}", frac_str.trim_end_matches('0')))
    }
}

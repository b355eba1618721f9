//! Exact money in integer minor units, plus the rational helpers used wherever
//! an amount has to be split by a ratio.
//!
//! Nothing here ever touches floating point. Ratios are carried as
//! [`Rational`] and only become [`Money`] at an explicit rounding point:
//! either [`Money::from_ratio_half_up`] for a single value or
//! [`largest_remainder`] when a fixed total must be split exactly.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational used for fair-value ratios, tie fractions and weights.
pub type Rational = Ratio<i128>;

/// Number of minor units in one major unit for the default currency scale.
pub const CENTS_PER_UNIT: i64 = 100;

/// A signed amount of money counted in minor units (cents).
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_minor(minor: i64) -> Self {
        Money(minor)
    }

    /// Whole major units, e.g. `Money::from_major(13)` is $13.00.
    pub const fn from_major(major: i64) -> Self {
        Money(major * CENTS_PER_UNIT)
    }

    pub const fn minor(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn max(self, other: Money) -> Money {
        Money(self.0.max(other.0))
    }

    pub fn min(self, other: Money) -> Money {
        Money(self.0.min(other.0))
    }

    /// `max(0, self)`.
    pub fn positive_part(self) -> Money {
        self.max(Money::ZERO)
    }

    pub fn to_ratio(self) -> Rational {
        Rational::from_integer(self.0 as i128)
    }

    /// Rounds a rational number of minor units to the nearest unit, with
    /// exact halves going toward positive infinity.
    pub fn from_ratio_half_up(value: Rational) -> Money {
        let shifted = value + Rational::new(1, 2);
        Money(narrow(shifted.floor().to_integer()))
    }

    /// Rounds a rational number of minor units toward negative infinity.
    pub fn from_ratio_floor(value: Rational) -> Money {
        Money(narrow(value.floor().to_integer()))
    }

    /// `self × ratio`, exact, as a rational number of minor units.
    pub fn scale(self, ratio: Rational) -> Rational {
        self.to_ratio() * ratio
    }

    /// `self × ratio` rounded half-up to a whole minor unit.
    pub fn mul_ratio_half_up(self, ratio: Rational) -> Money {
        Money::from_ratio_half_up(self.scale(ratio))
    }
}

fn narrow(value: i128) -> i64 {
    i64::try_from(value).expect("money amount exceeds 64-bit minor units")
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let unit = CENTS_PER_UNIT as u64;
        write!(f, "{sign}${}.{:02}", abs / unit, abs % unit)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Mul<i64> for Money {
    type Output = Money;
    fn mul(self, rhs: i64) -> Money {
        Money(self.0 * rhs)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

/// Splits `target` into whole minor units following the exact (non-negative)
/// rational amounts in `exact`.
///
/// Every entry first receives the floor of its exact amount; the units still
/// missing to reach `target` go one each to the entries with the largest
/// fractional parts. Equal fractional parts are resolved by position, so the
/// caller decides the tie order by how it arranges `exact`.
///
/// `target` must lie between the sum of the floors and the sum of the
/// ceilings, which holds whenever it is the rounded or exact sum of `exact`.
pub fn largest_remainder(target: Money, exact: &[Rational]) -> Vec<Money> {
    if exact.is_empty() {
        assert_eq!(target, Money::ZERO, "cannot allocate money to nobody");
        return Vec::new();
    }
    let floors: Vec<Money> = exact.iter().map(|x| Money::from_ratio_floor(*x)).collect();
    let floor_total: Money = floors.iter().sum();
    let missing = (target - floor_total).minor();
    assert!(
        missing >= 0 && missing as usize <= exact.len(),
        "largest-remainder target {target} is outside the rounding envelope"
    );

    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.cmp(&fa).then(a.cmp(&b))
    });

    let mut out = floors;
    for &i in order.iter().take(missing as usize) {
        out[i] += Money::from_minor(1);
    }
    out
}

/// Splits `total` proportionally to `weights` with largest-remainder cents.
///
/// Weights must be non-negative. If they are all zero the split is equal.
pub fn apportion(total: Money, weights: &[Rational]) -> Vec<Money> {
    if weights.is_empty() {
        return Vec::new();
    }
    debug_assert!(weights.iter().all(|w| !w.is_negative()));
    let sum: Rational = weights.iter().sum();
    let exact: Vec<Rational> = if sum.is_zero() {
        let each = Rational::new(1, weights.len() as i128);
        weights.iter().map(|_| total.scale(each)).collect()
    } else {
        weights.iter().map(|w| total.scale(w / sum)).collect()
    };
    largest_remainder(total, &exact)
}

/// Parses `"p/q"`, `"p"` or a decimal such as `"1.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i128 = num.trim().parse().ok()?;
        let den: i128 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return None;
        }
        let negative = whole.starts_with('-');
        let whole: i128 = if whole.is_empty() || whole == "-" {
            0
        } else {
            whole.parse().ok()?
        };
        let scale = 10_i128.pow(frac.len() as u32);
        let frac: i128 = frac.parse().ok()?;
        let magnitude = whole.abs() * scale + frac;
        let signed = if negative { -magnitude } else { magnitude };
        return Some(Rational::new(signed, scale));
    }
    text.parse::<i128>().ok().map(Rational::from_integer)
}

/// Canonical `"p/q"` text for a rational (`"p"` when integral).
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Serde adapter that writes rationals as canonical `"p/q"` strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_rational(&text).ok_or_else(|| D::Error::custom(format!("invalid rational `{text}`")))
    }
}

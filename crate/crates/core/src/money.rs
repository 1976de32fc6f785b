//! Exact cent-precision money.
//!
//! Every [`Money`] value carries its currency and an amount held at scale 2.
//! Products with real-valued factors are rounded half-even exactly once, by
//! [`Money::round_half_even`], after the full product has been formed.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::number::{format_grouped, parse_decimal, NumberError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoneyError {
    #[error("currency mismatch: {left} vs {right}")]
    CurrencyMismatch { left: Currency, right: Currency },
    #[error("invalid currency code {0:?}: expected three ASCII letters")]
    InvalidCurrency(String),
    #[error("invalid amount: {0}")]
    InvalidAmount(#[from] NumberError),
    #[error("amount overflow")]
    Overflow,
}

/// ISO-4217 style three-letter code, stored uppercase.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Currency([u8; 3]);

impl Currency {
    pub const EUR: Currency = Currency(*b"EUR");

    pub fn new(code: &str) -> Result<Self, MoneyError> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_alphabetic) {
            return Err(MoneyError::InvalidCurrency(code.to_string()));
        }
        let mut out = [0u8; 3];
        for (o, b) in out.iter_mut().zip(bytes) {
            *o = b.to_ascii_uppercase();
        }
        Ok(Currency(out))
    }

    pub fn as_str(&self) -> &str {
        // Constructed only from ASCII letters.
        std::str::from_utf8(&self.0).unwrap_or("???")
    }
}

impl fmt::Debug for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Currency({})", self.as_str())
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Currency {
    type Err = MoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Currency::new(s)
    }
}

impl Serialize for Currency {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Money {
    amount: Decimal,
    currency: Currency,
}

impl Money {
    fn make(mut amount: Decimal, currency: Currency) -> Self {
        if amount.is_zero() {
            amount.set_sign_positive(true);
        }
        amount.rescale(2);
        Money { amount, currency }
    }

    pub fn zero(currency: Currency) -> Self {
        Money::from_cents(0, currency)
    }

    pub fn from_cents(cents: i64, currency: Currency) -> Self {
        Money {
            amount: Decimal::new(cents, 2),
            currency,
        }
    }

    /// Exact construction; fails when `amount` has sub-cent digits.
    pub fn from_decimal(amount: Decimal, currency: Currency) -> Result<Self, MoneyError> {
        if amount.round_dp(2) != amount {
            return Err(MoneyError::InvalidAmount(NumberError {
                column: 1,
                reason: format!("{amount} has sub-cent digits"),
            }));
        }
        Ok(Money::make(amount, currency))
    }

    /// Rounds an arbitrary-precision product half-even to cents.
    pub fn round_half_even(value: Decimal, currency: Currency) -> Self {
        Money::make(
            value.round_dp_with_strategy(2, RoundingStrategy::MidpointNearestEven),
            currency,
        )
    }

    /// Rounds toward positive infinity at cent precision.
    pub fn round_up(value: Decimal, currency: Currency) -> Self {
        Money::make(
            value.round_dp_with_strategy(2, RoundingStrategy::ToPositiveInfinity),
            currency,
        )
    }

    /// Parses dot-decimal text with at most two fraction digits.
    pub fn parse(text: &str, currency: Currency) -> Result<Self, MoneyError> {
        let amount = parse_decimal(text, Some(2))?;
        Money::from_decimal(amount, currency)
    }

    pub fn amount(&self) -> Decimal {
        self.amount
    }

    pub fn currency(&self) -> Currency {
        self.currency
    }

    pub fn cents(&self) -> i128 {
        self.amount.mantissa()
    }

    pub fn from_cents_i128(cents: i128, currency: Currency) -> Result<Self, MoneyError> {
        Decimal::try_from_i128_with_scale(cents, 2)
            .map(|amount| Money::make(amount, currency))
            .map_err(|_| MoneyError::Overflow)
    }

    pub fn is_zero(&self) -> bool {
        self.amount.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.amount.is_sign_negative() && !self.amount.is_zero()
    }

    pub fn ensure_same_currency(&self, other: &Money) -> Result<(), MoneyError> {
        if self.currency == other.currency {
            Ok(())
        } else {
            Err(MoneyError::CurrencyMismatch {
                left: self.currency,
                right: other.currency,
            })
        }
    }

    pub fn checked_add(self, other: Money) -> Result<Money, MoneyError> {
        self.ensure_same_currency(&other)?;
        let amount = self
            .amount
            .checked_add(other.amount)
            .ok_or(MoneyError::Overflow)?;
        Ok(Money::make(amount, self.currency))
    }

    pub fn checked_sub(self, other: Money) -> Result<Money, MoneyError> {
        self.checked_add(-other)
    }

    pub fn checked_cmp(&self, other: &Money) -> Result<Ordering, MoneyError> {
        self.ensure_same_currency(other)?;
        Ok(self.amount.cmp(&other.amount))
    }

    /// Sums in one currency; an empty iterator yields zero.
    pub fn try_sum<I>(iter: I, currency: Currency) -> Result<Money, MoneyError>
    where
        I: IntoIterator<Item = Money>,
    {
        iter.into_iter()
            .try_fold(Money::zero(currency), |acc, m| acc.checked_add(m))
    }

    pub fn max(self, other: Money) -> Money {
        if other.amount > self.amount {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Money) -> Money {
        if other.amount < self.amount {
            other
        } else {
            self
        }
    }

    /// `13'080.00`
    pub fn grouped(&self) -> String {
        format_grouped(self.amount, 2, false)
    }

    /// `6'520`, or `1'234.50` when cents are present.
    pub fn grouped_compact(&self) -> String {
        format_grouped(self.amount, 2, true)
    }
}

/// Amounts in different currencies are unordered.
impl PartialOrd for Money {
    fn partial_cmp(&self, other: &Money) -> Option<Ordering> {
        (self.currency == other.currency).then(|| self.amount.cmp(&other.amount))
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.amount, self.currency)
    }
}

/// Plain amount without grouping or currency, e.g. `13080.00`.
impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.amount)
    }
}

/// Machine formats carry money as an ungrouped decimal string.
impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.amount.to_string())
    }
}

impl Neg for Money {
    type Output = Money;

    fn neg(self) -> Money {
        Money::make(-self.amount, self.currency)
    }
}

/// Panics on currency mismatch; use [`Money::checked_add`] at trust boundaries.
impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        self.checked_add(rhs).expect("money addition")
    }
}

/// Panics on currency mismatch; use [`Money::checked_sub`] at trust boundaries.
impl Sub for Money {
    type Output = Money;

    fn sub(self, rhs: Money) -> Money {
        self.checked_sub(rhs).expect("money subtraction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal_macros::dec;

    fn eur(text: &str) -> Money {
        Money::parse(text, Currency::EUR).unwrap()
    }

    #[test]
    fn tenths_sum_exactly() {
        assert_eq!(eur("0.10") + eur("0.20"), eur("0.30"));
    }

    #[test]
    fn half_even_rounding() {
        let c = Currency::EUR;
        assert_eq!(Money::round_half_even(dec!(0.005), c), eur("0.00"));
        assert_eq!(Money::round_half_even(dec!(0.015), c), eur("0.02"));
        assert_eq!(Money::round_half_even(dec!(0.025), c), eur("0.02"));
        assert_eq!(Money::round_half_even(dec!(-0.015), c), eur("-0.02"));
        assert_eq!(Money::round_up(dec!(0.001), c), eur("0.01"));
    }

    #[test]
    fn currency_mismatch_rejected() {
        let chf = Money::parse("1.00", Currency::new("chf").unwrap()).unwrap();
        assert!(matches!(
            eur("1.00").checked_add(chf),
            Err(MoneyError::CurrencyMismatch { .. })
        ));
        assert!(eur("1.00").checked_cmp(&chf).is_err());
    }

    #[test]
    fn sub_cent_and_locale_input_rejected() {
        assert!(Money::parse("1.005", Currency::EUR).is_err());
        assert!(Money::parse("50,00", Currency::EUR).is_err());
        assert!(Money::from_decimal(dec!(0.001), Currency::EUR).is_err());
    }

    #[test]
    fn currency_codes() {
        assert_eq!(Currency::new("eur").unwrap(), Currency::EUR);
        assert!(Currency::new("EURO").is_err());
        assert!(Currency::new("E1R").is_err());
    }

    #[test]
    fn serializes_as_plain_string() {
        assert_eq!(serde_json::to_string(&eur("13080")).unwrap(), "\"13080.00\"");
        assert_eq!(eur("13080").grouped(), "13'080.00");
        assert_eq!(eur("6520").grouped_compact(), "6'520");
    }

    #[test]
    fn cents_roundtrip() {
        let m = eur("-12.34");
        assert_eq!(m.cents(), -1234);
        assert_eq!(Money::from_cents_i128(-1234, Currency::EUR).unwrap(), m);
    }
}

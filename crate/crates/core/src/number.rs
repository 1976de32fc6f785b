//! Strict dot-decimal text handling shared by every input surface.
//!
//! Locale-dependent forms (`50,00`), exponents, underscores and grouping
//! separators are rejected. Values never pass through binary floating point.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberError {
    /// 1-based character position of the offending character in the input.
    pub column: usize,
    pub reason: String,
}

impl fmt::Display for NumberError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.reason, self.column)
    }
}

impl std::error::Error for NumberError {}

/// Parses `[-]digits[.digits]`, optionally bounding the number of fraction digits.
pub fn parse_decimal(text: &str, max_fraction_digits: Option<u32>) -> Result<Decimal, NumberError> {
    let leading = text.len() - text.trim_start().len();
    let body = text.trim();
    let err = |offset: usize, reason: &str| NumberError {
        column: leading + offset + 1,
        reason: reason.to_string(),
    };
    if body.is_empty() {
        return Err(err(0, "empty number"));
    }

    let bytes = body.as_bytes();
    let mut pos = 0;
    if bytes[0] == b'-' {
        pos = 1;
    }
    let int_start = pos;
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        pos += 1;
    }
    if pos == int_start {
        return Err(err(pos, "expected a digit"));
    }
    let mut fraction_digits = 0u32;
    if pos < bytes.len() && bytes[pos] == b'.' {
        pos += 1;
        let frac_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == frac_start {
            return Err(err(pos, "expected a digit after the decimal point"));
        }
        fraction_digits = (pos - frac_start) as u32;
    }
    if pos < bytes.len() {
        let ch = body[pos..].chars().next().unwrap_or('?');
        let reason = if ch == ',' {
            "comma is not a decimal separator; use '.'".to_string()
        } else {
            format!("unexpected character '{ch}'")
        };
        return Err(err(body[..pos].chars().count(), &reason));
    }
    if let Some(max) = max_fraction_digits {
        if fraction_digits > max {
            return Err(err(0, &format!("at most {max} fraction digits allowed")));
        }
    }
    Decimal::from_str(body).map_err(|_| err(0, "number out of range"))
}

/// Formats with `'` as thousands separator, e.g. `13'080.00`.
///
/// With `whole_when_exact`, amounts without cents drop the fraction (`6'520`).
pub fn format_grouped(value: Decimal, scale: u32, whole_when_exact: bool) -> String {
    let mut v = value.round_dp(scale);
    if whole_when_exact && v.fract().is_zero() {
        v = v.trunc();
        v.rescale(0);
    } else {
        v.rescale(scale);
    }
    let text = v.abs().to_string();
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i.to_string(), Some(f.to_string())),
        None => (text, None),
    };
    let mut grouped = String::new();
    for (i, ch) in int_part.chars().enumerate() {
        if i > 0 && (int_part.len() - i) % 3 == 0 {
            grouped.push('\'');
        }
        grouped.push(ch);
    }
    let sign = if v.is_sign_negative() && !v.is_zero() { "-" } else { "" };
    match frac_part {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}

/// Plain canonical text for a non-monetary decimal: no trailing zeros.
pub fn canonical_text(value: Decimal) -> String {
    value.normalize().to_string()
}

/// A decimal read from JSON as a string (`"0.8"`) or a number (`0.8`).
///
/// Numbers are re-read through their shortest textual form, so `0.7` stays `0.7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecimalText(pub Decimal);

/// A monetary amount read from JSON; at most two fraction digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmountText(pub Decimal);

struct DecimalVisitor {
    max_fraction_digits: Option<u32>,
}

impl Visitor<'_> for DecimalVisitor {
    type Value = Decimal;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a dot-decimal number or string")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
        parse_decimal(v, self.max_fraction_digits)
            .map_err(|e| E::custom(format!("invalid number {v:?}: {e}")))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
        Ok(Decimal::from(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
        Ok(Decimal::from(v))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
        if !v.is_finite() {
            return Err(E::custom("non-finite number"));
        }
        self.visit_str(&v.to_string())
    }
}

impl<'de> Deserialize<'de> for DecimalText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(DecimalVisitor {
            max_fraction_digits: None,
        })
        .map(DecimalText)
    }
}

impl Serialize for DecimalText {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&canonical_text(self.0))
    }
}

impl<'de> Deserialize<'de> for AmountText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(DecimalVisitor {
            max_fraction_digits: Some(2),
        })
        .map(AmountText)
    }
}

impl Serialize for AmountText {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut v = self.0;
        v.rescale(2);
        s.serialize_str(&v.to_string())
    }
}

/// Serializes a decimal as canonical text; for use with `serialize_with`.
pub fn serialize_decimal<S: Serializer>(value: &Decimal, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&canonical_text(*value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal_macros::dec;

    #[test]
    fn accepts_plain_forms() {
        assert_eq!(parse_decimal("50", Some(2)).unwrap(), dec!(50));
        assert_eq!(parse_decimal("50.00", Some(2)).unwrap(), dec!(50.00));
        assert_eq!(parse_decimal("-0.5", None).unwrap(), dec!(-0.5));
        assert_eq!(parse_decimal(" 12.5 ", None).unwrap(), dec!(12.5));
    }

    #[test]
    fn rejects_comma_decimal_with_column() {
        let e = parse_decimal("50,00", Some(2)).unwrap_err();
        assert_eq!(e.column, 3);
        assert!(e.reason.contains("comma"));
    }

    #[test]
    fn rejects_exotic_forms() {
        for bad in ["1e3", "1_000", "1'000", ".5", "5.", "+5", "", "abc", "--1"] {
            assert!(parse_decimal(bad, None).is_err(), "{bad} accepted");
        }
        assert!(parse_decimal("1.005", Some(2)).is_err());
    }

    #[test]
    fn grouping() {
        assert_eq!(format_grouped(dec!(13080), 2, false), "13'080.00");
        assert_eq!(format_grouped(dec!(6520.00), 2, true), "6'520");
        assert_eq!(format_grouped(dec!(500), 2, true), "500");
        assert_eq!(format_grouped(dec!(1234.5), 2, true), "1'234.50");
        assert_eq!(format_grouped(dec!(-1234567.891), 2, false), "-1'234'567.89");
        assert_eq!(format_grouped(dec!(0), 2, false), "0.00");
    }

    #[test]
    fn json_number_or_string() {
        let a: DecimalText = serde_json::from_str("0.7").unwrap();
        let b: DecimalText = serde_json::from_str("\"0.7\"").unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<AmountText>("\"50,00\"").is_err());
        assert_eq!(
            serde_json::to_string(&AmountText(dec!(50))).unwrap(),
            "\"50.00\""
        );
    }
}

use serde::de::DeserializeOwned;

use crate::domain::Portfolio;
use crate::io::ParseError;
use crate::validate::{validate_portfolio, RawPortfolio};

/// Deserializes any JSON document, reporting failures as positioned syntax
/// errors.
pub fn from_json_slice<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ParseError> {
    serde_json::from_slice(bytes).map_err(|e| ParseError::SyntaxError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_raw_json(bytes: &[u8]) -> Result<RawPortfolio, ParseError> {
    from_json_slice(bytes)
}

pub fn parse_json(bytes: &[u8]) -> Result<Portfolio, ParseError> {
    let raw = parse_raw_json(bytes)?;
    validate_portfolio(&raw).map_err(|errors| ParseError::ValidationFailed { errors })
}

/// Pretty-printed canonical document with a trailing newline.
pub fn to_canonical_json(p: &Portfolio) -> String {
    let mut out = serde_json::to_string_pretty(&p.to_raw()).expect("raw portfolio serializes");
    out.push('\n');
    out
}

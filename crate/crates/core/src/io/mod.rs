//! File formats: canonical JSON and CSV portfolios, report rendering, and the
//! file-backed scenario archive.

pub mod archive;
pub mod csv;
pub mod json;
pub mod render;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::domain::Portfolio;
use crate::validate::ValidationError;

pub use self::archive::{ArchiveError, ScenarioArchive, StoredPortfolio};
pub use self::csv::CsvContext;
pub use self::render::{render_report, ReportFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Json,
    Csv,
}

impl InputFormat {
    /// `.csv` files are CSV; everything else is read as JSON.
    pub fn from_path(path: &str) -> InputFormat {
        if path.to_ascii_lowercase().ends_with(".csv") {
            InputFormat::Csv
        } else {
            InputFormat::Json
        }
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(InputFormat::Json),
            "csv" => Ok(InputFormat::Csv),
            other => Err(format!("unknown input format {other:?}; expected json or csv")),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Json => "json",
            InputFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "code")]
pub enum ParseError {
    /// `column` is a character column for JSON and a 1-based field number for CSV.
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("portfolio failed validation with {} error(s)", errors.len())]
    ValidationFailed { errors: Vec<ValidationError> },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::SyntaxError { .. } => "SyntaxError",
            ParseError::ValidationFailed { .. } => "ValidationFailed",
        }
    }

    /// One human-readable line per problem.
    pub fn lines(&self) -> Vec<String> {
        match self {
            ParseError::SyntaxError { .. } => vec![self.to_string()],
            ParseError::ValidationFailed { errors } => {
                errors.iter().map(ToString::to_string).collect()
            }
        }
    }
}

/// Parses and validates a portfolio. CSV input uses an inferred context
/// (see [`CsvContext::inferred`]).
pub fn parse_portfolio(bytes: &[u8], format: InputFormat) -> Result<Portfolio, ParseError> {
    match format {
        InputFormat::Json => json::parse_json(bytes),
        InputFormat::Csv => csv::parse_csv(bytes, &CsvContext::inferred()),
    }
}

/// Canonical serialization in the given format.
pub fn write_portfolio(p: &Portfolio, format: InputFormat) -> String {
    match format {
        InputFormat::Json => json::to_canonical_json(p),
        InputFormat::Csv => csv::to_csv(p),
    }
}

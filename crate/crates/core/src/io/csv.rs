//! One row per impact line:
//! `pain_id,kind,description,agent,frequency_per_year,impact,alleviation,note`.
//!
//! Portfolio-level metadata (id, currency, agents, cost model, pricing) does
//! not fit the row layout and comes from a [`CsvContext`].

use std::collections::HashMap;

use crate::domain::{PainKind, Portfolio, Side};
use crate::io::ParseError;
use crate::number::{canonical_text, parse_decimal, AmountText, DecimalText};
use crate::validate::{validate_portfolio, RawAgent, RawLine, RawPain, RawPortfolio};

pub const COLUMNS: [&str; 8] = [
    "pain_id",
    "kind",
    "description",
    "agent",
    "frequency_per_year",
    "impact",
    "alleviation",
    "note",
];

/// Metadata applied to CSV rows. Empty `agents` means "infer from the rows".
#[derive(Debug, Clone, PartialEq)]
pub struct CsvContext {
    template: RawPortfolio,
}

impl CsvContext {
    /// Id `portfolio`, EUR, default pricing, no cost model. Agents are taken
    /// from the rows in order of first appearance, all beneficiaries; an id
    /// starting with `provider` is placed on the provider side.
    pub fn inferred() -> Self {
        CsvContext {
            template: RawPortfolio {
                id: "portfolio".into(),
                currency: "EUR".into(),
                agents: Vec::new(),
                pains: Vec::new(),
                cost_model: None,
                pricing: None,
            },
        }
    }

    /// Metadata copied from an existing portfolio.
    pub fn from_portfolio(p: &Portfolio) -> Self {
        let mut template = p.to_raw();
        template.pains.clear();
        CsvContext { template }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.template.id = id.into();
        self
    }

    pub fn with_currency(mut self, currency: impl Into<String>) -> Self {
        self.template.currency = currency.into();
        self
    }
}

fn syntax(line: u64, column: usize, message: String) -> ParseError {
    ParseError::SyntaxError {
        line: line as usize,
        column,
        message,
    }
}

fn csv_error(e: ::csv::Error) -> ParseError {
    let line = e.position().map_or(0, |p| p.line());
    syntax(line, 1, e.to_string())
}

fn field(record: &::csv::StringRecord, index: usize) -> &str {
    record.get(index).unwrap_or("")
}

/// Reads rows into the raw schema, recording each line's source line number.
pub fn parse_raw_csv(
    bytes: &[u8],
    ctx: &CsvContext,
) -> Result<(RawPortfolio, HashMap<(usize, usize), u64>), ParseError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != COLUMNS {
        return Err(syntax(
            1,
            1,
            format!("expected header {:?}, found {:?}", COLUMNS.join(","), found.join(",")),
        ));
    }

    let mut raw = ctx.template.clone();
    let infer_agents = raw.agents.is_empty();
    let mut pain_index: HashMap<i64, usize> = HashMap::new();
    let mut rows = HashMap::new();

    for result in reader.records() {
        let record = result.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |index: usize, max_fraction: Option<u32>| {
            parse_decimal(field(&record, index), max_fraction).map_err(|e| {
                syntax(line, index + 1, format!("field {}: {e}", COLUMNS[index]))
            })
        };

        let pain_id: i64 = field(&record, 0).trim().parse().map_err(|_| {
            syntax(line, 1, format!("field pain_id: not an integer: {:?}", field(&record, 0)))
        })?;
        let kind: PainKind = field(&record, 1)
            .parse()
            .map_err(|e| syntax(line, 2, format!("field kind: {e}")))?;
        let description = field(&record, 2).to_string();
        let agent = field(&record, 3).trim().to_string();
        let frequency = number(4, None)?;
        let impact = number(5, Some(2))?;
        let alleviation = number(6, None)?;
        let note = field(&record, 7).to_string();

        let index = *pain_index.entry(pain_id).or_insert_with(|| {
            raw.pains.push(RawPain {
                id: pain_id,
                kind,
                description: description.clone(),
                lines: Vec::new(),
            });
            raw.pains.len() - 1
        });
        let pain = &mut raw.pains[index];
        if pain.kind != kind {
            return Err(syntax(
                line,
                2,
                format!("field kind: pain {pain_id} is {} on an earlier row", pain.kind),
            ));
        }
        if pain.description.is_empty() {
            pain.description = description;
        }
        rows.insert((index, pain.lines.len()), line);
        pain.lines.push(RawLine {
            agent: agent.clone(),
            frequency: DecimalText(frequency),
            impact: AmountText(impact),
            alleviation: DecimalText(alleviation),
            note,
            currency: None,
            detection: None,
            investment: None,
        });

        if infer_agents && !agent.is_empty() && !raw.agents.iter().any(|a| a.id == agent) {
            raw.agents.push(RawAgent {
                id: agent.clone(),
                label: agent.clone(),
                beneficiary: true,
                side: if agent.starts_with("provider") {
                    Side::Provider
                } else {
                    Side::Customer
                },
            });
        }
    }
    Ok((raw, rows))
}

fn column_name(field: &str) -> &str {
    match field {
        "frequency" => "frequency_per_year",
        other => other,
    }
}

pub fn parse_csv(bytes: &[u8], ctx: &CsvContext) -> Result<Portfolio, ParseError> {
    let (raw, rows) = parse_raw_csv(bytes, ctx)?;
    validate_portfolio(&raw).map_err(|mut errors| {
        for e in &mut errors {
            if let (Some(at), Some(field)) = (e.line_ref, e.field) {
                if let Some(line) = rows.get(&(at.pain, at.line)) {
                    e.locus = format!("row {line}, field {}", column_name(field));
                }
            }
        }
        ParseError::ValidationFailed { errors }
    })
}

/// Canonical CSV: header plus one row per impact line in portfolio order.
pub fn to_csv(p: &Portfolio) -> String {
    let mut writer = ::csv::Writer::from_writer(Vec::new());
    writer.write_record(COLUMNS).expect("in-memory write");
    let raw = p.to_raw();
    for pain in &raw.pains {
        for line in &pain.lines {
            let text = |v: DecimalText| canonical_text(v.0);
            let mut amount = line.impact.0;
            amount.rescale(2);
            writer
                .write_record([
                    pain.id.to_string().as_str(),
                    pain.kind.as_str(),
                    pain.description.as_str(),
                    line.agent.as_str(),
                    text(line.frequency).as_str(),
                    amount.to_string().as_str(),
                    text(line.alleviation).as_str(),
                    line.note.as_str(),
                ])
                .expect("in-memory write");
        }
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::validate::ValidationCode;

    #[test]
    fn demo_csv_matches_json_fixture() {
        let p = parse_csv(demo::DEMO_CSV.as_bytes(), &CsvContext::from_portfolio(&demo::portfolio()))
            .unwrap();
        assert_eq!(p, demo::portfolio());
    }

    #[test]
    fn inferred_context() {
        let p = parse_csv(demo::DEMO_CSV.as_bytes(), &CsvContext::inferred()).unwrap();
        assert_eq!(p.id(), "portfolio");
        assert_eq!(p.agents().len(), 2);
        assert_eq!(p.agents()[1].side, Side::Provider);
        assert_eq!(p.line_count(), 7);
    }

    #[test]
    fn canonical_csv_is_the_fixture() {
        assert_eq!(to_csv(&demo::portfolio()), demo::DEMO_CSV);
    }

    #[test]
    fn comma_decimal_is_syntax_error_with_locus() {
        let text = demo::DEMO_CSV.replacen(",50.00,", ",\"50,00\",", 1);
        match parse_csv(text.as_bytes(), &CsvContext::inferred()).unwrap_err() {
            ParseError::SyntaxError {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (2, 6));
                assert!(message.contains("impact"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        // unquoted, the comma splits the field and the row gets too long
        let text = demo::DEMO_CSV.replacen(",50.00,", ",50,00,", 1);
        assert!(matches!(
            parse_csv(text.as_bytes(), &CsvContext::inferred()),
            Err(ParseError::SyntaxError { line: 2, .. })
        ));
    }

    #[test]
    fn wrong_header_rejected() {
        let text = "pain,kind\n1,operational\n";
        assert!(matches!(
            parse_csv(text.as_bytes(), &CsvContext::inferred()),
            Err(ParseError::SyntaxError { line: 1, .. })
        ));
    }

    #[test]
    fn validation_errors_point_at_rows() {
        let text = demo::DEMO_CSV.replacen(",0.6,", ",1.2,", 1);
        match parse_csv(text.as_bytes(), &CsvContext::inferred()).unwrap_err() {
            ParseError::ValidationFailed { errors } => {
                assert_eq!(errors[0].code, ValidationCode::OmegaOutOfRange);
                assert_eq!(errors[0].locus, "row 4, field alleviation");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_an_empty_portfolio() {
        let text = format!("{}\n", COLUMNS.join(","));
        let ctx = CsvContext::from_portfolio(&demo::portfolio());
        let p = parse_csv(text.as_bytes(), &ctx).unwrap();
        assert!(p.pains().is_empty());
    }
}

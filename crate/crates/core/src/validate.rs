//! Untrusted portfolio data and its validation into a [`Portfolio`].
//!
//! [`RawPortfolio`] is the canonical JSON schema. Validation never stops at
//! the first problem: it returns every violation it can find.

use std::collections::HashSet;
use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::alleviation::{ConfusionCounts, InvestmentCurve};
use crate::domain::{
    Agent, AgentId, Alleviation, CostModel, ImpactLine, InvestmentPlan, Pain, PainId, PainKind,
    Portfolio, PricingPolicy, Rate, Side,
};
use crate::money::{Currency, Money};
use crate::number::{AmountText, DecimalText};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPortfolio {
    pub id: String,
    pub currency: String,
    pub agents: Vec<RawAgent>,
    pub pains: Vec<RawPain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_model: Option<RawCostModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing: Option<RawPricing>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAgent {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default = "yes")]
    pub beneficiary: bool,
    #[serde(default)]
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPain {
    pub id: i64,
    pub kind: PainKind,
    #[serde(default)]
    pub description: String,
    pub lines: Vec<RawLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLine {
    pub agent: String,
    pub frequency: DecimalText,
    pub impact: AmountText,
    pub alleviation: DecimalText,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub currency: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<ConfusionCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub investment: Option<RawInvestment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInvestment {
    pub omega_max: DecimalText,
    pub kappa: AmountText,
    pub spend: AmountText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCostModel {
    pub development: AmountText,
    pub annual_operation: AmountText,
    pub amortization_years: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub currency: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPricing {
    pub revenue_share: DecimalText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ValidationCode {
    OmegaOutOfRange,
    NegativeFrequency,
    NegativeImpact,
    UnknownAgent,
    DuplicatePainId,
    CurrencyMismatch,
    NoBeneficiary,
    InvalidCurrency,
    EmptyId,
    DuplicateAgentId,
    DuplicateAgentLine,
    InvalidPainId,
    EmptyPain,
    NegativeCost,
    InvalidAmortization,
    ShareOutOfRange,
    InvalidAnnotation,
}

impl fmt::Display for ValidationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where a line-level error sits in the raw input: `(pain index, line index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LineRef {
    pub pain: usize,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationError {
    pub code: ValidationCode,
    pub locus: String,
    pub message: String,
    #[serde(skip)]
    pub line_ref: Option<LineRef>,
    #[serde(skip)]
    pub field: Option<&'static str>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.locus, self.message)
    }
}

impl std::error::Error for ValidationError {}

struct Collector {
    errors: Vec<ValidationError>,
}

impl Collector {
    fn push(&mut self, code: ValidationCode, locus: String, message: String) {
        self.errors.push(ValidationError {
            code,
            locus,
            message,
            line_ref: None,
            field: None,
        });
    }

    fn push_line(
        &mut self,
        code: ValidationCode,
        at: LineRef,
        field: &'static str,
        message: String,
    ) {
        self.errors.push(ValidationError {
            code,
            locus: format!("pains[{}].lines[{}].{}", at.pain, at.line, field),
            message,
            line_ref: Some(at),
            field: Some(field),
        });
    }
}

fn check_currency(
    out: &mut Collector,
    expected: Option<Currency>,
    stated: Option<&str>,
    locus: impl FnOnce() -> (String, Option<LineRef>),
) {
    let (Some(expected), Some(stated)) = (expected, stated) else {
        return;
    };
    let (locus, line_ref) = locus();
    let message = match Currency::new(stated) {
        Ok(c) if c == expected => return,
        Ok(c) => format!("currency {c} differs from portfolio currency {expected}"),
        Err(_) => format!("invalid currency code {stated:?}"),
    };
    out.errors.push(ValidationError {
        code: ValidationCode::CurrencyMismatch,
        locus,
        message,
        line_ref,
        field: Some("currency"),
    });
}

/// Validates untrusted data. Returns the portfolio or the complete list of
/// violations.
pub fn validate_portfolio(raw: &RawPortfolio) -> Result<Portfolio, Vec<ValidationError>> {
    use ValidationCode::*;
    let mut out = Collector { errors: Vec::new() };

    let id = raw.id.trim().to_string();
    if id.is_empty() {
        out.push(EmptyId, "id".into(), "portfolio id must not be empty".into());
    }
    let currency = match Currency::new(raw.currency.trim()) {
        Ok(c) => Some(c),
        Err(e) => {
            out.push(InvalidCurrency, "currency".into(), e.to_string());
            None
        }
    };
    // Keep checking every other field even when the currency is unusable.
    let cur = currency.unwrap_or(Currency::EUR);

    let mut agents = Vec::with_capacity(raw.agents.len());
    let mut agent_ids = HashSet::new();
    for (i, a) in raw.agents.iter().enumerate() {
        let aid = a.id.trim();
        if aid.is_empty() {
            out.push(EmptyId, format!("agents[{i}].id"), "agent id must not be empty".into());
            continue;
        }
        if !agent_ids.insert(aid.to_string()) {
            out.push(
                DuplicateAgentId,
                format!("agents[{i}].id"),
                format!("agent id {aid:?} appears more than once"),
            );
            continue;
        }
        agents.push(Agent {
            id: AgentId::new(aid),
            label: if a.label.trim().is_empty() {
                aid.to_string()
            } else {
                a.label.clone()
            },
            beneficiary: a.beneficiary,
            side: a.side,
        });
    }
    if !agents.iter().any(|a| a.beneficiary) {
        out.push(
            NoBeneficiary,
            "agents".into(),
            "at least one agent must be a beneficiary".into(),
        );
    }

    let mut pains = Vec::with_capacity(raw.pains.len());
    let mut pain_ids = HashSet::new();
    for (pi, p) in raw.pains.iter().enumerate() {
        let pain_id = u32::try_from(p.id).ok().and_then(PainId::new);
        match pain_id {
            None => out.push(
                InvalidPainId,
                format!("pains[{pi}].id"),
                format!("pain id must be a positive integer, got {}", p.id),
            ),
            Some(pid) if !pain_ids.insert(pid) => out.push(
                DuplicatePainId,
                format!("pains[{pi}].id"),
                format!("pain id {pid} appears more than once"),
            ),
            Some(_) => {}
        }
        if p.lines.is_empty() {
            out.push(
                EmptyPain,
                format!("pains[{pi}].lines"),
                "a pain needs at least one impact line".into(),
            );
        }

        let mut lines = Vec::with_capacity(p.lines.len());
        let mut line_agents = HashSet::new();
        for (li, l) in p.lines.iter().enumerate() {
            let at = LineRef { pain: pi, line: li };
            let agent = l.agent.trim();
            let mut ok = true;
            if !agent_ids.contains(agent) {
                out.push_line(UnknownAgent, at, "agent", format!("agent {agent:?} is not declared"));
                ok = false;
            } else if !line_agents.insert(agent.to_string()) {
                out.push_line(
                    DuplicateAgentLine,
                    at,
                    "agent",
                    format!("pain already has a line for agent {agent:?}"),
                );
                ok = false;
            }
            let frequency = Rate::per_year(l.frequency.0).map_err(|e| {
                out.push_line(NegativeFrequency, at, "frequency", e.to_string());
            });
            if l.impact.0.is_sign_negative() && !l.impact.0.is_zero() {
                out.push_line(
                    NegativeImpact,
                    at,
                    "impact",
                    format!("impact must be nonnegative, got {}", l.impact.0),
                );
                ok = false;
            }
            let alleviation = Alleviation::new(l.alleviation.0).map_err(|e| {
                out.push_line(OmegaOutOfRange, at, "alleviation", e.to_string());
            });
            check_currency(&mut out, currency, l.currency.as_deref(), || {
                (format!("pains[{pi}].lines[{li}].currency"), Some(at))
            });
            if let Some(d) = &l.detection {
                if d.positives() == 0 {
                    out.push_line(
                        InvalidAnnotation,
                        at,
                        "detection",
                        "detection counts need tp + fn >= 1".into(),
                    );
                    ok = false;
                }
            }
            let investment = match &l.investment {
                None => None,
                Some(inv) => {
                    let curve = Alleviation::new(inv.omega_max.0)
                        .ok()
                        .and_then(|om| InvestmentCurve::new(om, money(inv.kappa, cur)).ok());
                    match curve {
                        Some(curve) if !inv.spend.0.is_sign_negative() || inv.spend.0.is_zero() => {
                            Some(InvestmentPlan {
                                curve,
                                spend: money(inv.spend, cur),
                            })
                        }
                        _ => {
                            out.push_line(
                                InvalidAnnotation,
                                at,
                                "investment",
                                "investment needs 0 < omega_max <= 1, kappa > 0 and spend >= 0"
                                    .into(),
                            );
                            ok = false;
                            None
                        }
                    }
                }
            };
            if let (true, Ok(frequency), Ok(alleviation)) = (ok, frequency, alleviation) {
                lines.push(ImpactLine {
                    agent: AgentId::new(agent),
                    frequency,
                    impact: money(l.impact, cur),
                    alleviation,
                    note: l.note.clone(),
                    detection: l.detection,
                    investment,
                });
            }
        }
        if let Some(id) = pain_id {
            pains.push(Pain {
                id,
                kind: p.kind,
                description: p.description.clone(),
                lines,
            });
        }
    }

    let cost_model = raw.cost_model.as_ref().map(|c| {
        for (name, v) in [("development", c.development), ("annual_operation", c.annual_operation)] {
            if v.0.is_sign_negative() && !v.0.is_zero() {
                out.push(
                    NegativeCost,
                    format!("cost_model.{name}"),
                    format!("cost must be nonnegative, got {}", v.0),
                );
            }
        }
        if c.amortization_years < 1 || c.amortization_years > i64::from(u32::MAX) {
            out.push(
                InvalidAmortization,
                "cost_model.amortization_years".into(),
                format!("amortization must be at least one year, got {}", c.amortization_years),
            );
        }
        check_currency(&mut out, currency, c.currency.as_deref(), || {
            ("cost_model.currency".into(), None)
        });
        CostModel {
            development: money(c.development, cur),
            annual_operation: money(c.annual_operation, cur),
            amortization_years: u32::try_from(c.amortization_years.max(1)).unwrap_or(1),
        }
    });

    let pricing = match &raw.pricing {
        None => PricingPolicy::even_split(),
        Some(p) => PricingPolicy::new(p.revenue_share.0).unwrap_or_else(|e| {
            out.push(ShareOutOfRange, "pricing.revenue_share".into(), e.to_string());
            PricingPolicy::even_split()
        }),
    };

    if !out.errors.is_empty() {
        return Err(out.errors);
    }
    Ok(Portfolio {
        id,
        currency: cur,
        agents,
        pains,
        cost_model,
        pricing,
    })
}

fn money(amount: AmountText, currency: Currency) -> Money {
    Money::round_half_even(amount.0, currency)
}

fn amount_text(m: Money) -> AmountText {
    AmountText(m.amount())
}

impl Portfolio {
    /// Canonical raw form; validating it yields this portfolio again.
    pub fn to_raw(&self) -> RawPortfolio {
        RawPortfolio {
            id: self.id.clone(),
            currency: self.currency.to_string(),
            agents: self
                .agents
                .iter()
                .map(|a| RawAgent {
                    id: a.id.to_string(),
                    label: a.label.clone(),
                    beneficiary: a.beneficiary,
                    side: a.side,
                })
                .collect(),
            pains: self
                .pains
                .iter()
                .map(|p| RawPain {
                    id: i64::from(p.id.get()),
                    kind: p.kind,
                    description: p.description.clone(),
                    lines: p.lines.iter().map(raw_line).collect(),
                })
                .collect(),
            cost_model: self.cost_model.map(|c| RawCostModel {
                development: amount_text(c.development),
                annual_operation: amount_text(c.annual_operation),
                amortization_years: i64::from(c.amortization_years),
                currency: None,
            }),
            pricing: Some(RawPricing {
                revenue_share: DecimalText(self.pricing.revenue_share()),
            }),
        }
    }
}

fn raw_line(l: &ImpactLine) -> RawLine {
    RawLine {
        agent: l.agent.to_string(),
        frequency: DecimalText(l.frequency.value()),
        impact: amount_text(l.impact),
        alleviation: DecimalText(l.alleviation.value()),
        note: l.note.clone(),
        currency: None,
        detection: l.detection,
        investment: l.investment.map(|inv| RawInvestment {
            omega_max: DecimalText(inv.curve.omega_max().value()),
            kappa: amount_text(inv.curve.kappa()),
            spend: amount_text(inv.spend),
        }),
    }
}

/// Builds a raw line from plain values; convenient for fixtures and tests.
pub fn raw_line_of(agent: &str, frequency: Decimal, impact: Decimal, alleviation: Decimal) -> RawLine {
    RawLine {
        agent: agent.to_string(),
        frequency: DecimalText(frequency),
        impact: AmountText(impact),
        alleviation: DecimalText(alleviation),
        note: String::new(),
        currency: None,
        detection: None,
        investment: None,
    }
}

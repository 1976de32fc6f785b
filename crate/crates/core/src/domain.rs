//! Validated domain types. Values of these types are immutable once a
//! [`Portfolio`] has been produced by [`crate::validate::validate_portfolio`].

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alleviation::{ConfusionCounts, InvestmentCurve};
use crate::money::{Currency, Money};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("frequency must be nonnegative, got {0}")]
    NegativeFrequency(Decimal),
    #[error("alleviation factor must lie in [0, 1], got {0}")]
    OmegaOutOfRange(Decimal),
    #[error("revenue share must lie in [0, 1], got {0}")]
    ShareOutOfRange(Decimal),
}

/// Expected occurrences per year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(Decimal);

impl Rate {
    pub fn per_year(value: Decimal) -> Result<Self, DomainError> {
        if value.is_sign_negative() && !value.is_zero() {
            return Err(DomainError::NegativeFrequency(value));
        }
        Ok(Rate(value.normalize()))
    }

    pub fn value(&self) -> Decimal {
        self.0
    }
}

/// Fraction of a pain that a service actually resolves, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alleviation(Decimal);

impl Alleviation {
    pub const NONE: Alleviation = Alleviation(Decimal::ZERO);
    pub const FULL: Alleviation = Alleviation(Decimal::ONE);

    pub fn new(omega: Decimal) -> Result<Self, DomainError> {
        if omega < Decimal::ZERO || omega > Decimal::ONE {
            return Err(DomainError::OmegaOutOfRange(omega));
        }
        Ok(Alleviation(omega.normalize()))
    }

    pub fn value(&self) -> Decimal {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        use rust_decimal::prelude::ToPrimitive;
        self.0.to_f64().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which side of the provider/customer relationship an agent sits on.
///
/// The customer-only price ceiling counts customer-side agents only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Customer,
    Provider,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Agent {
    pub id: AgentId,
    pub label: String,
    pub beneficiary: bool,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PainKind {
    Operational,
    Structural,
}

impl PainKind {
    pub const ALL: [PainKind; 2] = [PainKind::Operational, PainKind::Structural];

    pub fn as_str(&self) -> &'static str {
        match self {
            PainKind::Operational => "operational",
            PainKind::Structural => "structural",
        }
    }
}

impl fmt::Display for PainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "operational" => Ok(PainKind::Operational),
            "structural" => Ok(PainKind::Structural),
            other => Err(format!("unknown pain kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PainId(u32);

impl PainId {
    /// Pain ids are positive.
    pub fn new(id: u32) -> Option<Self> {
        (id > 0).then_some(PainId(id))
    }

    pub fn get(&self) -> u32 {
        self.0
    }
}

impl fmt::Display for PainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Investment annotation on a line: the curve plus the planned spend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvestmentPlan {
    pub curve: InvestmentCurve,
    pub spend: Money,
}

/// One agent's share of a pain: how often it hits, what one occurrence costs,
/// and how much of it the service removes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactLine {
    pub agent: AgentId,
    pub frequency: Rate,
    /// Cost of a single occurrence, stored positive.
    pub impact: Money,
    pub alleviation: Alleviation,
    pub note: String,
    pub detection: Option<ConfusionCounts>,
    pub investment: Option<InvestmentPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pain {
    pub id: PainId,
    pub kind: PainKind,
    pub description: String,
    pub lines: Vec<ImpactLine>,
}

impl Pain {
    pub fn line(&self, agent: &AgentId) -> Option<&ImpactLine> {
        self.lines.iter().find(|l| &l.agent == agent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub development: Money,
    pub annual_operation: Money,
    pub amortization_years: u32,
}

impl CostModel {
    pub fn zero(currency: Currency) -> Self {
        CostModel {
            development: Money::zero(currency),
            annual_operation: Money::zero(currency),
            amortization_years: 1,
        }
    }

    /// `development / amortization_years + annual_operation`, development share
    /// rounded half-even to cents.
    pub fn annualized(&self) -> Money {
        let years = Decimal::from(self.amortization_years.max(1));
        let development = Money::round_half_even(
            self.development.amount() / years,
            self.development.currency(),
        );
        development + self.annual_operation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PricingPolicy {
    revenue_share: Decimal,
}

impl PricingPolicy {
    /// The 50:50 split used when a portfolio does not state one.
    pub fn even_split() -> Self {
        PricingPolicy {
            revenue_share: Decimal::new(5, 1),
        }
    }

    pub fn new(revenue_share: Decimal) -> Result<Self, DomainError> {
        if revenue_share < Decimal::ZERO || revenue_share > Decimal::ONE {
            return Err(DomainError::ShareOutOfRange(revenue_share));
        }
        Ok(PricingPolicy {
            revenue_share: revenue_share.normalize(),
        })
    }

    pub fn revenue_share(&self) -> Decimal {
        self.revenue_share
    }
}

impl Default for PricingPolicy {
    fn default() -> Self {
        PricingPolicy::even_split()
    }
}

/// A set of pains with agents, cost model and pricing for one service idea.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Portfolio {
    pub(crate) id: String,
    pub(crate) currency: Currency,
    pub(crate) agents: Vec<Agent>,
    pub(crate) pains: Vec<Pain>,
    pub(crate) cost_model: Option<CostModel>,
    pub(crate) pricing: PricingPolicy,
}

impl Portfolio {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn currency(&self) -> Currency {
        self.currency
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: &AgentId) -> Option<&Agent> {
        self.agents.iter().find(|a| &a.id == id)
    }

    pub fn pains(&self) -> &[Pain] {
        &self.pains
    }

    pub fn pain(&self, id: PainId) -> Option<&Pain> {
        self.pains.iter().find(|p| p.id == id)
    }

    pub fn cost_model(&self) -> Option<&CostModel> {
        self.cost_model.as_ref()
    }

    /// The stated cost model, or a zero-cost model.
    pub fn cost_model_or_zero(&self) -> CostModel {
        self.cost_model.unwrap_or_else(|| CostModel::zero(self.currency))
    }

    pub fn pricing(&self) -> PricingPolicy {
        self.pricing
    }

    pub fn line_count(&self) -> usize {
        self.pains.iter().map(|p| p.lines.len()).sum()
    }

    /// Copy restricted to pains of one kind; agents and policies are kept.
    pub fn only_kind(&self, kind: PainKind) -> Portfolio {
        let mut out = self.clone();
        out.pains.retain(|p| p.kind == kind);
        out
    }

    /// Copy keeping only the listed pains, in the given order.
    pub fn with_pains(&self, ids: &[PainId]) -> Portfolio {
        let mut out = self.clone();
        out.pains = ids.iter().filter_map(|id| self.pain(*id).cloned()).collect();
        out
    }

    pub fn with_pricing(&self, pricing: PricingPolicy) -> Portfolio {
        let mut out = self.clone();
        out.pricing = pricing;
        out
    }

    pub fn with_cost_model(&self, cost_model: Option<CostModel>) -> Portfolio {
        let mut out = self.clone();
        out.cost_model = cost_model;
        out
    }

    pub fn with_id(&self, id: impl Into<String>) -> Portfolio {
        let mut out = self.clone();
        out.id = id.into();
        out
    }

    pub(crate) fn line_mut(&mut self, pain: PainId, agent: &AgentId) -> Option<&mut ImpactLine> {
        self.pains
            .iter_mut()
            .find(|p| p.id == pain)?
            .lines
            .iter_mut()
            .find(|l| &l.agent == agent)
    }

    pub(crate) fn lines_mut(&mut self) -> impl Iterator<Item = &mut ImpactLine> {
        self.pains.iter_mut().flat_map(|p| p.lines.iter_mut())
    }
}

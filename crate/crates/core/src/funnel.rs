//! Stage gate for service ideas: compare economic value and annualized cost
//! against targets, map the outcome to an action, and rank competing ideas.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::money::{Currency, Money, MoneyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunnelTargets {
    /// Minimum acceptable economic value per year.
    pub value_target: Money,
    /// Maximum acceptable annualized cost.
    pub cost_budget: Money,
    pub min_margin: Money,
}

impl FunnelTargets {
    /// Rejects negative thresholds and mixed currencies.
    pub fn new(value_target: Money, cost_budget: Money, min_margin: Money) -> Result<Self, TargetError> {
        for m in [cost_budget, min_margin] {
            value_target.ensure_same_currency(&m)?;
        }
        if value_target.is_negative() || cost_budget.is_negative() || min_margin.is_negative() {
            return Err(TargetError::Negative);
        }
        Ok(FunnelTargets {
            value_target,
            cost_budget,
            min_margin,
        })
    }

    pub fn currency(&self) -> Currency {
        self.value_target.currency()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TargetError {
    #[error("gate targets must not be negative")]
    Negative,
    #[error(transparent)]
    Money(#[from] MoneyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioClass {
    Proceed,
    ImproveValue,
    ReduceCost,
    Abandon,
}

impl ScenarioClass {
    pub const ALL: [ScenarioClass; 4] = [
        ScenarioClass::Proceed,
        ScenarioClass::ImproveValue,
        ScenarioClass::ReduceCost,
        ScenarioClass::Abandon,
    ];

    pub fn action(self) -> FunnelAction {
        match self {
            ScenarioClass::Proceed => FunnelAction::AdvanceStage,
            ScenarioClass::ImproveValue => FunnelAction::RedesignForValue,
            ScenarioClass::ReduceCost => FunnelAction::RedesignForCost,
            ScenarioClass::Abandon => FunnelAction::Drop,
        }
    }
}

impl fmt::Display for ScenarioClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunnelAction {
    AdvanceStage,
    RedesignForValue,
    RedesignForCost,
    Drop,
}

impl fmt::Display for FunnelAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunnelVerdict {
    pub class: ScenarioClass,
    pub action: FunnelAction,
    pub rationale: String,
}

/// Threshold comparisons are inclusive: meeting a target passes it.
pub fn classify(v: Money, cost: Money, t: &FunnelTargets) -> Result<ScenarioClass, MoneyError> {
    for m in [cost, t.value_target, t.cost_budget, t.min_margin] {
        v.ensure_same_currency(&m)?;
    }
    let value_ok = v >= t.value_target;
    let cost_ok = cost <= t.cost_budget;
    Ok(match (value_ok, cost_ok) {
        (false, true) => ScenarioClass::ImproveValue,
        (false, false) => ScenarioClass::Abandon,
        (true, false) => ScenarioClass::ReduceCost,
        (true, true) if v - cost < t.min_margin => ScenarioClass::ReduceCost,
        (true, true) => ScenarioClass::Proceed,
    })
}

pub fn verdict(class: ScenarioClass, v: Money, cost: Money, t: &FunnelTargets) -> FunnelVerdict {
    let value = v.grouped();
    let cost_text = cost.grouped();
    let cur = v.currency();
    let rationale = match class {
        ScenarioClass::Proceed => format!(
            "economic value {value} {cur} meets the target {} {cur}; annualized cost {cost_text} {cur} is within the budget {} {cur}; margin {} {cur} is at least {} {cur}",
            t.value_target.grouped(),
            t.cost_budget.grouped(),
            (v - cost).grouped(),
            t.min_margin.grouped(),
        ),
        ScenarioClass::ImproveValue => format!(
            "economic value {value} {cur} is below the target {} {cur} while annualized cost {cost_text} {cur} is within the budget {} {cur}",
            t.value_target.grouped(),
            t.cost_budget.grouped(),
        ),
        ScenarioClass::ReduceCost if cost > t.cost_budget => format!(
            "annualized cost {cost_text} {cur} exceeds the budget {} {cur} while economic value {value} {cur} meets the target {} {cur}",
            t.cost_budget.grouped(),
            t.value_target.grouped(),
        ),
        ScenarioClass::ReduceCost => format!(
            "margin {} {cur} (economic value {value} {cur} less annualized cost {cost_text} {cur}) is below the minimum margin {} {cur}",
            (v - cost).grouped(),
            t.min_margin.grouped(),
        ),
        ScenarioClass::Abandon => format!(
            "economic value {value} {cur} is below the target {} {cur} and annualized cost {cost_text} {cur} exceeds the budget {} {cur}",
            t.value_target.grouped(),
            t.cost_budget.grouped(),
        ),
    };
    FunnelVerdict {
        class,
        action: class.action(),
        rationale,
    }
}

/// Classifies and explains in one step.
pub fn gate(v: Money, cost: Money, t: &FunnelTargets) -> Result<FunnelVerdict, MoneyError> {
    Ok(verdict(classify(v, cost, t)?, v, cost, t))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Idea {
    pub id: String,
    pub v_economic: Money,
    pub annualized_cost: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedIdea {
    pub rank: usize,
    pub id: String,
    pub v_economic: Money,
    pub annualized_cost: Money,
    pub net: Money,
}

/// Orders ideas by net value descending, then lower cost, then id.
pub fn rank_ideas(ideas: &[Idea]) -> Result<Vec<RankedIdea>, MoneyError> {
    let mut rows = Vec::with_capacity(ideas.len());
    for idea in ideas {
        if let Some(first) = ideas.first() {
            first.v_economic.ensure_same_currency(&idea.v_economic)?;
        }
        rows.push((idea, idea.v_economic.checked_sub(idea.annualized_cost)?));
    }
    rows.sort_by(|(a, net_a), (b, net_b)| {
        net_b
            .cents()
            .cmp(&net_a.cents())
            .then_with(|| a.annualized_cost.cents().cmp(&b.annualized_cost.cents()))
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (idea, net))| RankedIdea {
            rank: i + 1,
            id: idea.id.clone(),
            v_economic: idea.v_economic,
            annualized_cost: idea.annualized_cost,
            net,
        })
        .collect())
}

impl FromStr for ScenarioClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioClass::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scenario class {s:?}"))
    }
}

//! What-if analytics: single-parameter sweeps, breakeven scaling of
//! alleviation, and tornado ranking of parameter influence.
//!
//! A parameter is addressed as `pain(<id>).line(<agent>).<field>` where field
//! is `frequency`, `impact` or `alleviation`.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::domain::{AgentId, Alleviation, PainId, Portfolio, Rate};
use crate::money::Money;
use crate::number::serialize_decimal;
use crate::valuation::evaluate_portfolio;

/// Upper bound on sweep points, so one request cannot pin a worker.
pub const MAX_SWEEP_STEPS: usize = 10_001;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SensitivityError {
    #[error("invalid parameter path {0:?}: expected pain(<id>).line(<agent>).frequency|impact|alleviation")]
    InvalidPath(String),
    #[error("parameter path {0} does not resolve in this portfolio")]
    PathNotFound(String),
    #[error("{0}")]
    DomainViolation(String),
    #[error("portfolio has no effective value to scale")]
    ZeroValuePortfolio,
    #[error("relative step must lie strictly between 0 and 1, got {0}")]
    InvalidRelativeStep(Decimal),
}

impl SensitivityError {
    pub fn code(&self) -> &'static str {
        match self {
            SensitivityError::InvalidPath(_) => "InvalidPath",
            SensitivityError::PathNotFound(_) => "PathNotFound",
            SensitivityError::DomainViolation(_) => "DomainViolation",
            SensitivityError::ZeroValuePortfolio => "ZeroValuePortfolio",
            SensitivityError::InvalidRelativeStep(_) => "InvalidRelativeStep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamField {
    Frequency,
    Impact,
    Alleviation,
}

impl ParamField {
    pub const ALL: [ParamField; 3] = [ParamField::Frequency, ParamField::Impact, ParamField::Alleviation];

    pub fn as_str(&self) -> &'static str {
        match self {
            ParamField::Frequency => "frequency",
            ParamField::Impact => "impact",
            ParamField::Alleviation => "alleviation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamPath {
    pub pain: PainId,
    pub agent: AgentId,
    pub field: ParamField,
}

impl ParamPath {
    pub fn new(pain: PainId, agent: AgentId, field: ParamField) -> Self {
        ParamPath { pain, agent, field }
    }

    /// Current value of the addressed scalar.
    pub fn get(&self, p: &Portfolio) -> Result<Decimal, SensitivityError> {
        let line = p
            .pain(self.pain)
            .and_then(|pain| pain.line(&self.agent))
            .ok_or_else(|| SensitivityError::PathNotFound(self.to_string()))?;
        Ok(match self.field {
            ParamField::Frequency => line.frequency.value(),
            ParamField::Impact => line.impact.amount(),
            ParamField::Alleviation => line.alleviation.value(),
        })
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pain({}).line({}).{}", self.pain, self.agent, self.field.as_str())
    }
}

impl FromStr for ParamPath {
    type Err = SensitivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SensitivityError::InvalidPath(s.to_string());
        let rest = s.trim().strip_prefix("pain(").ok_or_else(bad)?;
        let (id, rest) = rest.split_once(")").ok_or_else(bad)?;
        let pain = id
            .parse::<u32>()
            .ok()
            .and_then(PainId::new)
            .ok_or_else(bad)?;
        let rest = rest.strip_prefix(".line(").ok_or_else(bad)?;
        // the agent id may itself contain parentheses; the field follows the last ")."
        let (agent, field) = rest.rsplit_once(").").ok_or_else(bad)?;
        if agent.is_empty() {
            return Err(bad());
        }
        let field = ParamField::ALL
            .into_iter()
            .find(|f| f.as_str() == field)
            .ok_or_else(bad)?;
        Ok(ParamPath::new(pain, AgentId::new(agent), field))
    }
}

impl Serialize for ParamPath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Copy of `p` with one scalar replaced. Impacts are rounded half-even to
/// cents; values outside the field's domain are rejected. Setting alleviation
/// drops any detection or investment annotation on that line.
pub fn patch(p: &Portfolio, path: &ParamPath, value: Decimal) -> Result<Portfolio, SensitivityError> {
    let mut out = p.clone();
    let currency = p.currency();
    let line = out
        .line_mut(path.pain, &path.agent)
        .ok_or_else(|| SensitivityError::PathNotFound(path.to_string()))?;
    let domain = |what: &str| SensitivityError::DomainViolation(format!("{path}: {what}, got {value}"));
    match path.field {
        ParamField::Frequency => {
            line.frequency = Rate::per_year(value).map_err(|_| domain("frequency must be >= 0"))?;
        }
        ParamField::Impact => {
            if value < Decimal::ZERO {
                return Err(domain("impact must be >= 0"));
            }
            line.impact = Money::round_half_even(value, currency);
        }
        ParamField::Alleviation => {
            line.alleviation =
                Alleviation::new(value).map_err(|_| domain("alleviation must lie in [0, 1]"))?;
            line.detection = None;
            line.investment = None;
        }
    }
    Ok(out)
}

pub fn v_economic(p: &Portfolio) -> Money {
    evaluate_portfolio(p).total_effective
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepPoint {
    #[serde(serialize_with = "serialize_decimal")]
    pub value: Decimal,
    pub v_economic: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepCurve {
    pub path: ParamPath,
    pub points: Vec<SweepPoint>,
}

/// Evaluates `v_economic` at `steps` equally spaced values from `from` to
/// `to`, both included.
pub fn sweep(
    p: &Portfolio,
    path: &ParamPath,
    from: Decimal,
    to: Decimal,
    steps: usize,
) -> Result<SweepCurve, SensitivityError> {
    path.get(p)?;
    if steps < 2 {
        return Err(SensitivityError::DomainViolation(format!("steps must be >= 2, got {steps}")));
    }
    if steps > MAX_SWEEP_STEPS {
        return Err(SensitivityError::DomainViolation(format!(
            "steps must be <= {MAX_SWEEP_STEPS}, got {steps}"
        )));
    }
    if from >= to {
        return Err(SensitivityError::DomainViolation(format!(
            "sweep range must satisfy from < to, got {from} to {to}"
        )));
    }
    let intervals = Decimal::from(steps - 1);
    let width = to - from;
    let mut points: Vec<SweepPoint> = Vec::with_capacity(steps);
    for i in 0..steps {
        let requested = if i == steps - 1 {
            to
        } else {
            from + width * Decimal::from(i) / intervals
        };
        let patched = patch(p, path, requested)?;
        // report the value actually in effect, which for impact is cent-rounded
        let value = path.get(&patched)?.normalize();
        if points.last().is_some_and(|last| last.value >= value) {
            return Err(SensitivityError::DomainViolation(format!(
                "{path}: sweep step is finer than the field's precision"
            )));
        }
        points.push(SweepPoint {
            value,
            v_economic: v_economic(&patched),
        });
    }
    Ok(SweepCurve {
        path: path.clone(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BreakevenOutcome {
    /// Scaling every effective value by `lambda` makes value equal cost.
    Reached {
        #[serde(serialize_with = "serialize_decimal")]
        lambda: Decimal,
        #[serde(serialize_with = "serialize_decimal")]
        lambda_max: Decimal,
        total_effective: Money,
    },
    /// Even the largest feasible scaling leaves value below cost.
    Unreachable {
        #[serde(serialize_with = "serialize_decimal")]
        lambda_max: Decimal,
        max_value: Money,
        total_effective: Money,
    },
}

/// Uniform scale `λ` on all effective values with `λ * total = cost`, subject
/// to `λ * ω <= 1` on every line with `ω > 0`.
pub fn breakeven_scale(p: &Portfolio, annualized_cost: Money) -> Result<BreakevenOutcome, SensitivityError> {
    p.currency()
        .eq(&annualized_cost.currency())
        .then_some(())
        .ok_or_else(|| {
            SensitivityError::DomainViolation(format!(
                "cost currency {} differs from portfolio currency {}",
                annualized_cost.currency(),
                p.currency()
            ))
        })?;
    if annualized_cost.is_negative() {
        return Err(SensitivityError::DomainViolation(format!(
            "annualized cost must be >= 0, got {annualized_cost}"
        )));
    }
    let report = evaluate_portfolio(p);
    let total = report.total_effective;
    if total.is_zero() {
        return Err(SensitivityError::ZeroValuePortfolio);
    }
    let omega_max = report
        .lines
        .iter()
        .map(|l| l.alleviation.value())
        .filter(|w| *w > Decimal::ZERO)
        .max()
        .ok_or(SensitivityError::ZeroValuePortfolio)?;
    let lambda_max = (Decimal::ONE / omega_max).normalize();
    let cost = annualized_cost.amount();
    // cost / total > 1 / omega_max, compared without division
    if cost * omega_max > total.amount() {
        return Ok(BreakevenOutcome::Unreachable {
            lambda_max,
            max_value: Money::round_half_even(total.amount() / omega_max, p.currency()),
            total_effective: total,
        });
    }
    Ok(BreakevenOutcome::Reached {
        lambda: (cost / total.amount()).normalize(),
        lambda_max,
        total_effective: total,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TornadoEntry {
    pub path: ParamPath,
    #[serde(serialize_with = "serialize_decimal")]
    pub base: Decimal,
    #[serde(serialize_with = "serialize_decimal")]
    pub low: Decimal,
    #[serde(serialize_with = "serialize_decimal")]
    pub high: Decimal,
    pub delta_low: Money,
    pub delta_high: Money,
}

impl TornadoEntry {
    pub fn swing_cents(&self) -> i128 {
        self.delta_low.cents().abs().max(self.delta_high.cents().abs())
    }
}

/// Every addressable scalar in canonical order: pain id, agent id, then
/// frequency, impact, alleviation.
pub fn param_paths(p: &Portfolio) -> Vec<ParamPath> {
    let mut paths: Vec<ParamPath> = p
        .pains()
        .iter()
        .flat_map(|pain| {
            pain.lines.iter().flat_map(move |line| {
                ParamField::ALL
                    .into_iter()
                    .map(move |field| ParamPath::new(pain.id, line.agent.clone(), field))
            })
        })
        .collect();
    paths.sort();
    paths
}

/// Perturbs each scalar to `(1 - rel)` and `(1 + rel)` times its value
/// (alleviation capped at 1) and records the change in `v_economic`.
/// Sorted by largest swing; ties keep canonical path order.
pub fn tornado(p: &Portfolio, rel: Decimal) -> Result<Vec<TornadoEntry>, SensitivityError> {
    if rel <= Decimal::ZERO || rel >= Decimal::ONE {
        return Err(SensitivityError::InvalidRelativeStep(rel));
    }
    let base_value = v_economic(p);
    let mut entries = Vec::new();
    for path in param_paths(p) {
        let base = path.get(p)?;
        let mut low = base * (Decimal::ONE - rel);
        let mut high = base * (Decimal::ONE + rel);
        if path.field == ParamField::Alleviation {
            high = high.min(Decimal::ONE);
        }
        if path.field == ParamField::Impact {
            low = Money::round_half_even(low, p.currency()).amount();
            high = Money::round_half_even(high, p.currency()).amount();
        }
        let delta = |value: Decimal| -> Result<Money, SensitivityError> {
            Ok(v_economic(&patch(p, &path, value)?) - base_value)
        };
        entries.push(TornadoEntry {
            delta_low: delta(low)?,
            delta_high: delta(high)?,
            base: base.normalize(),
            low: low.normalize(),
            high: high.normalize(),
            path,
        });
    }
    entries.sort_by_key(|e| std::cmp::Reverse(e.swing_cents()));
    Ok(entries)
}

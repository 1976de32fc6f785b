//! Per-request adjustments shared by the CLI and the HTTP API: parameter
//! overrides, a kind filter, and pricing, cost and ceiling options.

use rust_decimal::Decimal;
use thiserror::Error;

use crate::domain::{CostModel, PainKind, Portfolio, PricingPolicy};
use crate::funnel::{gate, FunnelTargets, FunnelVerdict};
use crate::money::{Money, MoneyError};
use crate::sensitivity::{patch, ParamPath, SensitivityError};
use crate::validate::{validate_portfolio, RawCostModel, ValidationCode, ValidationError};
use crate::valuation::{evaluate, CeilingBasis, Evaluation, EvaluationOptions, ValuationError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{} validation error(s)", .0.len())]
    Invalid(Vec<ValidationError>),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Money(#[from] MoneyError),
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::Invalid(_) => "ValidationFailed",
            ScenarioError::Sensitivity(e) => e.code(),
            ScenarioError::Valuation(e) => e.code(),
            ScenarioError::Money(_) => "CurrencyMismatch",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Adjustments {
    pub overrides: Vec<(ParamPath, Decimal)>,
    pub kind: Option<PainKind>,
    pub share: Option<Decimal>,
    pub cost_model: Option<RawCostModel>,
    pub ceiling_basis: CeilingBasis,
}

fn invalid(code: ValidationCode, locus: &str, message: String) -> ScenarioError {
    ScenarioError::Invalid(vec![ValidationError {
        code,
        locus: locus.to_string(),
        message,
        line_ref: None,
        field: None,
    }])
}

/// Validates a cost model on its own, in the portfolio's currency.
pub fn validate_cost_model(raw: &RawCostModel, p: &Portfolio) -> Result<CostModel, Vec<ValidationError>> {
    let mut with_cost = p.to_raw();
    with_cost.cost_model = Some(raw.clone());
    let validated = validate_portfolio(&with_cost)?;
    Ok(validated.cost_model().copied().expect("cost model was given"))
}

impl Adjustments {
    /// The patched, filtered copy of `p` plus evaluation options. `p` itself
    /// is never modified.
    pub fn apply(&self, p: &Portfolio) -> Result<(Portfolio, EvaluationOptions), ScenarioError> {
        let mut out = p.clone();
        for (path, value) in &self.overrides {
            out = patch(&out, path, *value)?;
        }
        if let Some(kind) = self.kind {
            out = out.only_kind(kind);
        }
        let pricing = self
            .share
            .map(|s| {
                PricingPolicy::new(s)
                    .map_err(|e| invalid(ValidationCode::ShareOutOfRange, "share", e.to_string()))
            })
            .transpose()?;
        let cost_model = self
            .cost_model
            .as_ref()
            .map(|c| validate_cost_model(c, p).map_err(ScenarioError::Invalid))
            .transpose()?;
        Ok((
            out,
            EvaluationOptions {
                ceiling_basis: self.ceiling_basis,
                pricing,
                cost_model,
            },
        ))
    }

    pub fn evaluate(&self, p: &Portfolio) -> Result<Evaluation, ScenarioError> {
        let (patched, options) = self.apply(p)?;
        Ok(evaluate(&patched, &options)?)
    }

    /// Gate verdict on the adjusted portfolio's economic value and annualized
    /// cost.
    pub fn gate(&self, p: &Portfolio, targets: &FunnelTargets) -> Result<GateOutcome, ScenarioError> {
        let e = self.evaluate(p)?;
        let v = e.summary.v_economic;
        let cost = e.summary.annualized_cost;
        Ok(GateOutcome {
            verdict: gate(v, cost, targets)?,
            v_economic: v,
            annualized_cost: cost,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct GateOutcome {
    #[serde(flatten)]
    pub verdict: FunnelVerdict,
    pub v_economic: Money,
    pub annualized_cost: Money,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::funnel::{FunnelAction, ScenarioClass};
    use crate::money::Currency;
    use crate::number::AmountText;
    use rust_decimal_macros::dec;

    fn eur(text: &str) -> Money {
        Money::parse(text, Currency::EUR).unwrap()
    }

    fn cost(dev: Decimal, annual: Decimal, years: i64) -> RawCostModel {
        RawCostModel {
            development: AmountText(dev),
            annual_operation: AmountText(annual),
            amortization_years: years,
            currency: None,
        }
    }

    #[test]
    fn override_raises_total_by_the_line_difference() {
        let p = demo::portfolio();
        let adj = Adjustments {
            overrides: vec![("pain(2).line(customer).alleviation".parse().unwrap(), dec!(0.8))],
            ..Adjustments::default()
        };
        let e = adj.evaluate(&p).unwrap();
        assert_eq!(e.report.total_effective, eur("14080"));
        assert_eq!(p, demo::portfolio());
    }

    #[test]
    fn share_and_cost_options() {
        let p = demo::portfolio();
        let adj = Adjustments {
            share: Some(dec!(0.5)),
            cost_model: Some(cost(dec!(0), dec!(13080), 1)),
            ..Adjustments::default()
        };
        let e = adj.evaluate(&p).unwrap();
        assert_eq!(e.fee_quote.fee, eur("6540"));
        assert_eq!(e.summary.net_total, eur("0"));

        let bad = Adjustments {
            share: Some(dec!(1.5)),
            ..Adjustments::default()
        };
        assert!(matches!(bad.evaluate(&p), Err(ScenarioError::Invalid(_))));
        let bad = Adjustments {
            cost_model: Some(cost(dec!(-1), dec!(0), 0)),
            ..Adjustments::default()
        };
        match bad.evaluate(&p) {
            Err(ScenarioError::Invalid(errors)) => assert_eq!(errors.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gate_examples() {
        let t = FunnelTargets::new(eur("5000"), eur("4000"), eur("0")).unwrap();
        let adj = Adjustments {
            cost_model: Some(cost(dec!(0), dec!(2000), 1)),
            ..Adjustments::default()
        };
        let out = adj.gate(&demo::portfolio(), &t).unwrap();
        assert_eq!(out.verdict.class, ScenarioClass::Proceed);
        let adj = Adjustments {
            kind: Some(PainKind::Structural),
            cost_model: Some(cost(dec!(0), dec!(5000), 1)),
            ..Adjustments::default()
        };
        let out = adj.gate(&demo::portfolio(), &t).unwrap();
        assert_eq!(out.verdict.action, FunnelAction::Drop);
        assert_eq!(out.v_economic, eur("1860"));
    }
}

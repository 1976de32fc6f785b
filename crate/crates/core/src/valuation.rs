//! Annual value of solving pains, price ceiling, fee quote and economic summary.
//!
//! Per line, potential value is `f * v` and effective value is `ω * f * v`,
//! each rounded half-even to cents once after the full product. Every
//! aggregate is the exact sum of rounded line values.

use std::cmp::Reverse;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alleviation::apply_annotations;
use crate::domain::{
    Agent, AgentId, Alleviation, CostModel, ImpactLine, PainId, PainKind, Portfolio,
    PricingPolicy, Rate, Side,
};
use crate::money::{Currency, Money, MoneyError};
use crate::number::serialize_decimal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValuationError {
    #[error("no beneficiary agent contributes to the price ceiling")]
    NoBeneficiary,
    #[error(transparent)]
    Money(#[from] MoneyError),
}

impl ValuationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValuationError::NoBeneficiary => "NoBeneficiary",
            ValuationError::Money(MoneyError::CurrencyMismatch { .. }) => "CurrencyMismatch",
            ValuationError::Money(_) => "InvalidAmount",
        }
    }
}

/// `f * v`
pub fn potential_line_value(line: &ImpactLine) -> Money {
    Money::round_half_even(
        line.frequency.value() * line.impact.amount(),
        line.impact.currency(),
    )
}

/// `ω * f * v`
pub fn effective_line_value(line: &ImpactLine) -> Money {
    Money::round_half_even(
        line.alleviation.value() * line.frequency.value() * line.impact.amount(),
        line.impact.currency(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValuePair {
    pub potential: Money,
    pub effective: Money,
}

impl ValuePair {
    fn zero(currency: Currency) -> Self {
        ValuePair {
            potential: Money::zero(currency),
            effective: Money::zero(currency),
        }
    }

    fn add(&mut self, other: ValuePair) {
        self.potential = self.potential + other.potential;
        self.effective = self.effective + other.effective;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineValuation {
    pub pain_id: PainId,
    pub kind: PainKind,
    pub agent: AgentId,
    #[serde(serialize_with = "serialize_rate")]
    pub frequency: Rate,
    pub impact: Money,
    #[serde(serialize_with = "serialize_alleviation")]
    pub alleviation: Alleviation,
    pub potential: Money,
    pub effective: Money,
    pub note: String,
}

fn serialize_rate<S: serde::Serializer>(r: &Rate, s: S) -> Result<S::Ok, S::Error> {
    serialize_decimal(&r.value(), s)
}

fn serialize_alleviation<S: serde::Serializer>(a: &Alleviation, s: S) -> Result<S::Ok, S::Error> {
    serialize_decimal(&a.value(), s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PainSummary {
    pub id: PainId,
    pub kind: PainKind,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentValue {
    pub agent: AgentId,
    pub potential: Money,
    pub effective: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KindSubtotal {
    pub kind: PainKind,
    pub per_agent: Vec<AgentValue>,
    pub potential: Money,
    pub effective: Money,
}

impl KindSubtotal {
    pub fn agent(&self, id: &str) -> Option<&AgentValue> {
        self.per_agent.iter().find(|a| a.agent.as_str() == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValuationReport {
    pub portfolio_id: String,
    pub currency: Currency,
    pub agents: Vec<Agent>,
    pub pains: Vec<PainSummary>,
    /// Sorted by pain id, then agent id.
    pub lines: Vec<LineValuation>,
    /// In portfolio agent order.
    pub per_agent: Vec<AgentValue>,
    /// Operational first, then structural; always both.
    pub per_kind: Vec<KindSubtotal>,
    pub total_potential: Money,
    pub total_effective: Money,
}

impl ValuationReport {
    pub fn agent_total(&self, id: &str) -> Option<&AgentValue> {
        self.per_agent.iter().find(|a| a.agent.as_str() == id)
    }

    pub fn kind(&self, kind: PainKind) -> &KindSubtotal {
        self.per_kind
            .iter()
            .find(|k| k.kind == kind)
            .expect("report carries every kind")
    }

    pub fn line(&self, pain: u32, agent: &str) -> Option<&LineValuation> {
        self.lines
            .iter()
            .find(|l| l.pain_id.get() == pain && l.agent.as_str() == agent)
    }

    /// Effective value summed over all agents of one pain.
    pub fn pain_effective(&self, pain: u32) -> Money {
        self.lines
            .iter()
            .filter(|l| l.pain_id.get() == pain)
            .fold(Money::zero(self.currency), |acc, l| acc + l.effective)
    }
}

/// Lines carrying a detection or investment annotation are valued at the
/// alleviation derived from it.
pub fn evaluate_portfolio(p: &Portfolio) -> ValuationReport {
    let annotated = p.pains().iter().flat_map(|pain| &pain.lines).any(|l| l.detection.is_some() || l.investment.is_some());
    let derived;
    let p = if annotated {
        derived = apply_annotations(p);
        &derived
    } else {
        p
    };
    let currency = p.currency();
    let mut lines: Vec<LineValuation> = p
        .pains()
        .iter()
        .flat_map(|pain| {
            pain.lines.iter().map(move |line| LineValuation {
                pain_id: pain.id,
                kind: pain.kind,
                agent: line.agent.clone(),
                frequency: line.frequency,
                impact: line.impact,
                alleviation: line.alleviation,
                potential: potential_line_value(line),
                effective: effective_line_value(line),
                note: line.note.clone(),
            })
        })
        .collect();
    lines.sort_by(|a, b| (a.pain_id, &a.agent).cmp(&(b.pain_id, &b.agent)));

    let mut pains: Vec<PainSummary> = p
        .pains()
        .iter()
        .map(|pain| PainSummary {
            id: pain.id,
            kind: pain.kind,
            description: pain.description.clone(),
        })
        .collect();
    pains.sort_by_key(|s| s.id);

    let agent_values = |filter: &dyn Fn(&LineValuation) -> bool| -> Vec<AgentValue> {
        p.agents()
            .iter()
            .map(|a| {
                let mut pair = ValuePair::zero(currency);
                for l in lines.iter().filter(|l| l.agent == a.id && filter(l)) {
                    pair.add(ValuePair {
                        potential: l.potential,
                        effective: l.effective,
                    });
                }
                AgentValue {
                    agent: a.id.clone(),
                    potential: pair.potential,
                    effective: pair.effective,
                }
            })
            .collect()
    };
    let fold = |values: &[AgentValue]| {
        let mut pair = ValuePair::zero(currency);
        for v in values {
            pair.add(ValuePair {
                potential: v.potential,
                effective: v.effective,
            });
        }
        pair
    };

    let per_agent = agent_values(&|_| true);
    let per_kind = PainKind::ALL
        .iter()
        .map(|&kind| {
            let per_agent = agent_values(&|l| l.kind == kind);
            let pair = fold(&per_agent);
            KindSubtotal {
                kind,
                per_agent,
                potential: pair.potential,
                effective: pair.effective,
            }
        })
        .collect();
    let totals = fold(&per_agent);

    ValuationReport {
        portfolio_id: p.id().to_string(),
        currency,
        agents: p.agents().to_vec(),
        pains,
        lines,
        per_agent,
        per_kind,
        total_potential: totals.potential,
        total_effective: totals.effective,
    }
}

/// Which agents' created value bounds the fee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CeilingBasis {
    /// Every beneficiary agent, customer and provider side alike.
    #[default]
    All,
    /// Customer-side beneficiaries only.
    CustomerOnly,
}

impl CeilingBasis {
    fn admits(&self, agent: &Agent) -> bool {
        agent.beneficiary
            && match self {
                CeilingBasis::All => true,
                CeilingBasis::CustomerOnly => agent.side == Side::Customer,
            }
    }
}

impl std::str::FromStr for CeilingBasis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(CeilingBasis::All),
            "customer-only" => Ok(CeilingBasis::CustomerOnly),
            other => Err(format!("unknown ceiling basis {other:?}; expected all or customer-only")),
        }
    }
}

fn basis_agents(r: &ValuationReport, basis: CeilingBasis) -> Vec<&Agent> {
    r.agents.iter().filter(|a| basis.admits(a)).collect()
}

/// Effective value summed over the agents admitted by `basis`.
pub fn price_ceiling(r: &ValuationReport, basis: CeilingBasis) -> Result<Money, ValuationError> {
    let agents = basis_agents(r, basis);
    if agents.is_empty() {
        return Err(ValuationError::NoBeneficiary);
    }
    Ok(agents
        .iter()
        .filter_map(|a| r.agent_total(a.id.as_str()))
        .fold(Money::zero(r.currency), |acc, v| acc + v.effective))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeeQuote {
    #[serde(rename = "price_ceiling")]
    pub ceiling: Money,
    #[serde(serialize_with = "serialize_decimal")]
    pub share: Decimal,
    pub fee: Money,
    pub retained_by_beneficiaries: Money,
}

/// `fee = round_half_even(share * ceiling)`; the rest stays with beneficiaries.
pub fn quote_fee(ceiling: Money, policy: &PricingPolicy) -> FeeQuote {
    let share = policy.revenue_share();
    let fee = Money::round_half_even(share * ceiling.amount(), ceiling.currency());
    FeeQuote {
        ceiling,
        share,
        fee,
        retained_by_beneficiaries: ceiling - fee,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentNet {
    pub agent: AgentId,
    pub effective: Money,
    pub fee_allocation: Money,
    pub net: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EconomicSummary {
    pub v_economic_pot: Money,
    pub v_economic: Money,
    /// Effective value created on the customer side.
    pub v_customer: Money,
    /// Effective value created on the provider side.
    pub v_provider: Money,
    pub fee: Money,
    pub annualized_cost: Money,
    pub net_total: Money,
    pub net_by_agent: Vec<AgentNet>,
}

/// Splits `total` cents across `weights` pro rata; leftover cents go to the
/// largest remainders, earlier entries first on ties.
fn largest_remainder(total: i128, weights: &[i128]) -> Vec<i128> {
    if weights.is_empty() {
        return Vec::new();
    }
    let weight_sum: i128 = weights.iter().sum();
    let (weights, weight_sum) = if weight_sum > 0 {
        (weights.to_vec(), weight_sum)
    } else {
        (vec![1; weights.len()], weights.len() as i128)
    };
    let mut shares: Vec<i128> = weights.iter().map(|w| total * w / weight_sum).collect();
    let mut leftover = total - shares.iter().sum::<i128>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (Reverse(total * weights[i] % weight_sum), i));
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        shares[i] += 1;
        leftover -= 1;
    }
    shares
}

/// Economic value across all agents, with the fee treated as a transfer.
///
/// The fee is allocated to the agents of `basis` pro rata by effective value.
pub fn economic_summary(
    r: &ValuationReport,
    q: &FeeQuote,
    c: &CostModel,
    basis: CeilingBasis,
) -> Result<EconomicSummary, ValuationError> {
    let probe = Money::zero(r.currency);
    for m in [q.ceiling, q.fee, c.development, c.annual_operation] {
        probe.ensure_same_currency(&m)?;
    }
    let annualized_cost = c.annualized();
    let net_total = r.total_effective.checked_sub(annualized_cost)?;

    let side_total = |side: Side| {
        r.agents
            .iter()
            .filter(|a| a.side == side)
            .filter_map(|a| r.agent_total(a.id.as_str()))
            .fold(probe, |acc, v| acc + v.effective)
    };

    let payers = basis_agents(r, basis);
    let weights: Vec<i128> = payers
        .iter()
        .map(|a| r.agent_total(a.id.as_str()).map_or(0, |v| v.effective.cents()))
        .collect();
    let allocation = largest_remainder(q.fee.cents(), &weights);

    let net_by_agent = r
        .per_agent
        .iter()
        .map(|v| {
            let share = payers
                .iter()
                .position(|a| a.id == v.agent)
                .map_or(0, |i| allocation[i]);
            let fee_allocation = Money::from_cents_i128(share, r.currency)?;
            Ok(AgentNet {
                agent: v.agent.clone(),
                effective: v.effective,
                fee_allocation,
                net: v.effective.checked_sub(fee_allocation)?,
            })
        })
        .collect::<Result<Vec<_>, MoneyError>>()?;

    Ok(EconomicSummary {
        v_economic_pot: r.total_potential,
        v_economic: r.total_effective,
        v_customer: side_total(Side::Customer),
        v_provider: side_total(Side::Provider),
        fee: q.fee,
        annualized_cost,
        net_total,
        net_by_agent,
    })
}

/// Per-request adjustments applied on top of a stored portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvaluationOptions {
    pub ceiling_basis: CeilingBasis,
    pub pricing: Option<PricingPolicy>,
    pub cost_model: Option<CostModel>,
}

/// Everything one evaluation produces. The CLI `--format json` output and the
/// HTTP evaluate response are both this structure serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evaluation {
    pub portfolio_id: String,
    pub currency: Currency,
    pub ceiling_basis: CeilingBasis,
    pub report: ValuationReport,
    pub fee_quote: FeeQuote,
    pub summary: EconomicSummary,
}

pub fn evaluate(p: &Portfolio, options: &EvaluationOptions) -> Result<Evaluation, ValuationError> {
    let report = evaluate_portfolio(p);
    let ceiling = price_ceiling(&report, options.ceiling_basis)?;
    let pricing = options.pricing.unwrap_or_else(|| p.pricing());
    let fee_quote = quote_fee(ceiling, &pricing);
    let cost_model = options.cost_model.unwrap_or_else(|| p.cost_model_or_zero());
    let summary = economic_summary(&report, &fee_quote, &cost_model, options.ceiling_basis)?;
    Ok(Evaluation {
        portfolio_id: p.id().to_string(),
        currency: p.currency(),
        ceiling_basis: options.ceiling_basis,
        report,
        fee_quote,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use rust_decimal_macros::dec;

    fn eur(text: &str) -> Money {
        Money::parse(text, Currency::EUR).unwrap()
    }

    fn line(f: Decimal, v: &str, omega: Decimal) -> ImpactLine {
        ImpactLine {
            agent: AgentId::new("customer"),
            frequency: Rate::per_year(f).unwrap(),
            impact: eur(v),
            alleviation: Alleviation::new(omega).unwrap(),
            note: String::new(),
            detection: None,
            investment: None,
        }
    }

    #[test]
    fn potential_examples() {
        // oracle: repeated addition of the impact, once per occurrence
        let mut repeated = eur("0");
        for _ in 0..25 {
            repeated = repeated + eur("50");
        }
        assert_eq!(potential_line_value(&line(dec!(25), "50", dec!(1))), repeated);
        assert_eq!(potential_line_value(&line(dec!(25), "50", dec!(1))), eur("1250"));
        assert_eq!(potential_line_value(&line(dec!(0), "50", dec!(1))), eur("0"));
        assert_eq!(potential_line_value(&line(dec!(6), "1000", dec!(0.7))), eur("6000"));
    }

    #[test]
    fn effective_examples() {
        assert_eq!(effective_line_value(&line(dec!(25), "50", dec!(0.8))), eur("1000"));
        assert_eq!(effective_line_value(&line(dec!(50), "100", dec!(0.6))), eur("3000"));
        assert_eq!(effective_line_value(&line(dec!(50), "100", dec!(0))), eur("0"));
    }

    #[test]
    fn rounds_once_after_full_product() {
        // 0.9 * 1.5 * 0.01 = 0.0135 -> 0.01; rounding f*v first would give 0.02
        let l = line(dec!(1.5), "0.01", dec!(0.9));
        assert_eq!(effective_line_value(&l), eur("0.01"));
        // 0.5 * 3 * 0.01 = 0.015 -> 0.02 (half-even)
        let l = line(dec!(3), "0.01", dec!(0.5));
        assert_eq!(effective_line_value(&l), eur("0.02"));
    }

    #[test]
    fn demo_subtotals() {
        let r = evaluate_portfolio(&demo::portfolio());
        let op = r.kind(PainKind::Operational);
        assert_eq!(op.agent("customer").unwrap().effective, eur("6520"));
        assert_eq!(op.agent("provider").unwrap().effective, eur("4700"));
        let st = r.kind(PainKind::Structural);
        assert_eq!(st.agent("customer").unwrap().effective, eur("1260"));
        assert_eq!(st.agent("provider").unwrap().effective, eur("600"));
        assert_eq!(r.total_effective, eur("13080"));
        let order: Vec<(u32, &str)> = r
            .lines
            .iter()
            .map(|l| (l.pain_id.get(), l.agent.as_str()))
            .collect();
        assert_eq!(
            order,
            vec![
                (1, "customer"),
                (1, "provider"),
                (2, "customer"),
                (3, "customer"),
                (3, "provider"),
                (4, "customer"),
                (4, "provider"),
            ]
        );
    }

    #[test]
    fn empty_portfolio_is_zero() {
        let p = demo::portfolio().with_pains(&[]);
        let r = evaluate_portfolio(&p);
        assert!(r.lines.is_empty());
        assert_eq!(r.total_effective, eur("0"));
        assert_eq!(r.total_potential, eur("0"));
        assert_eq!(price_ceiling(&r, CeilingBasis::All).unwrap(), eur("0"));
    }

    #[test]
    fn ceilings() {
        let p = demo::portfolio();
        let op = evaluate_portfolio(&p.only_kind(PainKind::Operational));
        assert_eq!(price_ceiling(&op, CeilingBasis::All).unwrap(), eur("11220"));
        let st = evaluate_portfolio(&p.only_kind(PainKind::Structural));
        assert_eq!(price_ceiling(&st, CeilingBasis::All).unwrap(), eur("1860"));
        let all = evaluate_portfolio(&p);
        assert_eq!(price_ceiling(&all, CeilingBasis::CustomerOnly).unwrap(), eur("7780"));

        let mut none = all.clone();
        none.agents.iter_mut().for_each(|a| a.beneficiary = false);
        assert_eq!(price_ceiling(&none, CeilingBasis::All), Err(ValuationError::NoBeneficiary));
    }

    #[test]
    fn fee_examples() {
        let policy = |s| PricingPolicy::new(s).unwrap();
        let q = quote_fee(eur("11220"), &policy(dec!(0.5)));
        assert_eq!(q.fee, eur("5610"));
        assert_eq!(q.retained_by_beneficiaries, eur("5610"));
        assert_eq!(quote_fee(eur("123.45"), &policy(dec!(1))).fee, eur("123.45"));
        assert_eq!(quote_fee(eur("123.45"), &policy(dec!(0))).fee, eur("0"));
        // 0.5 * 0.05 = 0.025 -> 0.02
        let q = quote_fee(eur("0.05"), &policy(dec!(0.5)));
        assert_eq!(q.fee, eur("0.02"));
        assert_eq!(q.fee + q.retained_by_beneficiaries, q.ceiling);
    }

    #[test]
    fn summary_examples() {
        let p = demo::portfolio().only_kind(PainKind::Operational);
        let r = evaluate_portfolio(&p);
        let q = quote_fee(eur("11220"), &PricingPolicy::even_split());
        let zero = CostModel::zero(Currency::EUR);
        let s = economic_summary(&r, &q, &zero, CeilingBasis::All).unwrap();
        assert_eq!(s.v_economic, eur("11220"));
        assert_eq!(s.net_total, eur("11220"));
        assert_eq!(s.fee, eur("5610"));
        assert_eq!(s.v_customer, eur("6520"));
        assert_eq!(s.v_provider, eur("4700"));
        let allocated: i128 = s.net_by_agent.iter().map(|a| a.fee_allocation.cents()).sum();
        assert_eq!(allocated, q.fee.cents());
        // 5'610 split 6'520 : 4'700
        assert_eq!(s.net_by_agent[0].fee_allocation, eur("3260"));
        assert_eq!(s.net_by_agent[1].fee_allocation, eur("2350"));

        let breakeven = CostModel {
            annual_operation: eur("11220"),
            ..zero
        };
        let s = economic_summary(&r, &q, &breakeven, CeilingBasis::All).unwrap();
        assert_eq!(s.net_total, eur("0"));

        let chf = Currency::new("CHF").unwrap();
        let foreign = CostModel::zero(chf);
        assert_eq!(
            economic_summary(&r, &q, &foreign, CeilingBasis::All).unwrap_err().code(),
            "CurrencyMismatch"
        );
    }

    #[test]
    fn full_alleviation_closes_gap() {
        let mut p = demo::portfolio();
        for l in p.lines_mut() {
            l.alleviation = Alleviation::FULL;
        }
        let e = evaluate(&p, &EvaluationOptions::default()).unwrap();
        assert_eq!(e.summary.v_economic_pot, e.summary.v_economic);
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(largest_remainder(100, &[1, 1, 1]), vec![34, 33, 33]);
        assert_eq!(largest_remainder(5, &[0, 0]), vec![3, 2]);
        assert_eq!(largest_remainder(10, &[1, 3]), vec![3, 7]);
        assert_eq!(largest_remainder(0, &[5, 5]), vec![0, 0]);
        assert!(largest_remainder(7, &[]).is_empty());
    }
}

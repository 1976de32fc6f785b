//! Alleviation factors derived from detection quality and from investment.
//!
//! A detector's recall is the share of real pain occurrences that get
//! resolved, so it is used directly as ω. False alarms do not un-solve a pain;
//! they cost money and are priced by [`false_positive_overhead`]. Investment
//! raises ω along a saturating exponential that approaches `omega_max`.

use rust_decimal::prelude::{FromPrimitive, ToPrimitive};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Alleviation, Portfolio};
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlleviationError {
    #[error("confusion counts contain no real pain occurrences (tp + fn = 0)")]
    NoPositives,
    #[error("target alleviation {target} is unreachable: the curve saturates at {omega_max}")]
    Unreachable { target: Decimal, omega_max: Decimal },
    #[error("investment curve requires 0 < omega_max <= 1 and kappa > 0")]
    InvalidCurve,
    #[error("observation window must be positive")]
    InvalidWindow,
    #[error("investment spend must be nonnegative")]
    NegativeSpend,
}

/// Outcome counts of a pain detector over some observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_positives: u64,
    #[serde(rename = "fp")]
    pub false_positives: u64,
    #[serde(rename = "fn")]
    pub false_negatives: u64,
    #[serde(rename = "tn")]
    pub true_negatives: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
        }
    }

    pub fn positives(&self) -> u64 {
        self.true_positives + self.false_negatives
    }
}

/// `omega_max * (1 - exp(-spend / kappa))`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvestmentCurve {
    omega_max: Alleviation,
    kappa: Money,
}

impl InvestmentCurve {
    pub fn new(omega_max: Alleviation, kappa: Money) -> Result<Self, AlleviationError> {
        if omega_max.value() <= Decimal::ZERO || kappa.amount() <= Decimal::ZERO {
            return Err(AlleviationError::InvalidCurve);
        }
        Ok(InvestmentCurve { omega_max, kappa })
    }

    pub fn omega_max(&self) -> Alleviation {
        self.omega_max
    }

    pub fn kappa(&self) -> Money {
        self.kappa
    }

    fn omega_at(&self, spend: Decimal) -> f64 {
        let kappa = self.kappa.amount().to_f64().unwrap_or(f64::INFINITY);
        let spend = spend.to_f64().unwrap_or(f64::INFINITY);
        self.omega_max.to_f64() * -(-spend / kappa).exp_m1()
    }
}

/// Recall: `tp / (tp + fn)`. False positives and true negatives do not enter.
pub fn omega_from_confusion(counts: &ConfusionCounts) -> Result<Alleviation, AlleviationError> {
    let positives = counts.positives();
    if positives == 0 {
        return Err(AlleviationError::NoPositives);
    }
    let omega = Decimal::from(counts.true_positives) / Decimal::from(positives);
    Ok(Alleviation::new(omega).expect("recall lies in [0, 1]"))
}

/// Annual cost of handling false alarms: `fp * cost / window_years`, cent-rounded.
pub fn false_positive_overhead(
    counts: &ConfusionCounts,
    cost_per_false_alarm: Money,
    window_years: Decimal,
) -> Result<Money, AlleviationError> {
    if window_years <= Decimal::ZERO {
        return Err(AlleviationError::InvalidWindow);
    }
    let total = Decimal::from(counts.false_positives) * cost_per_false_alarm.amount();
    Ok(Money::round_half_even(
        total / window_years,
        cost_per_false_alarm.currency(),
    ))
}

pub fn omega_from_investment(
    curve: &InvestmentCurve,
    spend: Money,
) -> Result<Alleviation, AlleviationError> {
    if spend.is_negative() {
        return Err(AlleviationError::NegativeSpend);
    }
    let omega = curve.omega_at(spend.amount());
    let omega = Decimal::from_f64(omega)
        .unwrap_or(Decimal::ZERO)
        .clamp(Decimal::ZERO, curve.omega_max.value());
    Ok(Alleviation::new(omega).expect("clamped into [0, omega_max]"))
}

/// Smallest cent amount whose alleviation reaches `target`.
pub fn required_investment(
    curve: &InvestmentCurve,
    target: Alleviation,
) -> Result<Money, AlleviationError> {
    let currency = curve.kappa.currency();
    if target.value() >= curve.omega_max.value() {
        return Err(AlleviationError::Unreachable {
            target: target.value(),
            omega_max: curve.omega_max.value(),
        });
    }
    if target.value().is_zero() {
        return Ok(Money::zero(currency));
    }
    let kappa = curve.kappa.amount().to_f64().unwrap_or(f64::INFINITY);
    let ratio = target.to_f64() / curve.omega_max.to_f64();
    let exact = -kappa * (-ratio).ln_1p();
    let mut spend = Money::round_up(
        Decimal::from_f64(exact).unwrap_or(Decimal::MAX),
        currency,
    );
    // Float noise can leave the forward curve a hair short of the target.
    let cent = Money::from_cents(1, currency);
    while omega_from_investment(curve, spend)?.value() < target.value() {
        spend = spend + cent;
    }
    Ok(spend)
}

/// Copy of the portfolio with ω replaced wherever a line carries a detection
/// or investment annotation. Detection counts take precedence.
pub fn apply_annotations(portfolio: &Portfolio) -> Portfolio {
    let mut out = portfolio.clone();
    for line in out.lines_mut() {
        if let Some(counts) = &line.detection {
            if let Ok(omega) = omega_from_confusion(counts) {
                line.alleviation = omega;
                continue;
            }
        }
        if let Some(plan) = &line.investment {
            if let Ok(omega) = omega_from_investment(&plan.curve, plan.spend) {
                line.alleviation = omega;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Currency;
    use rust_decimal_macros::dec;

    fn eur(text: &str) -> Money {
        Money::parse(text, Currency::EUR).unwrap()
    }

    fn curve(omega_max: Decimal, kappa: &str) -> InvestmentCurve {
        InvestmentCurve::new(Alleviation::new(omega_max).unwrap(), eur(kappa)).unwrap()
    }

    #[test]
    fn recall_examples() {
        let omega = |tp, fp, fn_| {
            omega_from_confusion(&ConfusionCounts::new(tp, fp, fn_, 0))
                .unwrap()
                .value()
        };
        assert_eq!(omega(8, 0, 2), dec!(0.8));
        assert_eq!(omega(0, 0, 5), dec!(0));
        assert_eq!(omega(7, 100, 3), dec!(0.7));
        assert_eq!(omega(5, 3, 0), dec!(1));
        assert_eq!(
            omega_from_confusion(&ConfusionCounts::new(0, 4, 0, 9)),
            Err(AlleviationError::NoPositives)
        );
    }

    #[test]
    fn false_alarms_priced_as_cost() {
        let counts = ConfusionCounts::new(7, 12, 3, 0);
        // oracle: repeated addition of the per-alarm cost
        let mut sum = eur("0");
        for _ in 0..12 {
            sum = sum + eur("25");
        }
        assert_eq!(false_positive_overhead(&counts, eur("25"), dec!(1)).unwrap(), sum);
        assert_eq!(
            false_positive_overhead(&counts, eur("25"), dec!(2)).unwrap(),
            eur("150")
        );
        assert_eq!(
            false_positive_overhead(&ConfusionCounts::default(), eur("25"), dec!(1)).unwrap(),
            eur("0")
        );
        assert_eq!(
            false_positive_overhead(&counts, eur("25"), dec!(0)),
            Err(AlleviationError::InvalidWindow)
        );
    }

    #[test]
    fn curve_anchor_points() {
        let c = curve(dec!(0.8), "10000");
        assert_eq!(omega_from_investment(&c, eur("0")).unwrap().value(), dec!(0));

        let saturated = omega_from_investment(&c, eur("200000")).unwrap().to_f64();
        assert!((saturated - 0.8).abs() < 1e-8);

        // half-life point, evaluated independently: 10'000 * ln 2 = 6'931.47...
        let half_life = eur("6931.47");
        let independent = 0.8 * (1.0 - (-6931.47f64 / 10000.0).exp());
        let omega = omega_from_investment(&c, half_life).unwrap().to_f64();
        assert!((omega - independent).abs() < 1e-12);
        assert!((omega - 0.4).abs() < 1e-6);
    }

    #[test]
    fn inverse_examples() {
        let c = curve(dec!(0.8), "10000");
        assert_eq!(required_investment(&c, Alleviation::NONE).unwrap(), eur("0"));
        // kappa * ln 2 = 6'931.4718..., rounded up to the cent
        assert_eq!(
            required_investment(&c, Alleviation::new(dec!(0.4)).unwrap()).unwrap(),
            eur("6931.48")
        );
        assert!(matches!(
            required_investment(&c, Alleviation::new(dec!(0.8)).unwrap()),
            Err(AlleviationError::Unreachable { .. })
        ));
    }

    #[test]
    fn invalid_curves() {
        assert!(InvestmentCurve::new(Alleviation::NONE, eur("1")).is_err());
        assert!(InvestmentCurve::new(Alleviation::FULL, eur("0")).is_err());
    }

    #[test]
    fn negative_spend_rejected() {
        let c = curve(dec!(0.5), "100");
        assert_eq!(
            omega_from_investment(&c, eur("-1")),
            Err(AlleviationError::NegativeSpend)
        );
    }
}

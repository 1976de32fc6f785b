//! Annual value of solving customer pains, value-based price ceilings,
//! funnel gating of service ideas and what-if analytics.
//!
//! All money is exact decimal at cent scale. Line values are rounded
//! half-even once; aggregates are exact sums of line values.

pub mod alleviation;
pub mod demo;
pub mod domain;
pub mod funnel;
pub mod io;
pub mod money;
pub mod number;
pub mod scenario;
pub mod sensitivity;
pub mod validate;
pub mod valuation;

pub use domain::{
    Agent, AgentId, Alleviation, CostModel, ImpactLine, Pain, PainId, PainKind, Portfolio,
    PricingPolicy, Rate, Side,
};
pub use funnel::{classify, rank_ideas, verdict, FunnelAction, FunnelTargets, FunnelVerdict, ScenarioClass};
pub use money::{Currency, Money, MoneyError};
pub use sensitivity::{breakeven_scale, sweep, tornado, BreakevenOutcome, ParamPath, SensitivityError};
pub use valuation::{
    evaluate, evaluate_portfolio, CeilingBasis, Evaluation, EvaluationOptions, ValuationReport,
};

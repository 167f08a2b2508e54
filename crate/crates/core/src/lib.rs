//! Systemic risk measures on finite scenario spaces.
//!
//! Two families are covered. "First aggregate" measures compose a
//! single-firm risk measure with an aggregation rule, `ρ = ρ0 ∘ Λ`.
//! "First inject capital" measures minimize the total capital injected
//! into the firms subject to an expected-loss acceptance constraint and a
//! group structure on the allocations. On top of both the crate computes
//! dual representations, gradients and systemic capital allocations.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod allocation;
pub mod axioms;
pub mod composed;
pub mod error;
pub mod inject;
pub mod io;
pub mod numerics;
pub mod scenario;
pub mod single_firm;

pub use aggregation::{aggregate_point, aggregate_random, f_lambda, AggregationRule};
pub use composed::{ComposedRiskMeasure, DifferentiableRisk, DualSolution, SystemicRisk};
pub use axioms::{CheckOutcome, CheckReport, CheckStatus};
pub use error::{Error, Result};
pub use inject::InjectCapitalProblem;
pub use single_firm::{theta_from_alphas, SingleFirmRiskMeasure};
pub use scenario::{
    expectation, group_sums, pairing, relative_entropy, Density, GroupStructure, GroupSum, RandomVariable,
    ScenarioSpace, SystemLoss,
};

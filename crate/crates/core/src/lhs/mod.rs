//! Loss-counted local-hidden-state (LHS) models.
//!
//! An assemblage `{sigma_{a|k}}` with outcomes `a in {+1, -1, null}` admits
//! an LHS model when `sigma_{a|k} = sum_lambda D_lambda(a|k) sigma_lambda`
//! for PSD `sigma_lambda`, where `lambda` ranges over the `3^n` deterministic
//! response functions. Deciding this, and the critical noise or efficiency
//! at which it stops being possible, are conic programs solved by
//! [`conic`].

mod assemblage;
mod bounds;
mod certificate;
pub mod conic;
mod lossless;
mod program;
mod strategy;

pub use assemblage::{build_test_assemblage, Assemblage};
pub use bounds::{
    bound_curve, bound_curve_with, critical_epsilon, critical_epsilon_with, critical_p, critical_p_with, read_bound_json,
    write_bound_csv, write_bound_json, BoundPoint, BoundStatus,
};
pub use certificate::{verify_certificate, SteeringFunctional};
pub use lossless::lossless_lhs_bound;
pub use program::{lhs_membership, lhs_membership_with, LhsDecision, LhsModel, LhsOptions, LossModel, StrategyMethod};
pub use strategy::{enumerate_strategies, DeterministicStrategy, Outcome, MAX_STRATEGY_SETTINGS};

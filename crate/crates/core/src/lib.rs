//! Numerical laboratory for the projected gradient flow
//! `x'(t) + x(t) = P_Q(x(t) - lambda(t) grad f(x(t)))`.
//!
//! The crate provides Euclidean projections onto simple closed convex sets,
//! objectives with error-bound certificates, step-size schedules with
//! integrability checks, an RK4 integrator for the continuous system and its
//! discrete and reparametrized relatives, and regression tools that compare
//! observed decay with the predicted rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
mod error;
pub mod flow;
pub mod geometry;
pub mod objectives;
mod point;
pub mod quad;
pub mod schedules;

pub use analysis::{
    check_gamma_gap_limit, check_monotone, diagnostics, fit_exponential, fit_power,
    theorem_verdict, DiagnosticSeries, Quantity, RateModel, RateReport, TheoremVerdict,
    VerdictInputs,
};
pub use error::{Error, Result};
pub use flow::{dgp_run, reparam_check, FlowProblem, Numerics, Sample, System, Trajectory};
pub use geometry::{variational_gap, ConvexSet, Shape};
pub use objectives::{
    make_power_objective, Desingularizer, Gheb, Objective, ObjectiveKind, Optimum,
};
pub use point::Point;
pub use schedules::{Condition, ConditionReport, Family, Schedule, Verdict};

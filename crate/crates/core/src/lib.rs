//! Fair division of indivisible goods with inequality indices.
//!
//! The crate evaluates three indices over allocations (Gini, subjective
//! Gini, envy), solves small instances exactly, runs greedy online
//! mechanisms that minimize each index item by item, and reproduces a
//! Monte Carlo comparison of those mechanisms.
//!
//! All index arithmetic is exact ([`Rational`]); only experiment averages
//! are reported as floating point.

pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod indices;
pub mod io;
pub mod model;
pub mod online;
pub mod rational;
pub mod solvers;

pub use error::{Error, Result};
pub use indices::{
    egalitarian_welfare, envy_index, gini_index, index_report, index_report_with, index_value,
    is_envy_free, is_pareto_efficient, is_pareto_efficient_with_cap, pareto_dominates,
    subjective_gini_index, utilitarian_welfare, BundleValues, EnvyNormalization, IndexReport,
    ParetoFrontier,
};
pub use model::{validate_instance, Allocation, IndexKind, Instance, RawInstance, ValueMatrix};
pub use online::{
    feasible_set, mechanism_support, run_mechanism, sample_online_metrics, MechanismKind,
    OnlineMetrics, OrderMode, RunTrace, StepRecord,
};
pub use rational::Rational;

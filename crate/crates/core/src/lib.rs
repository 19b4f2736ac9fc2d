//! Edge-sign identifiability for stationary Ornstein-Uhlenbeck causal models.
//!
//! Given a directed graph with self-loops (and possibly cycles) and an
//! observational covariance Σ, decide whether the sign of a target drift
//! entry is determined by Σ. The decision engine is a linear feasibility
//! test ([`feasibility`]); closed-form checks for the built-in structures
//! ([`closed_form`]) and a sufficient graphical test ([`graph`]) serve as
//! independent cross-checks. [`experiment`] runs the seeded Monte Carlo
//! estimate of how often a structure's edge sign is identifiable.

pub mod catalog;
pub mod closed_form;
pub mod experiment;
pub mod feasibility;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod model;

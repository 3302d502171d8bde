//! Scheduling toolkit for a reentrant flexible flowshop with individual and
//! cluster tools, modeled on a six-stage photolithography line.
//!
//! The crate provides instance generation ([`instgen`]), schedule evaluation
//! ([`evaluator`]), a greedy permutation decoder ([`decoder`]), constructive
//! and genetic search ([`search`]), an exact branch-and-bound solver with an
//! LP-format model exporter ([`exact`]), and an experiment harness
//! ([`experiments`]).

pub mod decoder;
pub mod error;
pub mod evaluator;
pub mod exact;
pub mod experiments;
pub mod instgen;
pub mod model;
pub mod rng;
pub mod search;
pub mod timing;

pub use error::{Error, Result};
pub use model::{big_m, route_options, Instance, Job, Machine, Objective, RouteFamily, Stage, Time, ToolClass};

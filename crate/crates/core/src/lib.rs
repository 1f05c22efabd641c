//! Zero-shot object-goal navigation in a gridworld with frontier selection
//! driven by soft commonsense rules.
//!
//! The crate is organised bottom-up:
//!
//! - [`world`]: ground-truth simulator (embodiment, depth, visibility, generation)
//! - [`mapping`]: occupancy and semantic maps, frontier extraction
//! - [`perception`]: prompts, vocabularies and a noisy simulated detector
//! - [`commonsense`]: co-occurrence scores from a table or a chat endpoint
//! - [`softlogic`]: Łukasiewicz logic, grounding and MAP solvers
//! - [`policy`]: the exploring agent
//! - [`metrics`]: SR / SPL / SoftSPL, frontier distance and error taxonomy
//! - [`harness`]: benchmark orchestration, persistence and map export
//!
//! The soft-logic engine and the metric aggregation are generic over the
//! scalar type; the aliases below fix them to `f64`, which is what the rest
//! of the stack uses.

// `!(x > 0.0)` guards are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commonsense;
pub mod grid;
pub mod harness;
pub mod mapping;
pub mod metrics;
pub mod perception;
pub mod policy;
pub mod scalar;
pub mod softlogic;
pub mod world;

pub use scalar::{Real, Truth};

pub type Grounding = softlogic::Grounding<f64>;
pub type Assignment = softlogic::Assignment<f64>;
pub type Atom = softlogic::Atom<f64>;
pub type RuleTemplate = softlogic::RuleTemplate<f64>;
pub type OneHotSolution = softlogic::OneHotSolution<f64>;
pub type ContinuousSolution = softlogic::ContinuousSolution<f64>;
pub type MetricsSummary = metrics::Summary<f64>;

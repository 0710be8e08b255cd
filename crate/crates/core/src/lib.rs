//! Pattern selection and tradeoff validation for federated learning architectures.
//!
//! The crate has three layers:
//!
//! * [`catalog`] holds the fifteen architectural patterns, the quality attributes
//!   they affect, and the four decision models that relate them.
//! * [`engine`] turns a weighted [`engine::RequirementProfile`] into ranked
//!   pattern selections and design-rationale reports.
//! * [`sim`], [`plugins`] and [`validator`] form a deterministic federated
//!   learning simulator in which every pattern is a toggle, so each benefit or
//!   tradeoff claimed by a decision model can be measured as an A/B experiment.
//!
//! Everything here is `no_std` (with `alloc`). File IO, the command line and the
//! HTTP service live in the `fedarch` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod engine;
pub mod plugins;
pub mod sim;
pub mod validator;

mod math;

pub use catalog::{CatalogError, DecisionModelId, Direction, PatternCatalog};
pub use engine::{recommend, Recommendation, RequirementProfile};
pub use sim::{run_simulation, simulate, SimConfig, SimError, SimMetrics, SimOutput};

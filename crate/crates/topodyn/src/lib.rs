//! Continuous-time opinion dynamics with topological (k-nearest-neighbor)
//! interactions.
//!
//! Every agent holds a scalar opinion and is attracted by its `k` closest
//! peers, with ties between equidistant peers resolved in favor of the lower
//! index. The resulting vector field is piecewise affine: the interaction
//! graph switches as opinions cross each other, so trajectories are integrated
//! in a semi-classical sense with the neighbor map frozen over each step.
//!
//! The crate provides:
//! - [`topology`]: state-dependent neighborhoods, the induced directed
//!   interaction graph, and the k=1 structural invariants;
//! - [`dynamics`]: the vector field, a switch-aware RK4 integrator, and agent
//!   reordering;
//! - [`analysis`]: cluster extraction and classification of states as
//!   consensus / clusterization / other equilibria;
//! - [`perturbation`]: robustness experiments (opinion perturbations, agent
//!   addition and removal) and the metric bounded-confidence baseline for
//!   contrast;
//! - [`io`]: run configuration, trajectory/event/summary persistence, and SVG
//!   plotting for the `topodyn` CLI.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod io;
pub mod perturbation;
pub mod topology;

pub use error::{Error, Result};

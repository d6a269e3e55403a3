//! A first-passage-percolation laboratory on Z^d.
//!
//! Independent edge weights drawn from a law on `[a, b]` with a density
//! bounded below define a random metric. This crate computes exact
//! geodesics in such environments and measures the statistics that govern
//! them: per-edge influences, transversal fluctuations, and the behaviour of
//! passage times under a monotone Gaussian-shift perturbation of the weights.
//!
//! The library is organised by subsystem:
//!
//! - [`lattice`]: points, canonical edges, confinement ellipses, cylinders.
//! - [`weights`]: distributions, seeded environments, the perturbation maps.
//! - [`geodesic`]: Dijkstra (and bidirectional) search plus brute-force oracles.
//! - [`influence`]: Monte Carlo influence fields, influence sets, envelopes.
//! - [`fluctuations`]: cylinder counts, deviations, exponent fits, path density.
//! - [`perturbation`]: coupled original/perturbed runs and tail diagnostics.
//! - [`experiment`]: configuration, orchestration, reports, merging.
//!
//! See the crate's `examples/` directory for one runnable program per area.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fluctuations;
pub mod geodesic;
pub mod influence;
pub mod lattice;
pub mod perturbation;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};

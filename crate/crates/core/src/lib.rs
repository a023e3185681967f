//! Finite-volume laboratory for interacting particle systems.
//!
//! The crate builds Gibbs specifications and jump dynamics from interaction
//! potentials on finite site graphs, constructs the time-reversed dynamics two
//! independent ways (the local rate formula and the measure-weighted adjoint of
//! the enumerated generator), and verifies dissipation of Φ-entropies both
//! exactly on enumerated state spaces and statistically along sampled
//! trajectories.
//!
//! Module map:
//! - [`model`] — site graphs, configurations, potentials, and the conditional
//!   specification with its density bounds and consistency checks.
//! - [`dynamics`] — transition-rate families, regularity audits, and the
//!   reversed rate family.
//! - [`exact`] — enumerated generator matrices, stationary measures, semigroup
//!   and resolvent action, duality and switching identities.
//! - [`entropy`] — Φ-entropy functionals, Bregman divergences, dissipation and
//!   decay curves, the Poincaré constant.
//! - [`simulate`] — kinetic Monte Carlo sampling, path reversal, the
//!   trajectorial entropy process with its compensator, and statistical
//!   martingale tests.
//! - [`modelfile`] — the TOML model/experiment schema.

pub mod dynamics;
pub mod engine;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod export;
pub mod model;
pub mod modelfile;
pub mod simulate;

pub use error::{Error, Result};

/// Crate version recorded in every exported artifact header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

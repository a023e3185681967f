//! Site graphs, configurations, interaction potentials, and the Gibbs
//! specification with its density bounds and consistency checks.

mod graph;
mod potential;
mod specification;
mod state;

pub use graph::{Geometry, Volume};
pub use potential::{Boundary, InteractionTerm, Potential};
pub use specification::{
    chain_rule_check, consistency_check, density_bounds_check, oscillation_gamma,
    DensityBoundsReport, Specification, MAX_DEP_SITES, SCAN_CAP,
};

pub(crate) use specification::pattern_iter;
pub use state::{Configuration, LocalAlphabet, StateSpace};

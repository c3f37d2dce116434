//! Two-sided facility location games with load-balancing clients.
//!
//! A game instance is a directed, vertex-weighted host graph in which every
//! vertex is simultaneously a client and a candidate facility location.
//! Facilities pick locations to maximize their attracted load; clients split
//! their spending capacity over the opened facilities in their shopping range
//! so as to minimize the maximum load they touch.
//!
//! The crate computes, with exact rational arithmetic:
//! - client-equilibrium facility loads (iterated minimum-neighborhood-set
//!   extraction driven by a parametric max-flow search, [`equilibrium`]),
//! - an explicit client equilibrium and its certificate,
//! - facility best responses, subgame perfect equilibria and improving
//!   response dynamics with a lexicographic potential ([`dynamics`]),
//! - exact and greedy social optima plus empirical price-of-anarchy reports,
//! - the star lower-bound family, the 3SAT hardness reduction and seeded
//!   random instances ([`generators`]).

pub mod distribution;
pub mod dot;
pub mod dynamics;
pub mod equilibrium;
pub mod generators;
pub mod graph;
pub mod instance;
pub mod maxflow;
pub mod oracle;
pub mod rational;

pub use distribution::{client_cost, facility_loads, is_feasible_distribution};
pub use distribution::{LoadVector, WeightDistribution};
pub use graph::{HostGraph, Placement, VertexId};
pub use instance::ParseError;
pub use rational::Rational;

use thiserror::Error;

/// Errors shared by the library's operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex id {id} out of range (n = {n})")]
    InvalidVertex { id: usize, n: usize },
    #[error("facility index {index} out of range (k = {k})")]
    InvalidFacility { index: usize, k: usize },
    #[error("facility set must not be empty")]
    EmptyFacilitySet,
    #[error("self-loop on vertex {id}; a vertex is implicitly in its own shopping range")]
    SelfLoop { id: usize },
    #[error("duplicate edge ({from}, {to})")]
    DuplicateEdge { from: usize, to: usize },
    #[error("weight distribution is not feasible: {detail}")]
    InfeasibleDistribution { detail: String },
    #[error("candidate utility set holds {count} values, over the {guard} materialization guard")]
    UtilitySetTooLarge { count: u128, guard: u64 },
    #[error("enumeration needs {required} candidates, over the budget of {budget}; use the greedy solver")]
    EnumerationBudget { required: u128, budget: u64 },
    #[error("move cap {cap} exhausted before reaching a stable placement; this indicates a bug, improving response dynamics must terminate")]
    MoveCapExhausted { cap: u64 },
    #[error("oracle stopped after {iterations} sweeps with stationarity gap {gap:.3e}")]
    NonConvergence { iterations: u64, gap: f64 },
    #[error("bad generator parameters: {detail}")]
    BadGeneratorParams { detail: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

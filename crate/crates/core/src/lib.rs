//! Backtracking search for table-constraint CSPs with GAC propagation,
//! classic variable ordering heuristics, and a learned ordering policy
//! trained by double deep Q-learning.

pub mod corpus;
pub mod csp;
pub mod dqn;
pub mod eval;
pub mod format;
pub mod heuristics;
pub mod nn;
pub mod rbgen;
pub mod search;

pub use csp::{ConstraintNetwork, SearchState};
pub use search::{solve, OrderingPolicy, Outcome, Search, SearchLimits, SearchStats};

pub type NetParams64 = nn::NetParams<f64>;
pub type NetParams32 = nn::NetParams<f32>;
pub type Tape64<'n> = nn::Tape<'n, f64>;
pub type Adam64 = nn::Adam<f64>;

//! Exact linear-programming engines.
//!
//! * [`transportation`]: primal network simplex for the dense bipartite
//!   transportation problem, used for every two-marginal transport solve.
//! * [`simplex`]: two-phase dense tableau simplex with a final basis
//!   refinement, used for the joint barycenter program.

pub mod simplex;
pub mod transportation;

pub use simplex::{LinearProgram, LpSolution};
pub use transportation::{solve_transportation, TransportSolution};

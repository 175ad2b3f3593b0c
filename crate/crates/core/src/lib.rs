//! Minimization of the trace functional `Tr rho Omega[rho]` over mixture
//! families of density matrices.
//!
//! The solver alternates a matrix-exponential fixed-point map with an
//! information projection back onto the family, descending the objective
//! whenever the functional satisfies a relative-entropy dominance condition.
//! On top of the generic engine sit an information-bottleneck objective,
//! an amplitude-damping experiment harness, and small I/O and plotting
//! helpers for the command-line front end.

pub mod bottleneck;
pub mod channels;
pub mod config;
pub mod entropy;
mod error;
pub mod experiment;
pub mod io;
pub mod linop;
pub mod mixture;
pub mod plot;
pub mod random;
pub mod solver;

pub use config::SolverConfig;
pub use error::{Error, Result};

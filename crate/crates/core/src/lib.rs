//! Simulation and exact distribution analytics for the spreading of a single
//! message on a random multigraph grown by the Norros-Reittu preferential
//! attachment model.
//!
//! Each new node arrives with an i.i.d. Pareto capacity and draws a
//! Poisson-many edges to every existing node, with mean proportional to the
//! product of capacities over the total capacity. The message moves to the
//! arriving node iff at least one new edge touches a current holder, so the
//! holder count grows by at most one per step and, conditional on the
//! capacities and the realized holder set, follows a Poisson binomial law.
//!
//! Modules:
//! - [`capacity`]: capacity law and prefix-summed capacity sequences.
//! - [`evolution`]: multigraph growth, old-edge deletion and Poisson sampling.
//! - [`spreading`]: holder-set tracking and the per-step success probability.
//! - [`clock`]: the Poisson clock that counts evolution steps in a horizon.
//! - [`analytics`]: Poisson binomial pmfs, horizon mixtures, ratio CDF.
//! - [`harness`]: configuration, Monte Carlo sweeps, comparison reports, CSV.

pub mod analytics;
pub mod capacity;
pub mod clock;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod spreading;
pub mod stats;

pub use error::{Error, Result};

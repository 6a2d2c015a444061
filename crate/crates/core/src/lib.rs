//! Extreme-value analysis of queue-length maxima.
//!
//! For Geo/Geo/1 and Geo/Geo/2 queues in discrete time (and their M/M/1 and
//! M/M/2 continuous-time limits), the maximum line length over a long run
//! follows a Gumbel-type law `P{M_n <= log_{1/omega}(n) + h} ~ exp(-A omega^h)`
//! obtained from the Poisson clumping heuristic. This crate evaluates those
//! laws in closed form ([`model`]), cross-checks every formula against
//! truncated numerical solves ([`oracle`]), replays the reference stochastic
//! simulations with reproducible seeding ([`sim`]) and compares the two sides
//! at scale ([`experiment`]).

pub mod error;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result};

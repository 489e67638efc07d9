//! Posterior analysis of Poisson hidden Markov models.
//!
//! - [`forward_backward`]: scaled forward-backward tables, likelihood and
//!   posterior marginals.
//! - [`posterior_chain`]: the hidden chain conditioned on the data as an
//!   inhomogeneous Markov chain, and sampling from it.
//! - [`fmci`]: exact posterior distributions of run and occupancy statistics
//!   by finite Markov chain imbedding (two-state models).
//! - [`decoding`]: posterior, Viterbi and hybrid decoding with their risks.
//! - [`artemis`]: simulation studies for choosing the hybrid weight.

pub mod artemis;
pub mod decoding;
mod error;
pub mod fmci;
pub mod forward_backward;
pub mod io;
pub mod model;
pub mod posterior_chain;
pub mod seeding;

pub use error::{Error, Result};
pub use forward_backward::{forward_backward, FBTables, Marginals};
pub use model::{log_joint, HmmModel, ObsSeq, StateSeq, ValidationOptions};
pub use posterior_chain::{sample_posterior_paths, stay_probabilities, PosteriorChain, StayProbs};

//! Marked split-event laws for multi-type continuous-time Markov branching
//! processes.
//!
//! A split of a type-`k` individual into offspring vector `j` is *marked*
//! when `j` belongs to a chosen set `R_k`; the crate counts marked splits and
//! describes the joint law of the counts at a fixed horizon and at
//! extinction, both analytically and by exact simulation.
//!
//! - [`model`]: specifications, generating functions, Jacobian, criticality
//! - [`extinction`]: extinction probabilities and marked roots
//! - [`flow`]: the backward ODE flow and its Picard check
//! - [`pgf`]: horizon and extinction-time generating functions
//! - [`simulate`]: exact simulation and Monte Carlo estimators
//! - [`oracle`]: a two-type fixture with closed-form answers

pub mod error;
pub mod exec;
pub mod extinction;
pub mod flow;
pub mod model;
pub mod oracle;
pub mod pgf;
pub mod simulate;

pub use error::{Error, ErrorKind, Result};
pub use model::{
    CriticalityClass, MarkAssignment, MarkKey, MarkedSets, OffspringVector, ProcessSpec, TypeLaw,
};
pub use pgf::StartState;

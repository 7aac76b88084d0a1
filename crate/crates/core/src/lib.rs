//! Coordination analysis for distributed specifications over finite event
//! histories.
//!
//! The toolkit models executions as finite posets of events (happens-before
//! order with send/receive matching), specifications as observability
//! functions mapping each history to a set of outcomes drawn from a finite
//! refinement-ordered domain, and decides by enumeration whether outcomes
//! evolve monotonically along causal extensions. When they do not, it
//! extracts witnesses; it can also search for coordination-free
//! implementation models and derive the outcome order induced by one.
//!
//! Module map:
//! - [`history`]: events, universes, histories, prefix/extension enumeration
//! - [`outcome`]: finite outcome domains and consistency checks
//! - [`spec`]: specifications, possibility operators, the monotonicity check
//! - [`implementation`]: implementation models, coordination-freedom,
//!   exhaustive search, induced orders
//! - [`cases`]: built-in case-study specifications and scenarios
//! - [`oracle`]: random table-spec generation for cross-checking the
//!   monotonicity verdict against implementation search

pub mod cases;
mod error;
pub mod history;
pub mod implementation;
pub mod oracle;
pub mod outcome;
pub mod spec;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

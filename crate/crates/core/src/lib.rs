//! Litmus-test checking for the SC, GAM0, GAM and GAM-ARM memory models.
//!
//! Two independent engines decide which final outcomes a program may produce:
//! an axiomatic checker that searches for a global memory order satisfying the
//! model's axioms, and an operational explorer that runs an out-of-order
//! abstract machine to exhaustion. The harness cross-checks them.

pub mod axiomatic;
pub mod deps;
pub mod error;
pub mod harness;
pub mod litmus;
pub mod model;
pub mod operational;
pub mod outcome;

pub use error::{Error, Result};
pub use litmus::{parse_litmus, resolve_addresses, Program};
pub use model::{Model, ModelConfig};
pub use outcome::{Engine, Outcome, Verdict, Witness};

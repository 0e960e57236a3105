//! Revenue division for subscription platforms.
//!
//! The crate implements pro-rata and user-centric payment rules, portioning rules lifted
//! to payments, verifiers and randomized searchers for manipulation and fairness axioms,
//! suspicious-profit fraud detection, pay-per-stream metrics and a synthetic experiment
//! harness.

pub mod axioms;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod model;
pub mod portioning;
pub mod psp;
pub mod rules;

pub use axioms::AxiomId;
pub use error::{Error, Result};
pub use model::{Instance, PaymentVector, UserProfile};
pub use rules::{evaluate, PaymentRule, RuleId};

//! Friction-adaptive descent optimizers, their splitting integrators and an
//! experiment harness.

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod integrators;
pub mod linalg;
pub mod potentials;

pub use dynamics::{Coupling, DynamicsParams, ExtendedState};
pub use error::{Error, Result};
pub use integrators::{SchemeConfig, SchemeKind, StoppingRule, Trace};
pub use potentials::Objective;

//! Cascaded single-photon catalysis: closed-form displaced-qudit outputs,
//! brute-force Fock-space simulation, target states, metrics, an imperfect
//! hardware model and a multistart amplitude optimizer.

pub mod cascade;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod optimizer;
pub mod realistic;
pub mod reference;
pub mod targets;

pub use error::{Error, Result};

//! Cache-aided delivery over Wyner's circular interference networks.
//!
//! Receivers hold demand-oblivious caches, transmitters download the files
//! their neighbours want, and interference is cancelled with cached parts.
//! The crate provides the network model, a Gaussian channel simulator,
//! random-coding and ideal link backends, the soft-handoff and full-model
//! schemes, closed-form rate-memory curves, and an experiment harness.

pub mod channel;
pub mod codec;
mod error;
pub mod harness;
pub mod model;
pub mod schemes;
pub mod tradeoff;

pub use error::{Error, Result};

//! Free-energy-principle Helmholtz machine.
//!
//! A layered network of stochastic ±1 units with bottom-up recognition and
//! top-down generative weights, trained in two stages:
//!
//! 1. wake-sleep with the local delta rule on the well-formed rhythm set
//!    ([`train`]);
//! 2. active-inference fine-tuning, where only grammatical dreams train the
//!    recognition weights and frequently dreamt patterns become more salient
//!    inputs ([`active`]).
//!
//! [`grammar`] defines the well-formed set, [`metrics`] measures generation
//! accuracy and free energy, and [`checkpoint`] persists runs as JSON.

pub mod active;
pub mod checkpoint;
pub mod error;
pub mod grammar;
pub mod metrics;
pub mod network;
pub mod pattern;
pub mod pipeline;
pub mod rng;
pub mod train;

pub use active::{SalienceDistribution, Stage2Config};
pub use error::{HmError, Result};
pub use network::{CompleteState, GenerativeParams, NetworkShape, RecognitionParams};
pub use pattern::Pattern;
pub use train::{TrainConfig, UpdateRule};

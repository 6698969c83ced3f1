//! Cycle-time prediction for injection moulding.
//!
//! The crate models the cycle time of an injection-moulding process as a
//! function of mould temperature, injection pressure, and switch-over
//! pressure. Two model families are provided: a feedforward neural network
//! trainable with six different algorithms, and a Sugeno fuzzy inference
//! system tuned by hybrid least-squares / gradient training. A benchmarking
//! harness runs both families over seeded splits and reports comparable
//! error and correlation figures.

pub mod anfis;
pub mod ann;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod trainers;

pub use error::{Error, Result};

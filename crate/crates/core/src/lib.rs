//! Finite-field chain-of-thought lab.
//!
//! Tasks (arithmetic over Z_p, linear systems, and three dynamic programs)
//! with their step-by-step solution traces, dataset generators, and two
//! transformers whose weights are written down by hand rather than trained.

pub mod arith;
pub mod cli;
pub mod constructed;
pub mod datagen;
pub mod dp;
pub mod equation;
pub mod error;
pub mod field;
pub mod nn;
pub mod sample;

pub use error::{Error, Result};

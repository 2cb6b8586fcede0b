//! Numerical toolkit for two-party bit-commitment protocols built from
//! quantum channels, classical broadcasts and trusted oracles.

pub mod analyzer;
pub mod attacks;
pub mod channels;
pub mod cli;
pub mod demos;
pub mod error;
pub mod format;
pub mod linalg;
pub mod protocol;
pub mod system;

pub use error::{Error, Result};

//! Memoryless linearization of distorted, quantized signals with one-bit
//! branch networks realized as lookup tables.

pub mod design;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linearizer;
pub mod metrics;
pub mod numeric;
pub mod signal;

pub use error::{Error, Result};

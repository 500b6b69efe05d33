//! File formats, data preparation and experiment drivers around
//! [`tdiv_core`].

pub mod data;
pub mod dimacs;
mod error;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use error::{DataError, Result};

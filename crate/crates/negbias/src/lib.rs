//! File formats, experiment drivers and the command-line front end for
//! [`negbias_core`].

pub mod emb;
mod error;
pub mod experiments;
pub mod tables;

pub use error::{Error, Result};

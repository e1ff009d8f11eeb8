//! File formats, benchmark suite runner and command line on top of
//! [`motifsift_core`].

// `!(x >= 0.0)` is used on purpose so that NaN arguments are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod error;
pub mod formats;
pub mod io;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
pub use motifsift_core as core;

//! Core algorithms for evaluating SIFT local features on woven-motif imagery.
//!
//! This crate is `no_std` (it needs `alloc`) and contains everything that is a
//! pure function of pixels: image primitives, the SIFT detector and
//! descriptor, nearest-neighbour matching with RANSAC verification, the five
//! deformation families with their intensity schedules, a procedural motif
//! generator and the per-cell benchmark logic. File formats, configuration and
//! the command line live in the `motifsift` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bench;
pub mod deform;
mod error;
pub mod image;
pub mod jpeg;
mod linalg;
pub mod matching;
pub mod sift;
pub mod synth;

pub use error::{Error, Result};
pub use image::{Homography, Image};
pub use sift::{Feature, Keypoint, SiftParams};

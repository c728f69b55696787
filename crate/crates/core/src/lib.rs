//! Accelerometer gait recognition with a bag-of-words feature representation.
//!
//! The pipeline runs in stages, each living in its own module:
//!
//! 1. [`dataset_io`] loads or synthesizes per-subject triaxial recordings.
//! 2. [`preprocess`] splits every axis into gravity (DC) and body (AC) parts
//!    with a one-pole IIR low-pass filter.
//! 3. [`features`] slides 1 s windows with 50% overlap and computes a
//!    15-dimensional statistical vector per window.
//! 4. [`codebook`] standardizes those vectors and learns a k-word vocabulary
//!    with K-means (plus a WCSS elbow scan).
//! 5. [`bow`] turns word sequences into normalized histograms.
//! 6. [`classifiers`] holds six from-scratch classifiers behind one interface.
//! 7. [`evaluation`] runs leakage-free k-fold rotation for both the
//!    bag-of-words and the raw statistical representation and compares them.

pub mod bow;
pub mod classifiers;
pub mod codebook;
pub mod config;
pub mod dataset_io;
mod error;
pub mod evaluation;
pub mod features;
pub mod preprocess;
pub mod seeding;

pub use error::{Error, ErrorKind, Result};

/// Version tag written into every serialized artifact.
pub const FORMAT_VERSION: u32 = 1;

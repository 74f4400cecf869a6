//! Software model of a streaming, fixed-point HOG (histogram of oriented
//! gradients) extractor.
//!
//! Pixels enter one per step and flow through a chain of stages that mirror
//! a hardware datapath:
//!
//! - [`gradient`]: two pixel line buffers and a 3×3 window produce signed
//!   horizontal/vertical differences.
//! - [`cordic`]: shift-and-add vector translation into magnitude and
//!   orientation (degrees, folded to `[0, 180)`).
//! - [`binning`]: linear interpolation of each magnitude between the two
//!   nearest of 9 orientation bins.
//! - [`cell`]: a line buffer of partial 8×8 cell histograms.
//! - [`block`]: overlapping 2×2-cell blocks, L2 normalized.
//!
//! [`pipeline`] wires the stages together and keeps step accounting,
//! [`golden`] is the double-precision reference model used to measure
//! quantization error, and [`detector`] scores sliding windows with a linear
//! SVM. All fixed-point values go through [`fixq`].

pub mod binning;
pub mod block;
pub mod cell;
pub mod cli;
pub mod cordic;
pub mod detector;
pub mod error;
pub mod features;
pub mod fixq;
pub mod golden;
pub mod gradient;
pub mod ingest;
pub mod pipeline;

pub use error::{HogError, Result};

/// Number of orientation bins per cell histogram.
pub const BINS: usize = 9;
/// Side of a square cell in pixels.
pub const CELL_SIZE: usize = 8;
/// Features in one 2×2-cell block descriptor.
pub const BLOCK_LEN: usize = 4 * BINS;

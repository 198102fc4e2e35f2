//! Semantic progress curves for video sequences.
//!
//! Frame embeddings are turned into a windowed graph of angular distances,
//! a one-dimensional progress curve is fitted to that graph, and the curve
//! drives warped temporal positions for regeneration as well as a
//! piecewise-linear segmentation for keyframe and clip planning.

pub mod artifact;
pub mod error;
pub mod fit;
pub mod format;
pub mod graph;
pub mod interp;
pub mod model;
pub mod plot;
pub mod segment;
pub mod synth;
pub mod warp;

pub use error::{Error, Result};

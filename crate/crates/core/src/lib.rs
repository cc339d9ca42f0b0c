//! Congestion prediction on placed netlists with a dual-branch graph network.
//!
//! A placed design is viewed twice: once through its net connectivity
//! (the topology graph) and once through the Delaunay triangulation of its
//! cell centers (the geometry graph). [`model`] runs graph attention over the
//! first view, continuous-filter convolutions over the second, and fuses both
//! with the raw features to regress a per-cell congestion score.
//!
//! Module map:
//! - [`circuit`]: netlists, placements, file formats, synthetic designs, RUDY labels
//! - [`graph`]: density grids, node features, topology and Delaunay graph views
//! - [`tensor`]: dense tensors with tape-based reverse-mode differentiation
//! - [`model`]: the dual-branch network and its layers
//! - [`train`]: MSE loss, AdamW and the training loop
//! - [`metrics`]: Pearson, Spearman and Kendall tau-b correlations

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod data;
mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

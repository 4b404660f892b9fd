//! Action-attending graph neural network for skeleton-based action
//! recognition.
//!
//! Each skeleton frame is an undirected graph whose nodes are joints
//! carrying 3D coordinates. Frames go through Chebyshev spectral filtering,
//! a dynamic attending layer that reweights and pools joints, a second
//! filter/attend pair on the pooled graph, and a peephole LSTM over time.
//!
//! Module map:
//!
//! - [`graph`]: Laplacians and the Chebyshev basis.
//! - [`diff`]: reverse-mode differentiation, parameters, checkpoints.
//! - [`layers`]: spectral filter, attending layer, LSTM cell, classifier.
//! - [`model`]: the assembled network and action-unit saliency.
//! - [`data`]: skeleton sequences, preprocessing, synthetic motions, JSONL.
//! - [`train`]: SGD with momentum, training loop, metrics.
//! - [`oracles`]: slow reference implementations for verification.
//! - [`viz`]: saliency CSV and SVG skeleton heatmaps.
//! - [`cli`]: the `a2gnn` command line front end.

pub mod cli;
pub mod config;
pub mod data;
pub mod diff;
pub mod error;
pub mod graph;
pub mod layers;
pub mod model;
pub mod oracles;
pub mod train;
pub mod viz;

pub use error::{Error, Result};

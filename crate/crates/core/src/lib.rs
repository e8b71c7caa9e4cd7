//! GraphKAN: graph neural networks whose node-update function is a
//! Kolmogorov-Arnold network — a matrix of learnable univariate B-spline
//! functions — instead of a dense layer followed by a fixed activation.
//!
//! The crate contains everything needed to reproduce the GraphKAN-vs-GCN
//! comparison at desk scale:
//!
//! - [`numerics`]: dense row-major matrices, a seeded RNG, parameter
//!   initialization, and the finite-difference oracle backing every
//!   gradient test.
//! - [`spline`]: Cox-de Boor B-spline basis evaluation and differentiation.
//! - [`kan`]: the KAN layer (per-edge learnable univariate functions) with
//!   analytic forward and backward passes.
//! - [`graph`]: graph representation, symmetric-normalized aggregation,
//!   the synthetic benchmark generator, and graph file I/O.
//! - [`model`]: the 3-layer GraphKAN network and the MLP+ReLU GCN baseline,
//!   LayerNorm, softmax cross-entropy, and checkpointing.
//! - [`train`]: Adam, cosine-annealing schedule, the training loop with
//!   validation-based model selection, and the multi-trial experiment runner.
//! - [`metrics`]: accuracy, silhouette-based cluster separation of
//!   intermediate features, and feature export for external plotting.
//! - [`reference`]: deliberately naive reference implementations used to
//!   cross-check the optimized paths.
//!
//! All numeric kernels are generic over the scalar type via [`Scalar`]
//! (f32 or f64). The training harness and the shipped benchmarks run in
//! f64: the gradient checks require 1e-4 relative agreement with central
//! finite differences, which single precision cannot deliver.

pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod kan;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod reference;
pub mod scalar;
pub mod spline;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense f64 matrix, the element type used by the training harness.
pub type Matrix64 = numerics::Matrix<f64>;
/// Dense f32 matrix.
pub type Matrix32 = numerics::Matrix<f32>;
/// f64 spline grid.
pub type SplineGrid64 = spline::SplineGrid<f64>;
/// f32 spline grid.
pub type SplineGrid32 = spline::SplineGrid<f32>;
/// f64 KAN layer.
pub type KanLayer64 = kan::KanLayer<f64>;
/// f64 graph, as produced by the benchmark generator and the file reader.
pub type Graph64 = graph::Graph<f64>;
/// f64 normalized adjacency.
pub type NormAdjacency64 = graph::NormAdjacency<f64>;
/// f64 network (GraphKAN or GCN baseline).
pub type Network64 = model::Network<f64>;

//! Node classification on attributed graphs with topology-aware message passing.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: graph storage, sparse matrices, text ingestion, splits and the
//!   normalized adjacency operators consumed by every model.
//! - [`topo`]: per-node structural attributes (centralities, distances, motif
//!   census, k-core, Louvain) assembled into a [`topo::NavMatrix`].
//! - [`dualgraph`]: the k-nearest-neighbour similarity graph built over the
//!   structural attributes.
//! - [`tensor`]: a small reverse-mode tape with the dense and sparse kernels
//!   the models need, plus Adam and Glorot initialization.
//! - [`models`]: GCN, GAT, their topology-augmented variants, the asymmetric
//!   and combined GCNs, a plain feed-forward network and the training loop.
//! - [`classfeat`]: content-free inputs built from training-set labels.
//! - [`analysis`]: statistics relating structure to class.
//! - [`experiment`]: multi-trial campaigns and training-size sweeps.
//!
//! Data-parallel loops go through [`exec::Execution`]; with the `parallel`
//! feature disabled every loop runs sequentially and produces identical
//! results.

pub mod analysis;
pub mod classfeat;
pub mod dualgraph;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod graph;
pub mod models;
pub mod tensor;
pub mod topo;

pub use error::{Error, Result};

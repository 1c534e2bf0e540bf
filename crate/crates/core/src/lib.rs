//! Machine-learned detection of multipartite entanglement structure.
//!
//! The crate synthesises labelled feature data from products of noised
//! GHZ-class blocks, trains a small multilayer perceptron to predict the
//! (intactness, depth) class of an `n`-qubit state from four observables,
//! and uses the trained model to sweep state families and read off
//! separability bounds.
//!
//! Layout:
//!
//! - [`qcore`]: dense density-matrix oracle (small `n` only).
//! - [`structure`]: compositions of `n` and the (intactness, depth) class table.
//! - [`seeds`]: GHZ witness and seed-parameter sampling.
//! - [`features`]: closed-form observables, checked against the oracle.
//! - [`dataset`]: deterministic, parallel dataset generation and its file format.
//! - [`mlp`]: the classifier, backpropagation and training loop.
//! - [`analysis`]: state-family sweeps, bound extraction, measurement ingestion.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise. Results are
//! identical either way.

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod features;
pub mod mlp;
pub mod par;
pub mod qcore;
pub mod seeds;
pub mod structure;

pub use error::{Error, Result};
pub use features::FeatureVector;
pub use structure::{Composition, StructureLabel};

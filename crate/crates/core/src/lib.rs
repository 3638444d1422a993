//! Power cut sparsifiers, linear sketches for dynamic graph streams, and an
//! expander decomposition driven by sparsified balanced cuts.
//!
//! Module map:
//! - [`graph`]: graphs, vertex sets, partitions, cut and conductance oracles
//! - [`sketch`]: k-sparse recovery over integer vectors
//! - [`stream`]: per-level neighbourhood sketches that rebuild a sampled graph
//! - [`sparsifier`]: the offline edge sampler and cut-sparsifier checks
//! - [`balanced_cut`]: exhaustive and spectral-sweep balanced sparse cuts
//! - [`decomp`]: expander decomposition and its verifier
//! - [`harness`], [`io`]: generators, experiments, text formats

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod balanced_cut;
pub mod decomp;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod prf;
pub mod sketch;
pub mod sparsifier;
pub mod stream;

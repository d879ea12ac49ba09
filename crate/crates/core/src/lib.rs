//! Unsupervised image–sentence link discovery inside multi-image, multi-sentence
//! documents.
//!
//! Shallow encoders map precomputed sentence and image features into a shared
//! space. They are trained with a document-level max-margin objective whose
//! document similarity is one of three structured set-similarity functions
//! ([`simfn`]): dense correspondence, top-k, or a bipartite assignment solved
//! exactly by [`assignment`]. At test time the intra-document cosine matrix is
//! scored against gold links with [`eval`].
//!
//! The crate is `no_std` and needs only `alloc`. File formats, experiment
//! runs, and the command-line interface live in the `docalign` crate.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod assignment;
pub mod baselines;
pub mod corpus;
pub mod encoders;
mod error;
pub mod eval;
pub mod linalg;
pub mod rng;
pub mod simfn;
pub mod training;

pub use crate::error::{Error, Result, SkipReason};
pub use crate::linalg::Mat;

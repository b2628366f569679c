//! Overlapping community detection in partially observed networks.
//!
//! The pipeline fits a Kronecker graph model to the observed graph, samples
//! the unobserved part, ranks the recovered nodes by degree, and searches for
//! the number of recovered nodes to attach that minimizes a regularized
//! affiliation-model loss. The affiliation matrix at that size is thresholded
//! into overlapping communities.
//!
//! Module map:
//! - [`graph`]: sparse undirected graphs and edge-list I/O
//! - [`kron`]: Kronecker model, likelihood, EM fitting
//! - [`completion`]: realization of the missing blocks
//! - [`ranking`]: influential recovered nodes
//! - [`community`]: affiliation model, detector, hard decision
//! - [`pipeline`]: the full search and the two baselines
//! - [`eval`]: NMI, graph sampling, planted benchmarks, experiment reports
//! - [`cli`]: command-line front end

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod community;
pub mod completion;
pub mod error;
pub mod eval;
pub mod graph;
pub mod kron;
pub mod pipeline;
pub mod ranking;
pub mod rng;

pub use community::{commun_det, hard_decision, AffiliationMatrix, Cover, DetectConfig};
pub use completion::{realize_missing, RecoveredGraph};
pub use error::{Error, Result};
pub use graph::{Graph, NodeIdMap};
pub use kron::{kronem_fit, EmConfig, KroneckerModel, NodeMapping};
pub use pipeline::{baseline1, baseline2, kromfac, KromfacConfig, SearchTrace, Threshold};
pub use ranking::{select_influential, Ranking};

//! Low ℓp-stretch embeddable Steiner trees.
//!
//! A connected graph is normalized, its lengths are raised to the power
//! `p/q`, an AKPW hierarchy is built bottom-up, and a top-down Bartal
//! decomposition refines it while referencing AKPW clusters implicitly.
//! Rescaling the levels makes their union a weighted subgraph, so the tree
//! stitched from the levels embeds into the graph with congestion and
//! dilation at most one.

pub mod akpw;
pub mod bartal;
mod error;
pub mod generate;
pub mod graph;
pub mod hierarchy;
pub mod lca;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod treebuild;
pub mod two_stage;

pub use error::{Error, Result};

/// Cut constant `c_P` of the partition routine: an edge of length `l` is
/// separated at diameter `d` with probability at most `c_P l ln n / d`.
pub const C_PARTITION: f64 = 4.0;

pub use akpw::{akpw, AkpwDecomposition};
pub use bartal::{
    decompose_simple, geometric_series_bound, make_diameter_sequence, moment_switch, validate_decomposition,
    BartalDecomposition, Decomposition, DiameterSequence, C_GEO,
};
pub use generate::{generate, GraphSpec};
pub use graph::{log_n, normalize, MultiGraph, UnionFind};
pub use metrics::{
    decomposition_stretch, laplacian_sandwich_check, monte_carlo, tree_stretch, verify_embedding,
};
pub use partition::{partition, sssp};
pub use pipeline::{full_pipeline, Mode, PipelineOutput};
pub use treebuild::{build_tree, contract_tree, expand_implicit, offline_lca_contract, SteinerTree};
pub use two_stage::{decompose_two_stage, scope, ImplicitDecomposition, ScopeParams};

//! Two-dimensional regularization path of the asymmetric-cost linear SVM.
//!
//! The plane of cost pairs `(C+, C-)` splits into convex facets on which the
//! margin/inside/outside partition of the training samples is fixed and the
//! dual solution is affine. [`explorer::run`] builds that decomposition layer
//! by layer starting from the origin; [`query`] evaluates it and
//! [`validate`] checks it against a direct solver.

pub mod dataset;
pub mod explorer;
pub mod graph;
pub mod io;
pub mod kkt;
pub mod linalg;
pub mod oracle;
pub mod polytope;
pub mod query;
pub mod validate;

pub use dataset::{Dataset, DEFAULT_B_CONST};
pub use explorer::{run, ExploreConfig, ExploreError, Init};
pub use graph::PathGraph;
pub use kkt::{ActiveSets, Costs, Event, EventType};

/// Numerical tolerances shared by all stages.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Feasibility band of the halfplane predicates, relative to `1 + ‖c‖∞`.
    pub feas: f64,
    /// Relative singular-value cutoff of the margin Gram matrix.
    pub rank: f64,
    /// Band around the margin used when reading active sets off a solution.
    pub kkt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas: polytope::DEFAULT_TOL_FEAS,
            rank: linalg::DEFAULT_RANK_TOL,
            kkt: oracle::DEFAULT_KKT_BAND,
        }
    }
}

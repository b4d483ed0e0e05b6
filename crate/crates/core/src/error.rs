//! Error types shared across the solver library.

/// Errors produced by instance validation, solvers, oracles, and simulation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A market instance violates a structural invariant.
    #[error("invalid market instance: {0}")]
    Instance(String),

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An admission was attempted while the channel is still occupied.
    #[error("cannot admit while the channel is occupied (S = {remaining})")]
    OccupiedAdmission { remaining: usize },

    /// An exhaustive oracle was asked for more work than its size guard allows.
    #[error("oracle size guard exceeded: {0}")]
    SizeGuard(String),

    /// Numeric per-slot optimization only supports a few price dimensions.
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// A stationary-policy threshold does not exist for any finite price ratio.
    #[error("threshold unattainable: {0}")]
    ThresholdUnattainable(String),

    /// A constrained price search found no feasible point.
    #[error("empty feasible region: {0}")]
    EmptyFeasibleRegion(String),
}

pub type Result<T> = std::result::Result<T, Error>;

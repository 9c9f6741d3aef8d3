use thiserror::Error;

/// Errors shared across the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A point fell outside the domain a kernel or sampler was declared on.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// `sample_in_subset` was asked to draw from a subset that is not
    /// contained in the enclosing domain.
    #[error("subset not contained in domain: {0}")]
    SubsetNotContained(String),

    /// Input to the hemisphere chart has norm >= 1.
    #[error("point outside hemisphere chart: |x| = {norm}")]
    OutOfChart { norm: f64 },

    /// An adaptively truncated series failed to converge within the term cap.
    #[error("series did not converge within {terms} terms")]
    NonConvergent { terms: usize },

    /// A Taylor expansion was requested at a configuration where the arccos
    /// argument sits on the edge of its domain (coincident or antipodal points).
    #[error("singular expansion: arccos argument {z0} too close to +-1")]
    SingularExpansion { z0: f64 },

    /// Least-squares polynomial fit could not be solved at the requested degree.
    #[error("ill-conditioned polynomial fit at degree {degree}")]
    IllConditionedFit { degree: usize },

    /// Direct solve rejected a system that is numerically rank-deficient.
    /// Carries the numerical rank under the policy in effect.
    #[error("singular system: numerical rank {rank} < size {size}")]
    SingularSystem { rank: usize, size: usize },

    /// Quadrature self-convergence check failed at the node cap.
    #[error("quadrature did not converge: relative change {rel_change} at {nodes} nodes")]
    QuadratureNotConverged { rel_change: f64, nodes: usize },

    /// Operation is not defined for the given kernel family
    /// (e.g. Taylor jets of the non-analytic indicator kernel).
    #[error("unsupported kernel family for this operation: {0}")]
    UnsupportedFamily(String),

    /// Malformed user input (CLI strings, inconsistent dimensions, bad config).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

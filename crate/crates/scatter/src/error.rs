use thiserror::Error;

/// Broad classes of failure, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    NumericalDomain,
    Convergence,
    Internal,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScatterError {
    #[error("elliptic modulus k^2 = {k_squared} is within tolerance of 1")]
    DegenerateModulus { k_squared: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("energy {energy} is too close to the band center E = 0")]
    BandCenter { energy: f64 },
    #[error("energy {energy} is outside the open two-particle band (-4, 4)")]
    OutOfBand { energy: f64 },
    #[error("{what} did not converge: change {achieved:.3e} above tolerance {requested:.3e}")]
    QuadratureNotConverged {
        what: &'static str,
        achieved: f64,
        requested: f64,
    },
    #[error("Toeplitz system singular at E = {energy}: scaled pivot {pivot:.3e}")]
    SingularSystem { energy: f64, pivot: f64 },
    #[error("momentum pairs carry different statistics")]
    StatisticsMismatch,
    #[error("energy shell touches a band edge: |sin k| = {sin:.3e}")]
    ShellDegeneracy { sin: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infidelity at index {index} is not positive ({value})")]
    NonPositiveInfidelity { index: usize, value: f64 },
    #[error("power-law fit needs at least two distinct points, got {points}")]
    Underdetermined { points: usize },
    #[error("truncated lattice of {sites} sites cannot hold packets reaching site {needed}")]
    TruncationTooSmall { sites: usize, needed: f64 },
    #[error("probability {probability:.3e} reached the lattice boundary at t = {time}")]
    BoundaryLeak { probability: f64, time: f64 },
    #[error("probability {probability:.3e} still inside the interaction region at the final time")]
    PacketsNotSeparated { probability: f64 },
}

impl ScatterError {
    pub fn category(&self) -> ErrorCategory {
        use ScatterError::*;
        match self {
            InvalidInput(_) | StatisticsMismatch => ErrorCategory::Usage,
            DegenerateModulus { .. }
            | BandCenter { .. }
            | OutOfBand { .. }
            | SingularSystem { .. }
            | ShellDegeneracy { .. }
            | NonPositiveInfidelity { .. }
            | Underdetermined { .. }
            | TruncationTooSmall { .. } => ErrorCategory::NumericalDomain,
            QuadratureNotConverged { .. } | BoundaryLeak { .. } | PacketsNotSeparated { .. } => {
                ErrorCategory::Convergence
            }
            NonFinite(_) => ErrorCategory::Internal,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        use ScatterError::*;
        match self {
            DegenerateModulus { .. } => "DegenerateModulus",
            NonFinite(_) => "NonFinite",
            BandCenter { .. } => "BandCenter",
            OutOfBand { .. } => "OutOfBand",
            QuadratureNotConverged { .. } => "QuadratureNotConverged",
            SingularSystem { .. } => "SingularSystem",
            StatisticsMismatch => "StatisticsMismatch",
            ShellDegeneracy { .. } => "ShellDegeneracy",
            InvalidInput(_) => "InvalidInput",
            NonPositiveInfidelity { .. } => "NonPositiveInfidelity",
            Underdetermined { .. } => "Underdetermined",
            TruncationTooSmall { .. } => "TruncationTooSmall",
            BoundaryLeak { .. } => "BoundaryLeak",
            PacketsNotSeparated { .. } => "PacketsNotSeparated",
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate point: every coordinate is at or below the zero tolerance")]
    DegeneratePoint,

    #[error("no ray: point {0:?} lies inside the simplex")]
    NoRay(Vec<f64>),

    #[error("point {0:?} is not a vertex of the guest's membership lattice")]
    OffGrid(Vec<f64>),

    #[error("too many guest subsets to enumerate ({count} > cap {cap})")]
    TooManySubsets { count: u128, cap: u128 },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("tau neighborhoods touch their avoided facet for (guest, piece) pairs {pairs:?}")]
    FacetContact { pairs: Vec<(usize, usize)> },

    #[error("tolerance diagnosis: {0}")]
    ToleranceDiagnosis(String),

    #[error("no convergence: best residual {residual:.3e} at {best_point:?}; {diagnosis}")]
    NoConvergence {
        best_point: Vec<f64>,
        residual: f64,
        diagnosis: String,
    },

    #[error("certificate failure at {point:?}: {details}")]
    CertificateFailure { point: Vec<f64>, details: String },

    #[error("oracle budget exceeded after scanning {scanned} of {total} grid points")]
    BudgetExceeded { scanned: usize, total: usize },
}

impl Error {
    /// True for failures that mean the input does not satisfy the cover
    /// hypotheses (as opposed to resolution or tolerance problems).
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(
            self,
            Error::HypothesisViolation(_) | Error::FacetContact { .. } | Error::DegeneratePoint
        )
    }
}

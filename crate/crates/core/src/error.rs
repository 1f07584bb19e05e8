use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index ({m},{n}) lies outside the stored window")]
    IndexOutOfWindow { m: i64, n: i64 },

    #[error("gram matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("{operator} is not well defined on the embedded window (residual {residual:e})")]
    IllDefined {
        operator: &'static str,
        residual: f64,
    },

    #[error(
        "window not saturated: span of |n| <= N-1 has rank {domain_rank}, space has rank {rank}; \
         increase --max-freq window"
    )]
    NotSaturated { domain_rank: usize, rank: usize },

    #[error(
        "shift B does not leave the domain of A invariant (residual {residual:e}); \
         increase --max-freq window"
    )]
    DomainNotInvariant { residual: f64 },

    #[error("least-squares B is not an isometry (defect {defect:e})")]
    IsometryViolation { defect: f64 },

    #[error("validation failed: {name} = {value:e} exceeds {threshold:e}")]
    ValidationFailed {
        name: String,
        value: f64,
        threshold: f64,
    },

    #[error("numerical rank is tolerance sensitive (gap ratio {gap:.3})")]
    RankAmbiguity { gap: f64 },

    #[error(
        "1 is (numerically) an eigenvalue of U (distance {distance:e}){}; try another seed",
        parameter_index.map(|i| format!(" for parameter #{i}")).unwrap_or_default()
    )]
    OnePointSpectrum {
        distance: f64,
        parameter_index: Option<usize>,
    },

    #[error("U does not commute with B (residual {residual:e})")]
    CommutationFailed { residual: f64 },

    #[error("A_U and B do not commute (residual {residual:e})")]
    CommutationTooLarge { residual: f64 },

    #[error(
        "B eigenvalue clusters separated by {separation:e}, within (tol, 10 tol) for tol = {tol:e}; \
         choose the cluster tolerance explicitly"
    )]
    ClusterAmbiguity { separation: f64, tol: f64 },

    #[error("domain D(A) + (C - I)H2 has rank {rank}, expected {expected}")]
    DeficientDomain { rank: usize, expected: usize },

    #[error("A_C - lambda I is numerically singular (condition {condition:e})")]
    SingularPencil { condition: f64 },

    #[error("computation failed: {0}")]
    Computation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

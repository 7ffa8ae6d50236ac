use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("projective pair (0, 0) does not name a point")]
    ZeroPair,

    #[error("non-finite coordinate in projective pair")]
    NonFinite,

    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,

    #[error("constant polynomial has no roots")]
    ConstantPolynomial,

    #[error("precision of {bits} bits is not supported by this scalar type (allowed {min}..={max})")]
    InvalidPrecision { bits: u32, min: u32, max: u32 },

    #[error("root finder did not converge; worst relative residual {worst_residual:e}")]
    NonConvergence { worst_residual: f64 },

    #[error("root clusters {separation:e} apart, closer than 10x cluster tolerance {cluster_tol:e}")]
    IllSeparated { separation: f64, cluster_tol: f64 },

    #[error("numerator and denominator share a factor of degree {gcd_degree}")]
    NotCoprime { gcd_degree: usize },

    #[error("map degree {degree} is below 2")]
    DegreeTooLow { degree: usize },

    #[error("branch indices sum to {computed}, expected 2N-2 = {expected}")]
    RiemannHurwitz { computed: usize, expected: usize },

    #[error("fiber bookkeeping failed: {0}")]
    FiberInconsistent(String),

    #[error("{what} exceeds guard {limit}")]
    Guard { what: String, limit: u64 },

    #[error("at backward level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("beta = {beta} does not satisfy N e^-beta < 1 for degree {degree}")]
    InvalidBeta { beta: f64, degree: usize },

    #[error("1 - c_1 = {denominator:e} is not positive; parameters do not converge")]
    DegenerateRecovery { denominator: f64 },

    #[error("independent computations disagree: {0}")]
    RouteMismatch(String),

    #[error("f_{m} has no real root in working precision")]
    NoRealRoot { m: u32 },

    #[error("coefficient does not fit the working precision")]
    CoefficientOverflow,

    #[error("family check failed for m = {m}: {detail}")]
    FamilyCheck { m: u32, detail: String },

    #[error("invariants computed to different depths ({left} vs {right})")]
    DepthMismatch { left: usize, right: usize },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Whether a retry at higher working precision may help.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergence { .. }
            | Error::IllSeparated { .. }
            | Error::RiemannHurwitz { .. }
            | Error::FiberInconsistent(_)
            | Error::RouteMismatch(_)
            | Error::NoRealRoot { .. }
            | Error::CoefficientOverflow
            | Error::FamilyCheck { .. } => true,
            Error::AtLevel { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::AtLevel { level, source: Box::new(self) }
    }
}

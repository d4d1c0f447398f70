use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant carries a stable machine-readable code (see [`Error::code`]) that the
/// command line front end puts in its error envelope.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("element {label} is outside the ground set {{1,...,{n}}}")]
    Domain { label: usize, n: usize },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("{what}: size {size} exceeds the enumeration bound {bound}")]
    SizeBound {
        what: &'static str,
        size: usize,
        bound: usize,
    },

    #[error("invalid matroid: {0}")]
    InvalidMatroid(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("arity mismatch: expected |T| = {expected}, got {actual}")]
    Arity { expected: usize, actual: usize },

    #[error("rank mismatch: {0}")]
    Rank(String),

    #[error("near the discriminant: {0}")]
    NearDiscriminant(String),

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error("structure invalid: {0}")]
    StructureInvalid(String),

    #[error("coefficient not constant in z: {0}")]
    Flatness(String),

    #[error("well-definedness failure for T = {system:?}: spread {spread:e} > {tolerance:e}")]
    WellDefinedness {
        system: Vec<u32>,
        spread: f64,
        tolerance: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("schema: {0}")]
    Schema(String),

    /// An outcome that a theorem rules out. Seeing this means a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } | Error::Mismatch(_) => "domain",
            Error::SizeBound { .. } => "size_bound",
            Error::InvalidMatroid(_) => "invalid_matroid",
            Error::Precondition(_) => "precondition",
            Error::Arity { .. } => "arity",
            Error::Rank(_) => "rank",
            Error::NearDiscriminant(_) => "near_discriminant",
            Error::Continuation(_) => "continuation",
            Error::StructureInvalid(_) => "structure_invalid",
            Error::Flatness(_) => "flatness",
            Error::WellDefinedness { .. } => "well_definedness",
            Error::Unsupported(_) => "unsupported",
            Error::Schema(_) => "schema",
            Error::Internal(_) => "internal",
        }
    }

    /// `true` for errors caused by the input rather than by a defect in this crate.
    pub fn is_domain_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

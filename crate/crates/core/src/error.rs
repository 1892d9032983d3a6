use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A matrix is outside the domain of an operation (e.g. a filter that is
    /// not positive semidefinite).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("format error: {0}")]
    Format(String),

    /// A density matrix violates Hermiticity, unit trace or positivity.
    #[error("unphysical state: {invariant} ({detail})")]
    Physicality { invariant: &'static str, detail: String },

    /// A quantity that must be real came out with a significant imaginary part.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("filter kills state support (N = {0:.3e})")]
    Annihilation(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

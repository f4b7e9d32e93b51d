use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An address does not denote a vertex of the tree, or is not in
    /// canonical form.
    #[error("malformed address `{addr}`: {reason}")]
    MalformedAddress { addr: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `path_product` was asked for a pair that is not on one ancestry line.
    #[error("`{v}` is not an ancestor of `{u}`")]
    NotAnAncestor { v: String, u: String },

    /// The operation is undefined for this tree kind or weight family.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The exponent set contains duplicate tuples, so no direction can
    /// separate a unique minimizer.
    #[error("degenerate exponent set: {0}")]
    DegenerateExponents(String),

    /// A witness construction needs a larger iterate to keep the bump
    /// supports disjoint from the data.
    #[error("iterate n = {given} is too small; minimal admissible n is {minimal}")]
    NeedsLargerN { given: u32, minimal: u32 },

    /// A tree or weight file (or an inline vector literal) failed to parse.
    #[error("cannot parse {what}: {reason}")]
    Parse { what: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub fn malformed(addr: impl std::fmt::Display, reason: impl Into<String>) -> Self {
        Error::MalformedAddress {
            addr: addr.to_string(),
            reason: reason.into(),
        }
    }
}

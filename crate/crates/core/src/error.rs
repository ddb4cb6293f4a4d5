use alloc::string::String;

/// Failure modes shared by every module.
///
/// The variants are coarse on purpose: callers (notably the CLI) map them to
/// exit codes, and the message carries the specifics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Operand sizes or qubit counts do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A requested dense object exceeds the configured size cap.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A numerical routine could not meet its tolerance or overflowed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A structural precondition (Hermiticity, symmetry, intertwining) failed.
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

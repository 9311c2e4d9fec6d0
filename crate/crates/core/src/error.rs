use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Quantum numbers or other inputs outside their mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration that is internally inconsistent (dimensions, ranges).
    #[error("configuration error: {0}")]
    Config(String),

    /// An integrator, eigensolver or root finder failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A trajectory failed; carries the trajectory index and seed.
    #[error("trajectory {index} (seed {seed:#018x}) failed: {source}")]
    Trajectory {
        index: usize,
        seed: u64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Config(alloc::format!($($arg)*)) };
}
macro_rules! numerical {
    ($($arg:tt)*) => { $crate::error::Error::Numerical(alloc::format!($($arg)*)) };
}
pub(crate) use {config_err, domain, numerical};

//! Desk-scale simulator for quantum key distribution in decoherence-free
//! subspaces.
//!
//! The library provides:
//! - [`quantum`]: an exact dense state-vector engine for 1-4 qubits,
//! - [`channels`]: collective dephasing / rotation noise and photon loss,
//! - [`codecs`]: the 2-qubit DFS encoders and active/passive/detector decoders
//!   for both protocols,
//! - [`adversary`]: intercept-resend attacks, the photon-blocking attack, and
//!   an operational security-reduction equivalence checker,
//! - [`postprocessing`]: sifting, check-bit estimation, and classical CSS key
//!   distillation over GF(2),
//! - [`session`]: seeded end-to-end protocol sessions with transcripts,
//! - [`cli`]: config parsing and machine-readable output for the `dfs-qkd`
//!   binary.

pub mod adversary;
pub mod channels;
pub mod cli;
pub mod codecs;
pub mod postprocessing;
pub mod quantum;
pub mod session;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A state or attack would exceed the 4-qubit capacity.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// Invalid argument, matrix, or configuration.
    #[error("validation error: {0}")]
    Validation(String),
    /// I/O failure, with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

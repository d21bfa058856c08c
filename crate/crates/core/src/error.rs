use thiserror::Error;

use crate::transport::PartyId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside the representable fixed-point range (|v| < {bound})")]
    Range { value: f64, bound: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("operation requires party {expected}, called on {actual}")]
    Role { expected: &'static str, actual: PartyId },
    #[error("transport failure on {party}: {msg}")]
    Transport { party: PartyId, msg: String },
    #[error("protocol desync on {party} receiving from {from}: {msg}")]
    Desync { party: PartyId, from: PartyId, msg: String },
    #[error("watchdog: {party} blocked in recv(from={from}, tag={tag}) for {secs:.1}s")]
    Watchdog { party: PartyId, from: PartyId, tag: u8, secs: f64 },
    #[error("parse error in {file} at line {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("party thread panicked: {0}")]
    Panic(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Orchestration for the `quadmpc` binary: configuration, GCN runs in
//! local-sim or sockets mode and JSON-lines metrics.

pub mod config;
pub mod error;
pub mod metrics;
pub mod run;

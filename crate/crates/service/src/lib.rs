//! Real-time telepresence sessions on top of `telewalk-core`: tracker ingest,
//! the per-tick pipeline, NDJSON wire protocol, session logs, replay and the
//! headless harnesses behind the `telewalk` CLI.

pub mod client;
pub mod config;
pub mod headless;
pub mod log;
pub mod participant;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod session;
pub mod svg;
pub mod trial;

pub type Result<T> = anyhow::Result<T>;

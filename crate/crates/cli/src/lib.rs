//! Library side of the `tempent` binary: configuration, subcommands and the
//! benchmark protocol.

pub mod bench;
pub mod commands;
pub mod config;

pub use config::{ConfigBuilder, RunConfig, UsageError};

/// Process exit code for an error raised by a subcommand.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use tempent_core::Error;
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::Numerical(_) => 3,
            Error::Parse { .. } | Error::InvalidEvent { .. } | Error::StoreFormat(_) | Error::Io(_) => 2,
            _ => 1,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    1
}

//! Experiment driver behind the `fpcam` binary.
//!
//! Each subcommand writes its outputs plus a `manifest.txt` into one
//! directory. Exit codes: 0 success, 2 configuration or usage error,
//! 3 numerical failure, 4 I/O or file-format error.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "FPCAM_OUT";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// A configuration or usage problem (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit code for an error, from the first cause that classifies it.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use fpcam_core::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) | E::Dimension { .. } | E::Invalid(_) => EXIT_USAGE,
                E::ZeroOperator | E::Divergence { .. } => EXIT_NUMERICAL,
                E::Format(_) | E::Io(_) => EXIT_IO,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    1
}

/// `--out` if given, then the config's `output_dir`, then
/// `$FPCAM_OUT/<command>`, then `fpcam-out/<command>`.
pub fn resolve_output(flag: Option<&Path>, config: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = flag.or(config) {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fpcam-out"));
    root.join(command)
}

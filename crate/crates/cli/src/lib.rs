//! Configuration, command dispatch and file emission for the `wptrx` tool.

use std::path::{Path, PathBuf};

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{dispatch, Command, Report};
pub use config::{default_config, parse_config, parse_with_overrides, ToolConfig, DEFAULT_CONFIG};
pub use error::{CliError, Location};

/// Environment variable naming the output directory when `--out` is absent.
pub const OUT_ENV: &str = "WPTRX_OUT";

/// Shortest decimal text that reads back to the same `f64`.
///
/// Plain notation for magnitudes in `[1e-4, 1e16)`, scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Output directory: `--out`, then `$WPTRX_OUT`, then `output.dir` from
/// the configuration, then the working directory.
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<&str>, cfg: &ToolConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

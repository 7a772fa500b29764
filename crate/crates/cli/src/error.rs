use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Override(String),
    /// Not set anywhere; the default clashes with another setting.
    Default(&'static str),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Override(o) => write!(f, "override '{o}'"),
            Location::Default(key) => write!(f, "default {key}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{at}: {msg}")]
    Config { at: Location, msg: String },

    #[error("{command}: {source}")]
    Command {
        command: &'static str,
        #[source]
        source: wptrx_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn config(at: Location, msg: String) -> Self {
        CliError::Config { at, msg }
    }
}

use std::fmt;

/// Failure classes, each with a fixed process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad arguments or configuration (exit 2).
    Usage(String),
    /// Reading or writing a file failed (exit 1).
    Io(String),
    /// `--check-ordering` found NMED not strictly decreasing (exit 3).
    Ordering(String),
    /// A circuit disagreed with the reference arithmetic (exit 4).
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Ordering(_) => 3,
            CliError::Verify(_) => 4,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Ordering(m) | CliError::Verify(m) => f.write_str(m),
        }
    }
}

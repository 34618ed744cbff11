use std::fmt;

/// A failure reported as `error[CODE]: message` on one line.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("E_CONFIG", message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new("E_IO", format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace('\n', " ");
        write!(f, "error[{}]: {}", self.code, one_line)
    }
}

impl From<nqp_core::Error> for CliError {
    fn from(e: nqp_core::Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("E_IO", e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

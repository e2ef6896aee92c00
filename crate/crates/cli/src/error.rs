use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },
    #[error("numerical error in {module}: {source}", module = .source.module())]
    Numerical {
        #[from]
        source: ocs_core::Error,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("cannot diff reports: {0}")]
    Diff(String),
}

impl CliError {
    /// Process exit status: 2 for configuration and input problems, 3 for
    /// numerical rejections.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

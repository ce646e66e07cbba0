use thiserror::Error;

pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config, unreadable input files.
    #[error("{0}")]
    Usage(String),
    /// The computation itself failed or the data cannot be estimated.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl From<fracnoise::Error> for CliError {
    fn from(e: fracnoise::Error) -> Self {
        match e {
            fracnoise::Error::Config(_) | fracnoise::Error::InvalidHurst(_) => CliError::Usage(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

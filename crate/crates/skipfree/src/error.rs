use std::fmt;

/// Everything the front end can fail with, sorted into the two non-zero exit codes.
#[derive(Debug)]
pub enum CliError {
    /// unreadable or malformed input files
    Input(String),
    /// a chain that fails structural validation
    Validation(Vec<String>),
    /// a requested class check came out false
    CheckFailed(String),
    Core(skipfree_core::Error),
    Output(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use skipfree_core::Error as E;
        match self {
            CliError::Input(_) | CliError::Validation(_) | CliError::CheckFailed(_) => 1,
            CliError::Output(_) => 2,
            CliError::Core(e) => match e {
                E::DivergentPotential | E::SpectralDegeneracy(_) | E::Numeric(_) | E::IncompleteBundle(_) => 2,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Validation(v) => {
                write!(f, "validation failed:")?;
                for line in v {
                    write!(f, "\n  {line}")?;
                }
                Ok(())
            }
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output(e) => write!(f, "write error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<skipfree_core::Error> for CliError {
    fn from(e: skipfree_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(std::io::Error::other(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;

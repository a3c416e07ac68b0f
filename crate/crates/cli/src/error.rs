use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    Core(fracfront::Error),
    /// A simulation failure, reported with the last stable time.
    Run(Box<fracfront::solver::RunFailure>),
    /// Missing or unreadable input named by the command line or config.
    Input(String),
    /// The `t*` search found no certified time.
    NotFound(String),
    Io(String),
    /// The run finished but its check did not pass.
    Failed(String),
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn input(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        use fracfront::Error as E;
        match self {
            CliError::Run(f) => CliError::Core(f.error.clone()).exit_code(),
            CliError::Input(_) => 2,
            CliError::Core(E::Config { .. } | E::Domain(_) | E::Invariant(_) | E::Unsupported(_)) => 2,
            CliError::Core(E::Tolerance { .. } | E::Stability { .. } | E::Resource(_)) => 3,
            CliError::Failed(_) => 3,
            CliError::NotFound(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Run(r) => write!(f, "{r}"),
            CliError::Input(m) => write!(f, "cannot read input {m}"),
            CliError::NotFound(m) => write!(f, "certificate not found: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failed(m) => write!(f, "check failed: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<fracfront::Error> for CliError {
    fn from(e: fracfront::Error) -> Self {
        CliError::Core(e)
    }
}

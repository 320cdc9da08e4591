use fraclab_core::CoreError;

/// Command-level errors with their process exit codes.
#[derive(Debug)]
pub enum CmdError {
    /// Exit code 2: configuration/usage problems.
    Config(String),
    /// Exit code 3: solver non-convergence or numeric failure.
    Solver(String),
    /// Exit code 4: acceptance criteria failed.
    Acceptance(String),
    /// Exit code 1: I/O and everything else.
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Solver(_) => 3,
            CmdError::Acceptance(_) => 4,
            CmdError::Io(_) => 1,
        }
    }

    /// Core errors raised while building objects from a config are config
    /// errors; errors raised mid-computation are solver errors.
    pub fn from_core_config(e: CoreError) -> Self {
        CmdError::Config(e.to_string())
    }

    pub fn from_core_run(e: CoreError) -> Self {
        match e {
            CoreError::Parameter(_) | CoreError::Schedule(_) => CmdError::Config(e.to_string()),
            _ => CmdError::Solver(e.to_string()),
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Solver(m) => write!(f, "solver error: {m}"),
            CmdError::Acceptance(m) => write!(f, "acceptance failure: {m}"),
            CmdError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CmdError {}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

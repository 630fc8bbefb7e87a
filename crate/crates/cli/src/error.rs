use std::fmt;

/// Failure of a command, carrying everything needed for the exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration; one diagnostic per violation. Exit code 2.
    Invalid(Vec<String>),
    /// The numerics failed (e.g. the oracle did not converge). Exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn lines(&self) -> Vec<String> {
        match self {
            CliError::Invalid(lines) => lines.clone(),
            CliError::Numerical(msg) => vec![msg.clone()],
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lines().join("\n"))
    }
}

impl From<aoii_core::Error> for CliError {
    fn from(e: aoii_core::Error) -> Self {
        match e {
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            aoii_core::Error::InvalidPolicy(violations) => {
                CliError::Invalid(violations.iter().map(ToString::to_string).collect())
            }
            e => CliError::invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::invalid(format!("output: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::invalid(format!("output: {e}"))
    }
}

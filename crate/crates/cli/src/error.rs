use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: config, parameters, files. Exit code 2.
    #[error("{0}")]
    Validation(String),

    /// The theorem check ran but some criterion failed. Exit code 3.
    #[error("{0} criteria failed")]
    ChecksFailed(usize),

    #[error(transparent)]
    Core(twophoton::Error),

    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::ChecksFailed(_) => 3,
            CliError::Core(_) | CliError::Output(_) => 1,
        }
    }
}

impl From<twophoton::Error> for CliError {
    fn from(e: twophoton::Error) -> Self {
        use twophoton::Error as E;
        match e {
            E::InvalidSpace(_)
            | E::Truncation { .. }
            | E::DegenerateAmplitude(_)
            | E::ShapeMismatch { .. }
            | E::InvalidState(_)
            | E::InvalidModel(_)
            | E::InvalidConfig(_)
            | E::InvalidInput(_)
            | E::NotHurwitz(_)
            | E::SingularFastBlock(_)
            | E::Parse { .. } => CliError::Validation(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

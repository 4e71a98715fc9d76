use thiserror::Error;
use ura_bounds::BoundError;

/// CLI failures, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Domain(String),

    #[error("{0}")]
    Bracket(String),

    #[error("{0}")]
    Io(String),

    #[error("{0}")]
    ValidationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Domain(_) => 4,
            CliError::Bracket(_) => 5,
            CliError::Io(_) => 6,
            CliError::ValidationFailed(_) => 7,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Domain(_) => "domain",
            CliError::Bracket(_) => "bracket",
            CliError::Io(_) => "io",
            CliError::ValidationFailed(_) => "validation",
        }
    }

    /// `error code=<n> kind=<kind> message="<text>"`, with `"` and `\`
    /// escaped and the message kept on one line.
    pub fn machine_line(&self) -> String {
        let msg: String = self
            .to_string()
            .chars()
            .flat_map(|c| match c {
                '"' => vec!['\\', '"'],
                '\\' => vec!['\\', '\\'],
                '\n' | '\r' => vec![' '],
                c => vec![c],
            })
            .collect();
        format!("error code={} kind={} message=\"{msg}\"", self.exit_code(), self.kind())
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        let text = e.to_string();
        match e {
            BoundError::Usage(_) => CliError::Usage(text),
            BoundError::InvalidParams(_) | BoundError::Config(_) => CliError::Config(text),
            BoundError::Domain(_) => CliError::Domain(text),
            BoundError::Bracket { .. } => CliError::Bracket(text),
        }
    }
}

pub fn io_error(what: &str, path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{what} {}: {e}", path.display()))
}

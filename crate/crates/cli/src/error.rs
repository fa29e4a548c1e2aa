use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use tubepose_core::Error;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_ESTIMATION: u8 = 3;

/// Failure reported on stderr as one JSON object.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub code: &'static str,
    pub exit_code: u8,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// The offending scene-config tube entry, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube: Option<serde_json::Value>,
}

impl CliError {
    pub fn input(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            exit_code: EXIT_INPUT,
            message: message.into(),
            path: None,
            tube: None,
        }
    }

    pub fn estimation(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            exit_code: EXIT_ESTIMATION,
            message: message.into(),
            path: None,
            tube: None,
        }
    }

    pub fn at(mut self, path: &Path) -> Self {
        self.path = Some(path.display().to_string());
        self
    }

    /// Writes the record to stderr and returns the matching exit code.
    pub fn report(&self) -> ExitCode {
        let record = serde_json::json!({ "error": self });
        eprintln!("{record}");
        ExitCode::from(self.exit_code)
    }
}

/// Classifies a core error raised while reading `path`. `parse_code` is used
/// for syntax and schema problems.
pub fn reading<'a>(path: &'a Path, parse_code: &'static str) -> impl FnOnce(Error) -> CliError + 'a {
    move |e| {
        let code = match e {
            Error::Io(_) => "E_IO",
            Error::UnsupportedFormat(_) => "E_UNSUPPORTED_FORMAT",
            _ => parse_code,
        };
        CliError::input(code, e.to_string()).at(path)
    }
}

pub fn writing(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
    move |e| CliError::input("E_IO", e.to_string()).at(path)
}

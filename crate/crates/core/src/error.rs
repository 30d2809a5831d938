use std::fmt;

/// A problem found while reading one of the delimited-text inputs.
///
/// Line numbers are 1-based; the column is the 1-based field index when the
/// problem is attributable to a single field.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.column {
            Some(col) => write!(f, "line {}, field {}: {}", self.line, col, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

impl std::error::Error for ParseError {}

/// Union of every module error, used at the CLI and FFI boundaries.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Temporal(#[from] crate::temporal::TemporalError),
    #[error(transparent)]
    Uncertainty(#[from] crate::uncertainty::UncertaintyError),
    #[error(transparent)]
    Medium(#[from] crate::medium::MediumError),
    #[error(transparent)]
    Transport(#[from] crate::transport::TransportError),
    #[error(transparent)]
    Particles(#[from] crate::particles::ParticleError),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses one numeric field, attaching line/field context on failure.
pub(crate) fn parse_f64(token: &str, line: usize, column: usize) -> Result<f64, ParseError> {
    let token = token.trim();
    let value: f64 = token
        .parse()
        .map_err(|_| ParseError::new(line, Some(column), format!("not a number: {token:?}")))?;
    if !value.is_finite() {
        return Err(ParseError::new(line, Some(column), format!("non-finite value: {token:?}")));
    }
    Ok(value)
}

/// Strips a `#` comment and surrounding whitespace.
pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

/// Splits on commas, semicolons, tabs or runs of spaces.
pub(crate) fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

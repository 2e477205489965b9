use std::fmt;

use dwl::bdr::BdrError;
use dwl::datasets::DatasetError;
use dwl::dnet::DNetError;
use dwl::metrics::MetricsError;
use dwl::nn::NnError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Command failure, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) if m.starts_with("numerical failure") => f.write_str(m),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let msg = e.to_string();
        match e {
            DatasetError::Io(_)
            | DatasetError::Format(_)
            | DatasetError::ParseError { .. }
            | DatasetError::RaggedRow { .. }
            | DatasetError::EmptyFile => CliError::Io(msg),
            DatasetError::BadConfig(_)
            | DatasetError::CenterPlacementFailure { .. }
            | DatasetError::TooSmall(_)
            | DatasetError::DimMismatch { .. } => CliError::Config(msg),
        }
    }
}

impl From<BdrError> for CliError {
    fn from(e: BdrError) -> Self {
        let msg = e.to_string();
        match e {
            BdrError::NumericalFailure(_) | BdrError::RankDeficient { .. } => CliError::Numerical(msg),
            BdrError::BadShape(_) | BdrError::BadConfig(_) | BdrError::DimMismatch { .. } => CliError::Config(msg),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DNetError> for CliError {
    fn from(e: DNetError) -> Self {
        match e {
            DNetError::Nn(e) => e.into(),
            DNetError::Bdr(e) => e.into(),
            DNetError::Dataset(e) => e.into(),
            DNetError::Metrics(e) => e.into(),
            e @ DNetError::NanLoss { .. } => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(CliError::from(DNetError::NanLoss { epoch: 1, batch: 2 }).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::from(DNetError::BadTag("x".into())).exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::from(DatasetError::EmptyFile).exit_code(), EXIT_IO);
        assert_eq!(CliError::from(BdrError::RankDeficient { column: 0 }).exit_code(), EXIT_NUMERICAL);
        let shape = DNetError::ShapeMismatch { expected: "25".into(), got: "7".into() };
        assert_eq!(CliError::from(shape).exit_code(), EXIT_CONFIG);
    }
}

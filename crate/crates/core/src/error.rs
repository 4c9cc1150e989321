use std::path::PathBuf;

use crate::grid::GridDims;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid must be at least 2x2, got {rows}x{cols}")]
    InvalidDims { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimsMismatch { expected: GridDims, found: GridDims },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("sampling mask retains no frequencies")]
    EmptyMask,

    #[error("sampling plan does not match the line set: {0}")]
    PlanMismatch(String),

    #[error("line {line} is not valid on a {dims} grid")]
    InvalidLine { line: String, dims: GridDims },

    #[error("mode analysis needs at least one difference map")]
    EmptyStack,

    #[error("calibration is degenerate: {0}")]
    DegenerateTraining(&'static str),

    #[error("phantom needs at least 16x16 pixels, got {0}")]
    TooSmall(GridDims),

    #[error("{}: file not found", .0.display())]
    NotFound(PathBuf),

    #[error("{}: unsupported format ({reason})", path.display())]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("{}: corrupt file ({reason})", path.display())]
    CorruptFile { path: PathBuf, reason: String },

    #[error("{}: refusing to overwrite existing file", .0.display())]
    WouldOverwrite(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

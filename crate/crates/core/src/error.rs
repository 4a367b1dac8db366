use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("saliency backend failure: {0}")]
    Backend(String),

    #[error("no score for video `{video_id}` frame {frame_index}")]
    MissingScore { video_id: String, frame_index: usize },

    #[error("score {value} from `{source_name}` is outside [0, 1]")]
    ScoreOutOfRange { value: f64, source_name: String },

    #[error("malformed input `{}`: {reason}", path.display())]
    MalformedInput { path: PathBuf, reason: String },

    #[error("no frames found in `{}`", .0.display())]
    EmptyDirectory(PathBuf),

    #[error("frame `{}` is {found:?}, expected {expected:?}", path.display())]
    MixedDimensions {
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("video `{video_id}` failed: {source}")]
    Video {
        video_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn malformed_input(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::MalformedInput {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool.
    ///
    /// 2 for invalid arguments or configuration, 3 for malformed input files,
    /// 4 for a failure while processing a video.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::MalformedInput { .. }
            | Error::EmptyDirectory(_)
            | Error::MixedDimensions { .. }
            | Error::Io { .. } => 3,
            Error::DimensionMismatch { .. }
            | Error::Backend(_)
            | Error::MissingScore { .. }
            | Error::ScoreOutOfRange { .. }
            | Error::Video { .. } => 4,
        }
    }
}

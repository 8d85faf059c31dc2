use std::path::PathBuf;

/// Errors produced by the analysis, rendering and evaluation modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported wav encoding in {path}: {detail}")]
    UnsupportedWav { path: PathBuf, detail: String },

    #[error("image {path}: {detail}")]
    Image { path: PathBuf, detail: String },

    #[error("audio contains no samples")]
    EmptyAudio,

    #[error("audio is shorter than one analysis frame ({got} < {needed} samples)")]
    TooShort { needed: usize, got: usize },

    #[error("spectrogram contains no frames")]
    EmptySpectrogram,

    #[error("sequence is empty")]
    EmptySequence,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("zero-length or all-zero latent vector")]
    ZeroVector,

    #[error("caption rows ({rows}) do not match segment count ({segments})")]
    CaptionCountMismatch { rows: usize, segments: usize },

    #[error("caption command {command:?} failed: {message}")]
    CaptionCommand { command: String, message: String },

    #[error("unknown genre label: {0:?}")]
    UnknownGenre(String),

    #[error("frame index {index} missing from frame directory")]
    FrameGap { index: usize },

    #[error("frame {path} would be overwritten (pass the overwrite flag to allow)")]
    FrameCollision { path: PathBuf },

    #[error("frame store contains no frames")]
    EmptyFrameStore,

    #[error("backend {backend} failed{}: {message}", frame.map(|f| format!(" at frame {f}")).unwrap_or_default())]
    Backend {
        backend: String,
        frame: Option<usize>,
        message: String,
    },

    #[error("encoder command {command:?} failed: {message}")]
    Encoder { command: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error points at bad user input rather than a failing
    /// external process.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Backend { .. } | Error::Encoder { .. })
    }
}

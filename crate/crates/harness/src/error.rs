use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] vll_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{0}")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use vll_core::Error as E;
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::CheckFailed(_) => EXIT_CHECK,
            Self::Core(E::InvalidConfiguration(_) | E::InvalidData(_) | E::UnderResolvedLayer { .. }) => EXIT_CONFIG,
            Self::Core(_) | Self::Io { .. } => EXIT_RUNTIME,
        }
    }
}

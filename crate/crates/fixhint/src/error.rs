use std::io;
use std::path::PathBuf;

use fixhint_core::bundle::TrainError;
use fixhint_core::classify::ClassifyError;
use fixhint_core::corpus::CorpusError;
use fixhint_core::recommend::RecommendError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Line { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Corpus { path: PathBuf, source: CorpusError },
    #[error("{}: bundle schema version {found}, this build reads version {expected}", path.display())]
    Version { path: PathBuf, found: u64, expected: u32 },
    #[error("{}: corrupt bundle: {source}", path.display())]
    Corrupt { path: PathBuf, source: serde_json::Error },
    #[error("link pattern {name:?}: {message}")]
    Pattern { name: String, message: String },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

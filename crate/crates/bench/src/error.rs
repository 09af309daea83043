use thiserror::Error;
use vimkit::VimError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Vim(#[from] VimError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no features selected; evaluate the top-k ranked features instead (k = {0} by default)")]
    EmptySelection(usize),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.display().to_string(), source }
}

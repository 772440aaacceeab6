use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("channel matrix is identically zero")]
    DegenerateChannel,

    #[error("column {0} of the target precoder is identically zero")]
    DegenerateColumn(usize),

    #[error("member sum of cluster {0} is identically zero")]
    DegenerateCluster(usize),

    #[error("block {0} of the target singular vectors is identically zero")]
    DegenerateBlock(usize),

    #[error("hybrid precoder collapses to zero after baseband refinement")]
    DegeneratePrecoder,

    #[error("rate bound undefined: {0}")]
    BoundUndefined(String),

    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    NoConvergence { rows: usize, cols: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("trial {trial} (seed {seed:#018x}) failed: {source}")]
    Trial {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

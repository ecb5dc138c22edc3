use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: String, value: f64 },

    #[error("invalid bounds for {name}: low {low} > high {high}")]
    InvalidBounds { name: String, low: f64, high: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown bias structure `{0}`")]
    UnknownBias(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("no stratum labels in dataset")]
    NoStrata,

    #[error("invalid MCMC configuration: {0}")]
    InvalidConfig(String),

    #[error("sampler initialization failed: {0}")]
    NonFiniteInit(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("malformed input {path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            name: name.to_string(),
            value,
        })
    }
}

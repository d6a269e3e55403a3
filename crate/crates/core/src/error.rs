use std::path::PathBuf;

use thiserror::Error;

use crate::lattice::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("points {0} and {1} are not lattice neighbours")]
    NotAdjacent(Box<Point>, Box<Point>),

    #[error("direction vector must be non-zero")]
    ZeroDirection,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("region too large for exhaustive search: {0} vertices")]
    RegionTooLarge(usize),

    #[error("endpoint {0} lies outside the search domain")]
    OutsideDomain(Box<Point>),

    #[error("no path between {0} and {1} inside the search domain")]
    Unreachable(Box<Point>, Box<Point>),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("cannot merge reports: {0}")]
    Merge(String),

    #[error("i/o error on {path}: {source}")]
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
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

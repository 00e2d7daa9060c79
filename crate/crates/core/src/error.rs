use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("variance series is empty")]
    EmptySeries,

    #[error("invalid variance series: {0}")]
    InvalidSeries(String),

    #[error("thresholds have not been computed")]
    NotComputed,

    #[error("bad keyframe listing at line {line}: {reason}")]
    BadListing { line: usize, reason: String },

    #[error("malformed JSON at byte offset {offset}: {message}")]
    ParseError { offset: usize, message: String },

    #[error("schema error at `{0}`")]
    SchemaError(String),

    #[error("document contains no reconstruction")]
    NoReconstruction,

    #[error("malformed PLY: {0}")]
    Ply(String),

    #[error("invalid rotation vector: {0}")]
    InvalidRotation(String),

    #[error("reconstruction has no shots")]
    EmptyModel,

    #[error("coincident panorama positions: {from} -> {to}")]
    DegenerateEdge { from: String, to: String },

    #[error("distance {distance} outside [{min}, {max}]")]
    RangeError { distance: f64, min: f64, max: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

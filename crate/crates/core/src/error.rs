use std::path::PathBuf;

/// Errors raised across calibration, simulation and file loading.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("time {time} outside curve range [0, {max}]")]
    OutOfRange { time: f64, max: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("index ({i}, {j}) outside the quote region")]
    OutsideRegion { i: usize, j: usize },

    #[error("surface missing {} cell(s), first at (t_i={:.2}, T_j={:.2})", .cells.len(), .cells[0].0, .cells[0].1)]
    MissingCells { cells: Vec<(f64, f64)> },

    #[error("quadratic has non-positive leading coefficient {0}")]
    DegenerateQuadratic(f64),

    #[error("quotes not sorted by (expiry, tenor) at position {0}")]
    UnsortedQuotes(usize),

    #[error("correlation matrix is not positive semi-definite (pivot {pivot} at row {row})")]
    NotPositiveSemiDefinite { row: usize, pivot: f64 },

    #[error("invalid factor set: {0}")]
    InvalidFactors(String),

    #[error("factor combination vanishes at cell ({i}, {j})")]
    DegenerateFactors { i: usize, j: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

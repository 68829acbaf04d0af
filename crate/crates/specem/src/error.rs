use thiserror::Error;

/// Failures reading or writing data files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<IoError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {row}, column {col}: cannot parse {cell:?} as a number")]
    Parse { row: usize, col: usize, cell: String },
    #[error("line {row}: expected {expected} cells, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("file contains no data")]
    EmptyFile,
    #[error("{0} columns and none named \"y\"")]
    AmbiguousColumns(usize),
    #[error(transparent)]
    Core(#[from] specem_core::Error),
}

use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series too short: {len} samples, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("series has zero variance")]
    ZeroVarianceSeries,
    #[error("empty series set")]
    EmptySet,
    #[error("series {index} has length {found}, expected {expected}")]
    RaggedSet {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("label count {labels} does not match series count {series}")]
    LabelMismatch { labels: usize, series: usize },
    #[error("spectrum has no positive power")]
    EmptySpectrum,
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("spectra live on different frequency grids")]
    MixedGrids,
    #[error("spectra mix raw and pmf kinds")]
    MixedKinds,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("weights sum to zero")]
    ZeroTotalWeight,
    #[error("cluster {cluster} has no responsibility mass")]
    EmptyCluster { cluster: usize },
    #[error("every restart degenerated into an empty cluster")]
    DegenerateRun,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("NEC undefined for K={k}: likelihood does not exceed the one-cluster baseline")]
    UndefinedNec { k: usize },
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("recording has {len} samples, need at least {min}")]
    RecordingTooShort { len: usize, min: usize },
    #[error("mixture component {component} collapsed")]
    DegenerateComponent { component: usize },
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
    #[error("placement {index} overlaps the previous template")]
    OverlapError { index: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

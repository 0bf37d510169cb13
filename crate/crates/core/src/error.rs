use std::path::PathBuf;

use thiserror::Error;

/// Every failure the extraction, resampling and metric code can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed image file: {0}")]
    MalformedFile(String),
    #[error("image is {height}x{width}; both dimensions must be at least 2")]
    TooSmall { height: usize, width: usize },
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("histogram has zero variance across its bins")]
    DegenerateHistogram,
    #[error("no foreground pixels survive binarisation")]
    EmptyForeground,

    #[error("row accumulation is flat; no centre of mass")]
    FlatAccumulation,
    #[error("centre of mass {m_hat:.2} leaves no columns on one side of the axis")]
    DegenerateAxis { m_hat: f64 },
    #[error("axis column {col} does not intersect the plane")]
    AxisMissesPlane { col: i64 },

    #[error("need at least {needed} edge points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("radial boundary has zero length")]
    ZeroLengthSegment,
    #[error("radial boundaries are parallel")]
    ParallelBoundaries,
    #[error("zero-length ray from the sector origin")]
    DegenerateRay,
    #[error("image does not contain a convex plane: {0}")]
    NotConvex(String),

    #[error("sector was extracted from a {expected:?} image, got {got:?}")]
    InconsistentSector {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("prediction and ground-truth sets do not match: {0}")]
    MismatchedSets(String),
    #[error("polygon has zero perimeter or fewer than 3 vertices")]
    DegeneratePolygon,
    #[error("shapes have {0} and {1} vertices")]
    CountMismatch(usize, usize),
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("images of {height}x{width} are too small for {scales} scales (need {min})")]
    TooSmallForScales {
        height: usize,
        width: usize,
        scales: usize,
        min: usize,
    },

    #[error("synthetic sector does not fit the canvas: {0}")]
    SpecOutOfCanvas(String),
    #[error("corruption relabels {fraction:.2} of the sector (limit 0.40)")]
    CorruptionTooSevere { fraction: f64 },
}

impl Error {
    /// Stable identifier used in JSON failure records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedFile(_) => "MalformedFile",
            Error::TooSmall { .. } => "TooSmall",
            Error::Io { .. } => "IoFailure",
            Error::DegenerateHistogram => "DegenerateHistogram",
            Error::EmptyForeground => "EmptyForeground",
            Error::FlatAccumulation => "FlatAccumulation",
            Error::DegenerateAxis { .. } => "DegenerateAxis",
            Error::AxisMissesPlane { .. } => "AxisMissesPlane",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::ZeroLengthSegment => "ZeroLengthSegment",
            Error::ParallelBoundaries => "ParallelBoundaries",
            Error::DegenerateRay => "DegenerateRay",
            Error::NotConvex(_) => "NotConvex",
            Error::InconsistentSector { .. } => "InconsistentSector",
            Error::MismatchedSets(_) => "MismatchedSets",
            Error::DegeneratePolygon => "DegeneratePolygon",
            Error::CountMismatch(..) => "CountMismatch",
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::TooSmallForScales { .. } => "TooSmallForScales",
            Error::SpecOutOfCanvas(_) => "SpecOutOfCanvas",
            Error::CorruptionTooSevere { .. } => "CorruptionTooSevere",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

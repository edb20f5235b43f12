use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("divisor interval [{lb}, {ub}] contains zero")]
    DivisorContainsZero { lb: f64, ub: f64 },

    #[error("longitudinal speed {v} is not above the guard {guard}")]
    SpeedBelowGuard { v: f64, guard: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("heading range width {width} rad is not below pi/2")]
    HeadingRangeTooWide { width: f64 },

    #[error("degenerate polygon with {vertices} vertices")]
    DegeneratePolygon { vertices: usize },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("non-finite input at component {index}")]
    NonFiniteInput { index: usize },

    #[error("dataset is empty")]
    DatasetEmpty,

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss { epoch: usize, batch: usize, detail: String },

    #[error("model format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptFile(String),

    #[error("could not place background vehicles after {attempts} attempts")]
    PlacementFailed { attempts: usize },

    #[error("non-positive gap {gap} to leading vehicle")]
    NonPositiveGap { gap: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("step {step}, vehicle {vehicle}: {source}")]
    Step {
        step: usize,
        vehicle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable name of the variant, used to tally skip reasons.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DivisorContainsZero { .. } => "divisor_contains_zero",
            Error::SpeedBelowGuard { .. } => "speed_below_guard",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::HeadingRangeTooWide { .. } => "heading_range_too_wide",
            Error::DegeneratePolygon { .. } => "degenerate_polygon",
            Error::InvalidSet(_) => "invalid_set",
            Error::ConfigInvalid(_) => "config_invalid",
            Error::NonFiniteInput { .. } => "non_finite_input",
            Error::DatasetEmpty => "dataset_empty",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::FormatVersionMismatch { .. } => "format_version_mismatch",
            Error::CorruptFile(_) => "corrupt_file",
            Error::PlacementFailed { .. } => "placement_failed",
            Error::NonPositiveGap { .. } => "non_positive_gap",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Step { source, .. } => source.kind(),
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::TomlDe(_) | Error::TomlSer(_) => "toml",
        }
    }

    pub(crate) fn at_step(self, step: usize, vehicle: usize) -> Self {
        Error::Step {
            step,
            vehicle,
            source: Box::new(self),
        }
    }
}

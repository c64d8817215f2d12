use thiserror::Error;

use crate::qubit::PreparedStateLabel;

/// Errors produced anywhere in the simulation and estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("click probabilities sum to {sum}, expected 1")]
    UnnormalizedProbabilities { sum: f64 },

    #[error("pulse count must be positive")]
    NoPulses,

    #[error("calibration cell n{index} at theta = {theta:.4} received no events")]
    InsufficientCalibration { index: usize, theta: f64 },

    #[error("view contains no sensing-path clicks")]
    UndefinedRatio,

    #[error("no events to estimate from")]
    InsufficientData,

    #[error("prepared state {0} has no recorded events")]
    EmptyLabel(PreparedStateLabel),

    #[error("corrected outcome pair for {0} sums to zero")]
    DegenerateRow(PreparedStateLabel),

    #[error("Fisher information is singular at phi = {phi} (p = {p})")]
    Singular { phi: f64, p: f64 },

    #[error("invalid probability triplet: {0}")]
    InvalidTriplet(String),

    #[error("no information: cfi = {0}")]
    NoInformation(f64),

    #[error("unknown figure `{0}` (expected fig2, fig4, fig5 or fig6)")]
    UnknownFigure(String),

    #[error("unknown channel preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

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
    /// Stable, machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams { .. } => "invalid_params",
            Error::UnnormalizedProbabilities { .. } => "unnormalized_probabilities",
            Error::NoPulses => "no_pulses",
            Error::InsufficientCalibration { .. } => "insufficient_calibration",
            Error::UndefinedRatio => "undefined_ratio",
            Error::InsufficientData => "insufficient_data",
            Error::EmptyLabel(_) => "empty_label",
            Error::DegenerateRow(_) => "degenerate_row",
            Error::Singular { .. } => "singular",
            Error::InvalidTriplet(_) => "invalid_triplet",
            Error::NoInformation(_) => "no_information",
            Error::UnknownFigure(_) => "unknown_figure",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::TomlDe(_) | Error::TomlSer(_) => "toml",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

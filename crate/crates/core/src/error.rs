//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("invalid device: {0}")]
    InvalidDevice(String),

    #[error("occupation {occupation} out of range for mode `{mode}` with {levels} levels")]
    OccupationOutOfRange {
        mode: String,
        occupation: usize,
        levels: usize,
    },

    #[error("matrix not Hermitian: max |H - H^dag| = {max_dev:.3e}")]
    NonHermitian { max_dev: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration failed at t = {t} ns: {reason}")]
    Integration { t: f64, reason: String },

    #[error("propagator non-unitary: max |U^dag U - 1| = {max_dev:.3e}")]
    NonUnitaryPropagator { max_dev: f64 },

    #[error("dressed labeling failed for {label}: {detail}")]
    LabelingFailure { label: String, detail: String },

    #[error("singular perturbation path (term {index}): |E_i - E_s| = {gap:.3e} rad/ns at intermediate {state}")]
    SingularPath {
        index: usize,
        state: String,
        gap: f64,
    },

    #[error("oscillation extraction failed: {0}")]
    ExtractionFailure(String),

    #[error("frequency scan failed: {0}")]
    ScanFailure(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<CoreError>,
    },

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

impl CoreError {
    /// Tag an error with the protocol stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        CoreError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;

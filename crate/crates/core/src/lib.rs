//! Pulse-level simulator and calibration toolkit for microwave-activated
//! √iSWAP gates between fixed-frequency transmons coupled through a
//! fixed-frequency transmon coupler.
//!
//! The crate is organized around the stages of the gate protocol:
//!
//! - [`hilbert`]: truncated-oscillator composite space, basis indexing, and
//!   the static/drive Hamiltonians.
//! - [`pulse`]: flat-top Gaussian drive envelopes and carrier scheduling.
//! - [`dynamics`]: adaptive time-ordered propagation of states, propagators,
//!   and density matrices (Lindblad master equation).
//! - [`spectrum`]: dressed-state labeling, ZZ coupling strength, and ZZ
//!   landscape sweeps.
//! - [`perturbation`]: fourth-order effective coupling between the single
//!   excitation states, by generic path summation and in closed form, with a
//!   dynamics-based extraction for cross-checks.
//! - [`floquet`]: quasienergies of the periodically driven system and
//!   leakage-channel identification.
//! - [`gate`]: gate targets, computational-subspace extraction, phase
//!   compensation, fidelity and leakage metrics.
//! - [`calibrate`]: drive-frequency determination, pulse-shape selection, and
//!   end-to-end gate protocols for the shipped device scenarios.
//!
//! Configuration values carry linear frequencies in GHz and times in ns; all
//! internal math uses angular frequency (rad/ns) with ℏ = 1.

pub mod calibrate;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod gate;
pub mod hilbert;
pub mod ode;
pub mod perturbation;
pub mod pulse;
pub mod spectrum;
pub mod units;

pub use error::{CoreError, Result};
pub use hilbert::{CouplingSpec, DeviceSpec, FockLabel, ModeSpec, Operator};
pub use pulse::{DriveSchedule, DriveSpec, Envelope};
pub use dynamics::{DecoherenceSpec, PropagationSettings, Trajectory};
pub use calibrate::Scenario;
pub use gate::{GateReport, TargetGate};
pub use spectrum::ZzReport;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

//! Time-dependent drive envelopes and carrier scheduling for coupler drives.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hilbert::{self, DeviceSpec, Operator};
use crate::units;

/// Envelope shape on [0, t_p].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnvelopeShape {
    /// Flat-top Gaussian: Gaussian ramps of width `variance` over
    /// `ramp_time` at both ends, unit plateau between.
    FlatTopGaussian { ramp_time: f64, variance: f64 },
    /// Unit plateau over the whole duration; used for frequency scans,
    /// effective-coupling extraction, and the Floquet analysis.
    Constant,
}

/// Drive envelope: peak amplitude Ω(0)/2π in GHz and a dimensionless shape
/// factor on [0, t_p].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    /// Peak amplitude Ω(0)/2π in GHz.
    pub amplitude: f64,
    /// Total duration t_p in ns; the envelope vanishes outside [0, t_p].
    pub duration: f64,
    pub shape: EnvelopeShape,
}

impl Envelope {
    /// Flat-top Gaussian envelope with explicit ramp time.
    pub fn flat_top(amplitude: f64, ramp_time: f64, variance: f64, duration: f64) -> Result<Self> {
        if !(ramp_time > 0.0 && ramp_time <= duration / 2.0) {
            return Err(CoreError::InvalidInput(format!(
                "need 0 < t_r <= t_p/2, got t_r = {ramp_time}, t_p = {duration}"
            )));
        }
        if variance <= 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "need gamma > 0, got {variance}"
            )));
        }
        Ok(Self {
            amplitude,
            duration,
            shape: EnvelopeShape::FlatTopGaussian { ramp_time, variance },
        })
    }

    /// Flat-top Gaussian with the fixed relation t_r = 0.5 γ.
    pub fn half_gamma_ramp(amplitude: f64, variance: f64, duration: f64) -> Result<Self> {
        Self::flat_top(amplitude, 0.5 * variance, variance, duration)
    }

    /// Constant envelope over [0, duration].
    pub fn constant(amplitude: f64, duration: f64) -> Self {
        Self {
            amplitude,
            duration,
            shape: EnvelopeShape::Constant,
        }
    }

    /// Dimensionless shape factor G(t) in [0, 1]; zero outside [0, t_p].
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        match self.shape {
            EnvelopeShape::Constant => 1.0,
            EnvelopeShape::FlatTopGaussian { ramp_time, variance } => {
                let tp = self.duration;
                let off = (-ramp_time * ramp_time / (2.0 * variance * variance)).exp();
                let ramp = |dt: f64| {
                    ((-dt * dt / (2.0 * variance * variance)).exp() - off) / (1.0 - off)
                };
                if t <= ramp_time {
                    ramp(t - ramp_time)
                } else if t < tp - ramp_time {
                    1.0
                } else {
                    ramp(t - (tp - ramp_time))
                }
            }
        }
    }

    /// Times at which the shape is not smooth; the propagator restarts its
    /// step controller there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.shape {
            EnvelopeShape::Constant => vec![0.0, self.duration],
            EnvelopeShape::FlatTopGaussian { ramp_time, .. } => vec![
                0.0,
                ramp_time,
                self.duration - ramp_time,
                self.duration,
            ],
        }
    }

    /// Peak amplitude in angular units (rad/ns).
    pub fn amplitude_angular(&self) -> f64 {
        units::ghz(self.amplitude)
    }
}

/// One microwave drive: target mode, carrier, and envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    /// Label of the driven mode (the coupler in all paper protocols).
    pub target: String,
    /// Carrier frequency ω_d/2π in GHz.
    pub frequency: f64,
    /// Carrier phase φ in rad; the protocols use 0.
    pub phase: f64,
    pub envelope: Envelope,
}

impl DriveSpec {
    pub fn new(target: impl Into<String>, frequency: f64, phase: f64, envelope: Envelope) -> Result<Self> {
        if frequency <= 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "carrier frequency must be positive, got {frequency}"
            )));
        }
        Ok(Self {
            target: target.into(),
            frequency,
            phase,
            envelope,
        })
    }

    /// Scalar drive coefficient Ω(0)·G(t)·cos(ω_d t + φ) in rad/ns.
    pub fn coefficient(&self, t: f64) -> f64 {
        let g = self.envelope.value(t);
        if g == 0.0 {
            return 0.0;
        }
        self.envelope.amplitude_angular() * g * (units::ghz(self.frequency) * t + self.phase).cos()
    }
}

/// A set of drives sharing a common time origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pub drives: Vec<DriveSpec>,
}

impl DriveSchedule {
    pub fn new(drives: Vec<DriveSpec>) -> Self {
        Self { drives }
    }

    /// Total duration: the longest drive's t_p.
    pub fn duration(&self) -> f64 {
        self.drives
            .iter()
            .map(|d| d.envelope.duration)
            .fold(0.0, f64::max)
    }

    pub fn validate_against(&self, device: &DeviceSpec) -> Result<()> {
        for d in &self.drives {
            device.mode_index(&d.target)?;
        }
        Ok(())
    }

    /// Union of all envelope breakpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .drives
            .iter()
            .flat_map(|d| d.envelope.breakpoints())
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        pts
    }

    /// Copy with every envelope amplitude scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let drives = self
            .drives
            .iter()
            .map(|d| {
                let mut d = d.clone();
                d.envelope.amplitude *= s;
                d
            })
            .collect();
        Self { drives }
    }
}

/// Lab-frame drive Hamiltonian at time t, in angular units:
/// Σ_k Ω_k(0)·G_k(t)·cos(ω_k^d t + φ_k)·(q_c† + q_c).
pub fn drive_hamiltonian(schedule: &DriveSchedule, device: &DeviceSpec, t: f64) -> Result<Operator> {
    let dim = device.dim();
    let mut h = Operator::zeros((dim, dim));
    for d in &schedule.drives {
        let x = hilbert::drive_operator(&d.target, device)?;
        let c = d.coefficient(t);
        if c != 0.0 {
            h = h + x.mapv(|v| v * c);
        }
    }
    Ok(h)
}

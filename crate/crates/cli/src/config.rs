//! Experiment configuration: a strict TOML schema with named scenario
//! defaults and explicit units. Unknown keys are rejected.

use serde::Deserialize;

use pulsegate_core::calibrate::{DecoherencePoint, Scenario};
use pulsegate_core::dynamics::PropagationSettings;
use pulsegate_core::hilbert::{CouplingSpec, DeviceSpec, ModeSpec};
use pulsegate_core::FockLabel;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Schema version; must be 1.
    pub schema: u32,
    /// Named scenario supplying device and drive defaults
    /// (aba, abc, threeq-q1q2, threeq-q1q3).
    pub scenario: Option<String>,
    /// Recorded in the manifest; reserved for optimizer restarts.
    pub seed: Option<u64>,
    pub device: Option<DeviceSection>,
    pub drives: Option<DrivesSection>,
    pub pulse: Option<PulseSection>,
    pub propagation: Option<PropagationSection>,
    pub decoherence: Option<DecoherenceSection>,
    pub sweep: Option<SweepSection>,
    pub j12: Option<J12Section>,
    pub floquet: Option<FloquetSection>,
    pub calibrate: Option<CalibrateSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub modes: Vec<ModeEntry>,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub label: String,
    /// ω/2π in GHz.
    pub frequency_ghz: f64,
    /// α/2π in GHz (negative for transmons).
    pub anharmonicity_ghz: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub mode_a: String,
    pub mode_b: String,
    /// g/2π in GHz.
    pub strength_ghz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivesSection {
    /// Ω(0)/2π in MHz, both tones.
    pub amplitude_mhz: Option<f64>,
    /// δ/2π in MHz.
    pub detuning_mhz: Option<f64>,
    /// Explicit working carrier frequencies in GHz (tone 1, tone 2).
    pub frequencies_ghz: Option<[f64; 2]>,
    /// Labels of the two gate qubits.
    pub pair: Option<[String; 2]>,
    /// Label of the driven coupler.
    pub coupler: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub gamma_ns: Option<f64>,
    pub duration_ns: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step_ns: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceSection {
    pub points: Vec<DecoherenceEntry>,
    /// Tolerances for the Lindblad propagations (looser default than the
    /// coherent runs; the channel fidelity target is percent-level).
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceEntry {
    pub t1_us: Option<f64>,
    pub tphi_us: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// ω₁/2π range in GHz.
    pub omega1_ghz: [f64; 2],
    /// ω₂/2π range in GHz.
    pub omega2_ghz: [f64; 2],
    pub grid: [usize; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct J12Section {
    /// α_c/2π sweep range in MHz.
    pub alpha_c_mhz: [f64; 2],
    pub points: usize,
    /// Include the dynamics-extracted column (slow).
    #[serde(default)]
    pub dynamics: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetSection {
    /// Number of amplitude scales on [0, 1].
    pub scales: Option<usize>,
    /// Candidate window around the tracked state, MHz.
    pub window_mhz: Option<f64>,
    /// Tracked states as occupation lists.
    pub states: Option<Vec<Vec<usize>>>,
    pub rtol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    /// Scan center in GHz; defaults to the scenario's second tone.
    pub center_ghz: Option<f64>,
    pub halfwidth_mhz: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        if cfg.schema != 1 {
            return Err(ConfigError(format!(
                "unsupported schema version {} (expected 1)",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    /// Resolve the scenario with overrides applied.
    pub fn resolve_scenario(&self, levels: Option<usize>) -> Result<Scenario, ConfigError> {
        let mut scenario = match &self.scenario {
            Some(name) => Scenario::by_name(name).map_err(|e| ConfigError(e.to_string()))?,
            None => {
                // A fully explicit configuration needs the device plus the
                // drive roles.
                let device = self.build_device(None)?;
                let drives = self.drives.as_ref().ok_or_else(|| {
                    ConfigError("explicit configs need a [drives] section".into())
                })?;
                let pair = drives
                    .pair
                    .as_ref()
                    .ok_or_else(|| ConfigError("[drives].pair is required".into()))?;
                let coupler = drives
                    .coupler
                    .as_ref()
                    .ok_or_else(|| ConfigError("[drives].coupler is required".into()))?;
                let pair_idx = (
                    device
                        .mode_index(&pair[0])
                        .map_err(|e| ConfigError(e.to_string()))?,
                    device
                        .mode_index(&pair[1])
                        .map_err(|e| ConfigError(e.to_string()))?,
                );
                let coupler_idx = device
                    .mode_index(coupler)
                    .map_err(|e| ConfigError(e.to_string()))?;
                let freqs = drives.frequencies_ghz.ok_or_else(|| {
                    ConfigError("[drives].frequencies_ghz is required without a scenario".into())
                })?;
                Scenario {
                    name: "custom".into(),
                    device,
                    pair: pair_idx,
                    coupler: coupler_idx,
                    amplitude: drives.amplitude_mhz.unwrap_or(160.0) * 1e-3,
                    delta: drives.detuning_mhz.unwrap_or(0.0) * 1e-3,
                    drive1: freqs[0],
                    drive2: freqs[1],
                    gamma: self
                        .pulse
                        .as_ref()
                        .and_then(|p| p.gamma_ns)
                        .unwrap_or(196.0),
                    duration: self
                        .pulse
                        .as_ref()
                        .and_then(|p| p.duration_ns)
                        .unwrap_or(346.0),
                }
            }
        };
        // Scenario plus overrides.
        if self.scenario.is_some() {
            if let Some(device) = &self.device {
                let _ = device;
                scenario.device = self.build_device(Some(&scenario.device))?;
            }
            if let Some(drives) = &self.drives {
                if let Some(a) = drives.amplitude_mhz {
                    scenario.amplitude = a * 1e-3;
                }
                if let Some(d) = drives.detuning_mhz {
                    scenario.delta = d * 1e-3;
                }
                if let Some(f) = drives.frequencies_ghz {
                    scenario.drive1 = f[0];
                    scenario.drive2 = f[1];
                }
                if drives.pair.is_some() || drives.coupler.is_some() {
                    return Err(ConfigError(
                        "pair/coupler cannot be overridden on a named scenario".into(),
                    ));
                }
            }
            if let Some(p) = &self.pulse {
                if let Some(g) = p.gamma_ns {
                    scenario.gamma = g;
                }
                if let Some(t) = p.duration_ns {
                    scenario.duration = t;
                }
            }
        }
        if let Some(k) = levels {
            scenario.device = scenario
                .device
                .with_levels(k)
                .map_err(|e| ConfigError(e.to_string()))?;
        }
        Ok(scenario)
    }

    fn build_device(&self, _base: Option<&DeviceSpec>) -> Result<DeviceSpec, ConfigError> {
        let section = self
            .device
            .as_ref()
            .ok_or_else(|| ConfigError("a [device] section is required".into()))?;
        let modes = section
            .modes
            .iter()
            .map(|m| ModeSpec::new(m.label.clone(), m.frequency_ghz, m.anharmonicity_ghz, m.levels))
            .collect();
        let couplings = section
            .couplings
            .iter()
            .map(|c| CouplingSpec::new(c.mode_a.clone(), c.mode_b.clone(), c.strength_ghz))
            .collect();
        DeviceSpec::new(modes, couplings).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn propagation_settings(&self) -> PropagationSettings {
        let mut s = PropagationSettings::default();
        if let Some(p) = &self.propagation {
            if let Some(v) = p.rtol {
                s.rtol = v;
            }
            if let Some(v) = p.atol {
                s.atol = v;
            }
            if let Some(v) = p.max_step_ns {
                s.max_step = v;
            }
        }
        s
    }

    /// Lindblad tolerances for the decoherence sweep; percent-level channel
    /// targets tolerate a looser default.
    pub fn lindblad_settings(&self) -> PropagationSettings {
        let mut s = PropagationSettings {
            rtol: 1e-7,
            atol: 1e-9,
            ..Default::default()
        };
        if let Some(d) = &self.decoherence {
            if let Some(v) = d.rtol {
                s.rtol = v;
            }
            if let Some(v) = d.atol {
                s.atol = v;
            }
        }
        s
    }

    pub fn decoherence_points(&self) -> Result<Vec<DecoherencePoint>, ConfigError> {
        let section = self
            .decoherence
            .as_ref()
            .ok_or_else(|| ConfigError("a [decoherence] section with points is required".into()))?;
        if section.points.is_empty() {
            return Err(ConfigError("decoherence points list is empty".into()));
        }
        Ok(section
            .points
            .iter()
            .map(|p| DecoherencePoint {
                t1_us: p.t1_us,
                tphi_us: p.tphi_us,
            })
            .collect())
    }

    pub fn floquet_states(&self, n_modes: usize) -> Result<Vec<FockLabel>, ConfigError> {
        let defaults: Vec<Vec<usize>> = vec![vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 0]];
        let raw = self
            .floquet
            .as_ref()
            .and_then(|f| f.states.clone())
            .unwrap_or(defaults);
        raw.into_iter()
            .map(|occ| {
                if occ.len() != n_modes {
                    return Err(ConfigError(format!(
                        "tracked state {occ:?} does not match the {n_modes}-mode device"
                    )));
                }
                Ok(FockLabel::new(occ))
            })
            .collect()
    }
}

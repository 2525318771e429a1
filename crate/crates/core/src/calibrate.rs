//! Calibration protocols and end-to-end gate runs: drive-frequency
//! determination (closed-form estimate plus population scan), pulse-shape
//! selection, gate execution for the shipped device scenarios, and the
//! decoherence sweep.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, DecoherenceSpec, PropagationSettings, Trajectory};
use crate::error::{CoreError, Result};
use crate::gate::{self, CompChannel, GateReport, PhaseFit};
use crate::hilbert::{CouplingSpec, DeviceSpec, FockLabel, ModeSpec};
use crate::perturbation::{self, PerturbationContext};
use crate::pulse::{DriveSchedule, DriveSpec, Envelope};
use crate::spectrum;
use crate::C64;

/// A named device-plus-drive working point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub device: DeviceSpec,
    /// Indices of the two gate qubits in the mode list.
    pub pair: (usize, usize),
    /// Index of the driven coupler mode.
    pub coupler: usize,
    /// Drive amplitude Ω(0)/2π in GHz (both tones).
    pub amplitude: f64,
    /// Drive detuning δ/2π in GHz.
    pub delta: f64,
    /// Working drive frequencies in GHz.
    pub drive1: f64,
    pub drive2: f64,
    /// Envelope variance γ in ns; the ramp time is fixed at γ/2.
    pub gamma: f64,
    /// Total drive duration t_p in ns.
    pub duration: f64,
}

impl Scenario {
    /// Two comparable qubits with the coupler in a separate band.
    pub fn aba() -> Self {
        Self {
            name: "aba".into(),
            device: DeviceSpec::new(
                vec![
                    ModeSpec::new("q1", 5.0, -0.2, 4),
                    ModeSpec::new("q2", 5.9, -0.2, 4),
                    ModeSpec::new("qc", 7.0, -0.4, 4),
                ],
                vec![
                    CouplingSpec::new("q1", "qc", 0.19),
                    CouplingSpec::new("q2", "qc", 0.10),
                ],
            )
            .expect("valid device"),
            pair: (0, 1),
            coupler: 2,
            amplitude: 0.160,
            delta: -0.030,
            drive1: 8.654,
            drive2: 7.744,
            gamma: 196.0,
            duration: 346.0,
        }
    }

    /// Coupler frequency between the two qubit frequencies.
    pub fn abc() -> Self {
        Self {
            name: "abc".into(),
            device: DeviceSpec::new(
                vec![
                    ModeSpec::new("q1", 5.0, -0.3, 4),
                    ModeSpec::new("q2", 7.5, -0.3, 4),
                    ModeSpec::new("qc", 6.2, -0.4, 4),
                ],
                vec![
                    CouplingSpec::new("q1", "qc", 0.11),
                    CouplingSpec::new("q2", "qc", 0.12),
                ],
            )
            .expect("valid device"),
            pair: (0, 1),
            coupler: 2,
            amplitude: 0.160,
            delta: -0.040,
            drive1: 6.979,
            drive2: 4.458,
            gamma: 196.0,
            duration: 378.0,
        }
    }

    fn three_q_device() -> DeviceSpec {
        DeviceSpec::new(
            vec![
                ModeSpec::new("q1", 5.0, -0.2, 4),
                ModeSpec::new("q2", 5.9, -0.2, 4),
                ModeSpec::new("q3", 5.5, -0.2, 4),
                ModeSpec::new("qc", 7.0, -0.4, 4),
            ],
            vec![
                CouplingSpec::new("q1", "qc", 0.19),
                CouplingSpec::new("q2", "qc", 0.10),
                CouplingSpec::new("q3", "qc", 0.14),
            ],
        )
        .expect("valid device")
    }

    /// Three qubits on one coupler, gate between Q1 and Q2. The duration is
    /// not quoted for this device; the shipped value comes from the
    /// swap-angle calibration ([`calibrate_duration`]).
    pub fn three_q12() -> Self {
        Self {
            name: "threeq-q1q2".into(),
            device: Self::three_q_device(),
            pair: (0, 1),
            coupler: 3,
            amplitude: 0.120,
            delta: -0.020,
            drive1: 8.694,
            drive2: 7.782,
            gamma: 204.0,
            duration: 330.0,
        }
    }

    /// Three qubits on one coupler, gate between Q1 and Q3; duration from
    /// the swap-angle calibration.
    pub fn three_q13() -> Self {
        Self {
            name: "threeq-q1q3".into(),
            device: Self::three_q_device(),
            pair: (0, 2),
            coupler: 3,
            amplitude: 0.120,
            delta: -0.013,
            drive1: 8.701,
            drive2: 8.194,
            gamma: 202.0,
            duration: 330.0,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "aba" => Ok(Self::aba()),
            "abc" => Ok(Self::abc()),
            "threeq-q1q2" => Ok(Self::three_q12()),
            "threeq-q1q3" => Ok(Self::three_q13()),
            _ => Err(CoreError::InvalidInput(format!(
                "unknown scenario `{name}` (expected aba, abc, threeq-q1q2, threeq-q1q3)"
            ))),
        }
    }

    pub fn ramp_time(&self) -> f64 {
        0.5 * self.gamma
    }

    pub fn coupler_label(&self) -> &str {
        &self.device.modes[self.coupler].label
    }

    /// Flat-top two-tone schedule at the working point, with optional
    /// overrides for the second tone and the shape.
    pub fn schedule_with(&self, drive2: f64, gamma: f64, duration: f64) -> Result<DriveSchedule> {
        let env = Envelope::half_gamma_ramp(self.amplitude, gamma, duration)?;
        Ok(DriveSchedule::new(vec![
            DriveSpec::new(self.coupler_label(), self.drive1, 0.0, env.clone())?,
            DriveSpec::new(self.coupler_label(), drive2, 0.0, env)?,
        ]))
    }

    pub fn schedule(&self) -> Result<DriveSchedule> {
        self.schedule_with(self.drive2, self.gamma, self.duration)
    }

    /// Constant-envelope two-tone schedule for probe dynamics.
    pub fn plateau_schedule(&self, drive2: f64, horizon: f64) -> Result<DriveSchedule> {
        Ok(DriveSchedule::new(vec![
            DriveSpec::new(
                self.coupler_label(),
                self.drive1,
                0.0,
                Envelope::constant(self.amplitude, horizon),
            )?,
            DriveSpec::new(
                self.coupler_label(),
                drive2,
                0.0,
                Envelope::constant(self.amplitude, horizon),
            )?,
        ]))
    }

    pub fn context(&self) -> Result<PerturbationContext> {
        PerturbationContext::for_pair(
            &self.device,
            self.pair.0,
            self.pair.1,
            self.coupler,
            self.amplitude,
            self.amplitude,
            self.delta,
        )
    }

    /// Closed-form |J₁₂| estimate in rad/ns.
    pub fn j_estimate(&self) -> Result<f64> {
        Ok(perturbation::closed_form_j12(&self.context()?)?.abs())
    }
}

/// Closed-form drive-frequency estimates ω_k^d ≈ 2ω_c + α_c − ω_k + δ, in
/// GHz, before any Stark correction.
pub fn estimate_drive_frequencies(
    device: &DeviceSpec,
    pair: (usize, usize),
    coupler: usize,
    delta_ghz: f64,
) -> (f64, f64) {
    let wc = device.modes[coupler].frequency;
    let ac = device.modes[coupler].anharmonicity;
    let est = |q: usize| 2.0 * wc + ac - device.modes[q].frequency + delta_ghz;
    (est(pair.0), est(pair.1))
}

/// Frequency-scan outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    /// Scanned second-tone frequencies in GHz.
    pub scanned: Vec<f64>,
    /// Maximum population transfer per scan point.
    pub objective: Vec<f64>,
    /// Refined optimum in GHz.
    pub optimum: f64,
    /// Whether the quadratic refinement moved the optimum off the grid.
    pub refined: bool,
}

/// Scan the second drive frequency over `center ± halfwidth` (GHz) with the
/// first tone fixed, maximizing the population transferred from the dressed
/// one-excitation state of the first qubit to the second.
pub fn scan_drive_frequency(
    scenario: &Scenario,
    center: f64,
    halfwidth: f64,
    points: usize,
    settings: &PropagationSettings,
) -> Result<ScanResult> {
    if points < 3 || halfwidth <= 0.0 {
        return Err(CoreError::ScanFailure(
            "need at least 3 scan points and a positive window".into(),
        ));
    }
    let j_est = scenario.j_estimate()?;
    if j_est <= 0.0 {
        return Err(CoreError::ScanFailure("vanishing coupling estimate".into()));
    }
    // Probe horizon: 1.5 × the expected half-swap time π/(2 J).
    let horizon = 1.5 * std::f64::consts::FRAC_PI_2 / j_est;
    let device = &scenario.device;
    let h = crate::hilbert::bare_hamiltonian(device)?;
    let eig = spectrum::eigensystem(&h)?;
    let assignment = spectrum::dressed_label(device, &eig)?;
    let n = device.n_modes();
    let label_for = |mode: usize| {
        let mut occ = vec![0usize; n];
        occ[mode] = 1;
        FockLabel::new(occ)
    };
    let lvl_a = assignment.get(device, &label_for(scenario.pair.0))?;
    let lvl_b = assignment.get(device, &label_for(scenario.pair.1))?;
    let psi0: Array1<C64> = eig.1.column(lvl_a.eigen_index).to_owned();
    let target: Array1<C64> = eig.1.column(lvl_b.eigen_index).to_owned();

    let freqs: Vec<f64> = (0..points)
        .map(|k| center - halfwidth + 2.0 * halfwidth * k as f64 / (points - 1) as f64)
        .collect();
    let n_samples = 240;
    let grid: Vec<f64> = (1..=n_samples)
        .map(|k| horizon * k as f64 / n_samples as f64)
        .collect();
    let objective: Result<Vec<f64>> = freqs
        .par_iter()
        .map(|&f2| {
            let sched = scenario.plateau_schedule(f2, horizon)?;
            let local = PropagationSettings {
                output_grid: grid.clone(),
                ..settings.clone()
            };
            let traj = dynamics::propagate_state(device, &sched, &psi0, &local)?;
            let pops = traj.overlap_population(&target);
            Ok(pops.into_iter().fold(0.0, f64::max))
        })
        .collect();
    let objective = objective?;
    let spread = objective.iter().cloned().fold(f64::MIN, f64::max)
        - objective.iter().cloned().fold(f64::MAX, f64::min);
    if spread < 0.05 {
        return Err(CoreError::ScanFailure(format!(
            "objective spread {spread:.3} below 0.05; widen the scan window"
        )));
    }
    let best = objective
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let (optimum, refined) = if best > 0 && best + 1 < freqs.len() {
        let (y0, y1, y2) = (objective[best - 1], objective[best], objective[best + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        if denom.abs() > 1e-12 {
            let df = freqs[1] - freqs[0];
            (freqs[best] + df * 0.5 * (y0 - y2) / denom, true)
        } else {
            (freqs[best], false)
        }
    } else {
        (freqs[best], false)
    };
    Ok(ScanResult {
        scanned: freqs,
        objective,
        optimum,
        refined,
    })
}

/// Pulse-shape search outcome: conditional-corrected fidelity over a
/// (γ, t_p) grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeSearch {
    pub rows: Vec<ShapeCell>,
    pub best_gamma: f64,
    pub best_duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeCell {
    pub gamma_ns: f64,
    pub duration_ns: f64,
    pub fidelity: f64,
}

/// Evaluate the corrected gate fidelity over a shape grid (t_r = γ/2
/// throughout) and return the maximizing point.
pub fn choose_pulse_shape(
    scenario: &Scenario,
    gammas: &[f64],
    durations: &[f64],
    settings: &PropagationSettings,
) -> Result<ShapeSearch> {
    if gammas.is_empty() || durations.is_empty() {
        return Err(CoreError::InvalidInput("empty shape grid".into()));
    }
    let combos: Vec<(f64, f64)> = gammas
        .iter()
        .flat_map(|&g| durations.iter().map(move |&t| (g, t)))
        .collect();
    let rows: Result<Vec<ShapeCell>> = combos
        .par_iter()
        .map(|&(g, tp)| {
            let fit = gate_fit(scenario, scenario.drive2, g, tp, settings)?;
            Ok(ShapeCell {
                gamma_ns: g,
                duration_ns: tp,
                fidelity: fit.fidelity,
            })
        })
        .collect();
    let rows = rows?;
    let best = rows
        .iter()
        .max_by(|a, b| a.fidelity.partial_cmp(&b.fidelity).unwrap())
        .unwrap();
    Ok(ShapeSearch {
        best_gamma: best.gamma_ns,
        best_duration: best.duration_ns,
        rows,
    })
}

/// Four computational basis columns of the scenario's qubit pair.
fn comp_columns(device: &DeviceSpec, pair: (usize, usize)) -> Result<Array2<C64>> {
    let labels = gate::computational_labels(device, pair);
    let mut cols = Array2::zeros((device.dim(), 4));
    for (c, l) in labels.iter().enumerate() {
        cols[(device.fock_index(l)?, c)] = C64::new(1.0, 0.0);
    }
    Ok(cols)
}

/// Propagate the computational columns through one gate and return the
/// conditional-phase fit (no trajectories).
fn gate_fit(
    scenario: &Scenario,
    drive2: f64,
    gamma: f64,
    duration: f64,
    settings: &PropagationSettings,
) -> Result<PhaseFit> {
    let device = &scenario.device;
    let sched = scenario.schedule_with(drive2, gamma, duration)?;
    let cols = comp_columns(device, scenario.pair)?;
    let local = PropagationSettings {
        output_grid: vec![duration],
        ..settings.clone()
    };
    let (mut states, _) = dynamics::propagate_columns(device, &sched, &cols, &local)?;
    let proj = gate::project_columns(&states.pop().unwrap(), device, scenario.pair)?;
    Ok(gate::compensate_phases(&proj.matrix, true))
}

/// Knobs for [`run_gate_protocol`].
#[derive(Debug, Clone)]
pub struct ProtocolOptions {
    /// Re-scan the second tone around the scenario default before running.
    pub scan: bool,
    /// Scan halfwidth in GHz and point count when `scan` is set.
    pub scan_halfwidth: f64,
    pub scan_points: usize,
    /// Truncation override for every mode.
    pub levels: Option<usize>,
    /// Trajectory sample count over the gate window.
    pub trajectory_points: usize,
    pub settings: PropagationSettings,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            scan: false,
            scan_halfwidth: 0.008,
            scan_points: 17,
            levels: None,
            trajectory_points: 173,
            settings: PropagationSettings::default(),
        }
    }
}

/// Full gate pipeline: (optional) frequency scan, propagation of the four
/// computational initial states, projection, phase compensation, and leakage
/// accounting. Returns the report plus the four trajectories.
pub fn run_gate_protocol(
    scenario: &Scenario,
    options: &ProtocolOptions,
) -> Result<(GateReport, Vec<Trajectory>)> {
    let mut scenario = scenario.clone();
    if let Some(levels) = options.levels {
        scenario.device = scenario
            .device
            .with_levels(levels)
            .map_err(|e| e.in_stage("device"))?;
    }
    let device = scenario.device.clone();

    let drive2 = if options.scan {
        scan_drive_frequency(
            &scenario,
            scenario.drive2,
            options.scan_halfwidth,
            options.scan_points,
            &options.settings,
        )
        .map_err(|e| e.in_stage("frequency-scan"))?
        .optimum
    } else {
        scenario.drive2
    };

    let sched = scenario
        .schedule_with(drive2, scenario.gamma, scenario.duration)
        .map_err(|e| e.in_stage("schedule"))?;
    let cols = comp_columns(&device, scenario.pair).map_err(|e| e.in_stage("schedule"))?;
    let n_pts = options.trajectory_points.max(2);
    let grid: Vec<f64> = (0..n_pts)
        .map(|k| scenario.duration * k as f64 / (n_pts - 1) as f64)
        .collect();
    let local = PropagationSettings {
        output_grid: grid.clone(),
        ..options.settings.clone()
    };
    let (states, _) = dynamics::propagate_columns(&device, &sched, &cols, &local)
        .map_err(|e| e.in_stage("propagation"))?;
    let final_cols = states.last().expect("samples").clone();

    let proj = gate::project_columns(&final_cols, &device, scenario.pair)
        .map_err(|e| e.in_stage("projection"))?;
    let fidelity_raw = gate::raw_fidelity(&proj.matrix);
    let fit_1q = gate::compensate_phases(&proj.matrix, false);
    let fit_cond = gate::compensate_phases(&proj.matrix, true);

    let labels = gate::computational_labels(&device, scenario.pair);
    let mut leakage_by_initial_state = Vec::with_capacity(4);
    let mut leakage_sum = 0.0;
    for (c, l) in labels.iter().enumerate() {
        let col = final_cols.column(c).to_owned();
        let leak = gate::leakage_of_column(&col, &device, scenario.pair)
            .map_err(|e| e.in_stage("leakage"))?;
        leakage_sum += leak;
        leakage_by_initial_state.push((l.to_string(), leak));
    }

    let trajectories: Vec<Trajectory> = (0..4)
        .map(|c| {
            let samples: Vec<Array1<C64>> =
                states.iter().map(|s| s.column(c).to_owned()).collect();
            Trajectory::from_pure_samples(&device, grid.clone(), samples)
        })
        .collect();

    let report = GateReport {
        scenario: scenario.name.clone(),
        fidelity_raw,
        fidelity_1q: fit_1q.fidelity,
        fidelity_cond: fit_cond.fidelity,
        theta1_rad: fit_cond.theta1,
        theta2_rad: fit_cond.theta2,
        phi_rad: fit_cond.phi,
        leakage_by_initial_state,
        leakage_avg: leakage_sum / 4.0,
        gate_time_ns: scenario.duration,
        column_deficits: proj.column_deficits,
    };
    Ok((report, trajectories))
}

/// Adjust t_p so the accumulated swap angle hits θ = π/4, by Newton steps on
/// the measured angle with the plateau coupling as slope. Used to fix gate
/// durations the working points do not quote.
pub fn calibrate_duration(
    scenario: &Scenario,
    seed_duration: f64,
    settings: &PropagationSettings,
) -> Result<f64> {
    let device = &scenario.device;
    let j = scenario.j_estimate()?;
    if j <= 0.0 {
        return Err(CoreError::ExtractionFailure(
            "vanishing coupling estimate".into(),
        ));
    }
    let labels = gate::computational_labels(device, scenario.pair);
    let idx_keep = device.fock_index(&labels[2])?; // |10⟩
    let idx_swap = device.fock_index(&labels[1])?; // |01⟩
    let mut psi0: Array1<C64> = Array1::zeros(device.dim());
    psi0[idx_keep] = C64::new(1.0, 0.0);

    let mut tp = seed_duration;
    for _ in 0..8 {
        let sched = scenario.schedule_with(scenario.drive2, scenario.gamma, tp)?;
        let local = PropagationSettings {
            output_grid: vec![tp],
            ..settings.clone()
        };
        let traj = dynamics::propagate_state(device, &sched, &psi0, &local)?;
        let fin = traj.final_state().expect("pure trajectory");
        let p_keep = fin[idx_keep].norm_sqr();
        let p_swap = fin[idx_swap].norm_sqr();
        let theta = p_swap.sqrt().atan2(p_keep.sqrt());
        let err = theta - std::f64::consts::FRAC_PI_4;
        if err.abs() < 5e-4 {
            return Ok(tp);
        }
        tp -= err / j;
        if tp < 2.0 * scenario.ramp_time() {
            return Err(CoreError::ExtractionFailure(format!(
                "duration calibration collapsed below the ramps (t_p = {tp:.1} ns)"
            )));
        }
    }
    Ok(tp)
}

/// One decoherence operating point (uniform times across all modes).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecoherencePoint {
    pub t1_us: Option<f64>,
    pub tphi_us: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecoherenceResult {
    pub t1_us: Option<f64>,
    pub tphi_us: Option<f64>,
    pub gate_error: f64,
    pub fidelity: f64,
    /// Trace defect of the assembled channel (leakage diagnostic).
    pub trace_defect: f64,
}

/// Gate error under decoherence: for each point, assemble the noisy channel
/// from Lindblad propagations of a Hermitian operator basis of the
/// computational subspace, compensate phases, and report 1 − F.
pub fn decoherence_sweep(
    scenario: &Scenario,
    points: &[DecoherencePoint],
    gate_settings: &PropagationSettings,
    lindblad_settings: &PropagationSettings,
) -> Result<Vec<DecoherenceResult>> {
    let device = &scenario.device;
    let sched = scenario.schedule().map_err(|e| e.in_stage("schedule"))?;
    // Noiseless fit seeds the channel phase fit.
    let noiseless = gate_fit(
        scenario,
        scenario.drive2,
        scenario.gamma,
        scenario.duration,
        gate_settings,
    )
    .map_err(|e| e.in_stage("noiseless-reference"))?;

    let labels = gate::computational_labels(device, scenario.pair);
    let idx: Vec<usize> = labels
        .iter()
        .map(|l| device.fock_index(l))
        .collect::<Result<_>>()?;
    let d = device.dim();
    // Hermitian generator set spanning the computational operator space:
    // E_kk, X_kl = E_kl + E_lk, Y_kl = i(E_kl − E_lk).
    let mut generators: Vec<Array2<C64>> = Vec::with_capacity(16);
    let mut gen_index: Vec<(usize, usize, u8)> = Vec::with_capacity(16);
    for k in 0..4 {
        let mut m = Array2::zeros((d, d));
        m[(idx[k], idx[k])] = C64::new(1.0, 0.0);
        generators.push(m);
        gen_index.push((k, k, 0));
    }
    for k in 0..4 {
        for l in (k + 1)..4 {
            let mut x = Array2::zeros((d, d));
            x[(idx[k], idx[l])] = C64::new(1.0, 0.0);
            x[(idx[l], idx[k])] = C64::new(1.0, 0.0);
            generators.push(x);
            gen_index.push((k, l, 1));
            let mut y = Array2::zeros((d, d));
            y[(idx[k], idx[l])] = C64::new(0.0, 1.0);
            y[(idx[l], idx[k])] = C64::new(0.0, -1.0);
            generators.push(y);
            gen_index.push((k, l, 2));
        }
    }

    let mut results = Vec::with_capacity(points.len());
    for point in points {
        let deco = DecoherenceSpec::uniform(device, point.t1_us, point.tphi_us);
        let maps = dynamics::propagate_lindblad_blocks(
            device,
            &sched,
            &deco,
            &generators,
            scenario.duration,
            lindblad_settings,
        )
        .map_err(|e| e.in_stage("lindblad-propagation"))?;
        // Project to the computational subspace.
        let proj: Vec<Array2<C64>> = maps
            .iter()
            .map(|m| {
                Array2::from_shape_fn((4, 4), |(r, c)| m[(idx[r], idx[c])])
            })
            .collect();
        // Reconstruct E(|k⟩⟨l|) from the Hermitian images.
        let mut images: [[Array2<C64>; 4]; 4] = Default::default();
        for k in 0..4 {
            for l in 0..4 {
                images[k][l] = Array2::zeros((4, 4));
            }
        }
        let mut x_img: Vec<Vec<Option<Array2<C64>>>> = vec![vec![None; 4]; 4];
        let mut y_img: Vec<Vec<Option<Array2<C64>>>> = vec![vec![None; 4]; 4];
        for (g, (k, l, kind)) in proj.iter().zip(&gen_index) {
            match kind {
                0 => images[*k][*l] = g.clone(),
                1 => x_img[*k][*l] = Some(g.clone()),
                _ => y_img[*k][*l] = Some(g.clone()),
            }
        }
        for k in 0..4 {
            for l in (k + 1)..4 {
                let x = x_img[k][l].take().expect("X image");
                let y = y_img[k][l].take().expect("Y image");
                let minus_i = C64::new(0.0, -1.0);
                let plus_i = C64::new(0.0, 1.0);
                images[k][l] = (&x + &y.mapv(|v| v * minus_i)).mapv(|v| v * 0.5);
                images[l][k] = (&x + &y.mapv(|v| v * plus_i)).mapv(|v| v * 0.5);
            }
        }
        let channel = CompChannel::from_basis_images(&images);
        let fit = gate::channel_compensate_phases(&channel, true, Some(&noiseless));
        results.push(DecoherenceResult {
            t1_us: point.t1_us,
            tphi_us: point.tphi_us,
            gate_error: 1.0 - fit.fidelity,
            fidelity: fit.fidelity,
            trace_defect: channel.trace_defect(),
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drive_frequency_estimates() {
        let aba = Scenario::aba();
        let (f1, f2) =
            estimate_drive_frequencies(&aba.device, aba.pair, aba.coupler, aba.delta);
        // 2·7.0 − 0.4 − 5.0 − 0.03 and 2·7.0 − 0.4 − 5.9 − 0.03.
        assert!((f1 - 8.570).abs() < 1e-12);
        assert!((f2 - 7.670).abs() < 1e-12);

        let abc = Scenario::abc();
        let (f1, _) =
            estimate_drive_frequencies(&abc.device, abc.pair, abc.coupler, abc.delta);
        assert!((f1 - 6.960).abs() < 1e-12);
    }

    #[test]
    fn symmetric_toy_estimates_coincide() {
        let dev = DeviceSpec::new(
            vec![
                ModeSpec::new("a", 5.0, -0.2, 4),
                ModeSpec::new("b", 5.0, -0.2, 4),
                ModeSpec::new("c", 7.0, -0.4, 4),
            ],
            vec![
                CouplingSpec::new("a", "c", 0.1),
                CouplingSpec::new("b", "c", 0.1),
            ],
        )
        .unwrap();
        let (f1, f2) = estimate_drive_frequencies(&dev, (0, 1), 2, 0.0);
        assert_eq!(f1, f2);
    }

    #[test]
    fn scenario_lookup() {
        for name in ["aba", "abc", "threeq-q1q2", "threeq-q1q3"] {
            assert_eq!(Scenario::by_name(name).unwrap().name, name);
        }
        assert!(Scenario::by_name("nope").is_err());
    }

    #[test]
    fn scan_fails_without_coupling_transfer() {
        // Zero couplings: no transfer anywhere in the window.
        let mut sc = Scenario::aba();
        sc.device = DeviceSpec::new(sc.device.modes.clone(), vec![]).unwrap();
        let settings = PropagationSettings {
            rtol: 1e-7,
            atol: 1e-9,
            ..Default::default()
        };
        // The coupling estimate itself vanishes (no graph edge), so the scan
        // reports failure before any propagation.
        assert!(scan_drive_frequency(&sc, 7.744, 0.004, 5, &settings).is_err());
    }

    #[test]
    fn shape_grid_of_one_returns_that_point() {
        let sc = Scenario::aba();
        let settings = PropagationSettings {
            rtol: 1e-7,
            atol: 1e-9,
            ..Default::default()
        };
        let search = choose_pulse_shape(&sc, &[196.0], &[346.0], &settings).unwrap();
        assert_eq!(search.rows.len(), 1);
        assert_eq!(search.best_gamma, 196.0);
        assert_eq!(search.best_duration, 346.0);
    }
}

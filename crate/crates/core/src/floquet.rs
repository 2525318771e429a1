//! Quasienergy analysis of the periodically driven system for
//! leakage-channel identification.
//!
//! In the frame rotating every mode at the first drive frequency, and after
//! dropping terms oscillating at carrier scale (counter-rotating drive terms
//! and double-excitation coupling terms), the Hamiltonian is periodic with
//! period T = 2π/|ν|, ν = ω₂^d − ω₁^d. The spectrum of the one-period
//! propagator gives the quasienergies, folded to [−|ν|/2, |ν|/2).

use ndarray::{linalg::general_mat_mul, Array2};
use ndarray_linalg::Eig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::gate;
use crate::hilbert::{self, DeviceSpec, FockLabel, Operator};
use crate::ode::{self, OdeOptions};
use crate::pulse::DriveSchedule;
use crate::spectrum;
use crate::units;
use crate::C64;

/// Rotating frame and periodicity data derived from a two-tone schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetFrame {
    /// Frame rotation frequency (the first drive's carrier), rad/ns.
    pub omega_rot: f64,
    /// Signed tone difference ν = ω₂^d − ω₁^d, rad/ns.
    pub nu: f64,
    /// One drive-difference period T = 2π/|ν| in ns.
    pub period: f64,
}

impl FloquetFrame {
    /// Built from a schedule with exactly two drives at distinct carriers.
    pub fn from_schedule(schedule: &DriveSchedule) -> Result<Self> {
        if schedule.drives.len() != 2 {
            return Err(CoreError::InvalidInput(format!(
                "the rotating-frame analysis needs exactly two drives, got {}",
                schedule.drives.len()
            )));
        }
        let f1 = schedule.drives[0].frequency;
        let f2 = schedule.drives[1].frequency;
        if (f2 - f1).abs() < 1e-9 {
            return Err(CoreError::InvalidInput(
                "the two drive carriers must differ".into(),
            ));
        }
        let nu = units::ghz(f2 - f1);
        Ok(Self {
            omega_rot: units::ghz(f1),
            nu,
            period: std::f64::consts::TAU / nu.abs(),
        })
    }
}

/// Precomputed pieces of the frame Hamiltonian at drive scale `s`:
/// H_F(t) = H_static + c(t)·q_c† + conj(c(t))·q_c with
/// c(t) = (s Ω₂/2) e^{−i(ν t + φ₂)}.
struct FramePieces {
    h_static: Array2<C64>,
    /// Lowering-operator triplets of the driven mode: entries of q_c.
    lowering: Vec<(usize, usize, f64)>,
    amp2: f64,
    phi2: f64,
    nu: f64,
}

impl FramePieces {
    fn build(
        device: &DeviceSpec,
        schedule: &DriveSchedule,
        frame: &FloquetFrame,
        scale: f64,
    ) -> Result<Self> {
        schedule.validate_against(device)?;
        if schedule.drives.len() != 2 {
            return Err(CoreError::InvalidInput(
                "two drives required for the frame Hamiltonian".into(),
            ));
        }
        let dim = device.dim();
        let mut h: Array2<C64> = Array2::zeros((dim, dim));
        // Frame-shifted anharmonic ladders.
        for j in 0..dim {
            let mut e = 0.0;
            for (m, mode) in device.modes.iter().enumerate() {
                let n = device.occupation_of(j, m) as f64;
                e += (units::ghz(mode.frequency) - frame.omega_rot) * n
                    + units::ghz(mode.anharmonicity) / 2.0 * n * (n - 1.0);
            }
            h[(j, j)] = C64::new(e, 0.0);
        }
        // Excitation-conserving coupling parts g (q_a† q_b + q_a q_b†); the
        // double-excitation parts rotate at 2 ω_rot and are dropped.
        for cpl in &device.couplings {
            let qa = hilbert::lowering_operator(&cpl.mode_a, device)?;
            let qb = hilbert::lowering_operator(&cpl.mode_b, device)?;
            let g = units::ghz(cpl.strength);
            let ex = qa.t().mapv(|v| v.conj()).dot(&qb) + qb.t().mapv(|v| v.conj()).dot(&qa);
            h = h + ex.mapv(|v| v * g);
        }
        // Drive 1 is static in this frame: (s Ω₁/2)(q_c† e^{−iφ₁} + h.c.).
        let d1 = &schedule.drives[0];
        let amp1 = scale * d1.envelope.amplitude_angular() / 2.0;
        let e1 = C64::new(0.0, -d1.phase).exp() * amp1;
        for &(i, j, v) in &hilbert::drive_triplets(&d1.target, device)? {
            // triplets cover both (q† + q); apply phase on the raising part
            // (i < j is the lowering entry ⟨n−1|q|n⟩, i > j the raising).
            if i > j {
                h[(i, j)] += e1 * v;
            } else {
                h[(i, j)] += e1.conj() * v;
            }
        }
        let d2 = &schedule.drives[1];
        let lowering: Vec<(usize, usize, f64)> = {
            let m = device.mode_index(&d2.target)?;
            let stride = device.strides()[m];
            (0..dim)
                .filter_map(|j| {
                    let n = device.occupation_of(j, m);
                    (n >= 1).then(|| (j - stride, j, (n as f64).sqrt()))
                })
                .collect()
        };
        Ok(Self {
            h_static: h,
            lowering,
            amp2: scale * d2.envelope.amplitude_angular() / 2.0,
            phi2: d2.phase,
            nu: frame.nu,
        })
    }

    /// Dense H_F(t).
    fn hamiltonian(&self, t: f64) -> Array2<C64> {
        let mut h = self.h_static.clone();
        let c = C64::new(0.0, -(self.nu * t + self.phi2)).exp() * self.amp2;
        for &(i, j, v) in &self.lowering {
            // (i, j) is the lowering entry; the raising entry gets c.
            h[(j, i)] += c * v;
            h[(i, j)] += c.conj() * v;
        }
        h
    }
}

/// Rotating-frame Hamiltonian under the rotating-wave approximation at drive
/// scale `s`, evaluated at time `t`.
pub fn rwa_hamiltonian(
    device: &DeviceSpec,
    schedule: &DriveSchedule,
    frame: &FloquetFrame,
    scale: f64,
    t: f64,
) -> Result<Operator> {
    Ok(FramePieces::build(device, schedule, frame, scale)?.hamiltonian(t))
}

/// Quasienergies and mode labels at one drive scale.
#[derive(Debug, Clone)]
pub struct FloquetColumn {
    pub scale: f64,
    /// Quasienergy per bare basis index, folded to [−|ν|/2, |ν|/2), rad/ns.
    pub kappa_by_bare: Vec<f64>,
    /// |⟨bare|mode⟩|² of the mode assigned to each bare label.
    pub overlap_by_bare: Vec<f64>,
    /// Full overlap matrix: weights[(bare, eigen)] with the eigen column
    /// assigned to `assignment[bare]`.
    pub weights: Array2<f64>,
    pub assignment: Vec<usize>,
}

/// Fold a quasienergy into [−|ν|/2, |ν|/2).
pub fn fold_quasienergy(kappa: f64, nu_abs: f64) -> f64 {
    let mut k = kappa.rem_euclid(nu_abs);
    if k >= nu_abs / 2.0 {
        k -= nu_abs;
    }
    k
}

/// Integrate the one-period propagator of H_F and extract quasienergies
/// κ_m = (i/T) log of its unitary eigenvalues, with Floquet modes labeled by
/// maximal overlap against the bare basis.
pub fn quasienergies(
    device: &DeviceSpec,
    schedule: &DriveSchedule,
    frame: &FloquetFrame,
    scale: f64,
    rtol: f64,
) -> Result<FloquetColumn> {
    let pieces = FramePieces::build(device, schedule, frame, scale)?;
    let dim = device.dim();
    // Shift by the mean static diagonal to keep phases small.
    let e0 = (0..dim).map(|i| pieces.h_static[(i, i)].re).sum::<f64>() / dim as f64;
    let mut a_static = pieces.h_static.mapv(|v| v * C64::new(0.0, -1.0));
    for i in 0..dim {
        a_static[(i, i)] += C64::new(0.0, e0);
    }
    let mut f = |t: f64, y: &Array2<C64>, out: &mut Array2<C64>| {
        general_mat_mul(C64::new(1.0, 0.0), &a_static, y, C64::new(0.0, 0.0), out);
        let c = C64::new(0.0, -(pieces.nu * t + pieces.phi2)).exp() * pieces.amp2;
        let ys = y.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        let m = y.ncols();
        let ci = c * C64::new(0.0, -1.0);
        let cci = c.conj() * C64::new(0.0, -1.0);
        for &(i, j, v) in &pieces.lowering {
            // raising entry (j, i) with coefficient c, lowering (i, j) with
            // conj(c); both scaled by −i.
            let (rj, ri) = (j * m, i * m);
            for k in 0..m {
                os[rj + k] += ci * v * ys[ri + k];
                os[ri + k] += cci * v * ys[rj + k];
            }
        }
    };
    let eye: Array2<C64> = Array2::eye(dim);
    let opts = OdeOptions {
        rtol,
        atol: rtol * 1e-2,
        max_step: frame.period / 16.0,
        initial_step: None,
    };
    let (u, _) = ode::integrate_to(&mut f, 0.0, &eye, frame.period, &[], &opts)?;
    let u_dev = crate::dynamics::unitarity_deviation(&u.view());
    if u_dev > 1e-6 {
        return Err(CoreError::NonUnitaryPropagator { max_dev: u_dev });
    }
    let (evals, evecs) = u.eig()?;
    let nu_abs = frame.nu.abs();
    // κ = e0 − arg(λ)/T, folded.
    let kappas: Vec<f64> = evals
        .iter()
        .map(|l| fold_quasienergy(e0 - l.arg() / frame.period, nu_abs))
        .collect();
    let weights = Array2::from_shape_fn((dim, dim), |(i, k)| evecs[(i, k)].norm_sqr());
    let slots = spectrum::greedy_assignment(&weights, &kappas);
    let mut kappa_by_bare = vec![0.0; dim];
    let mut overlap_by_bare = vec![0.0; dim];
    let mut assignment = vec![0usize; dim];
    for (bare, (k, w)) in slots.into_iter().enumerate() {
        if k == usize::MAX {
            return Err(CoreError::LabelingFailure {
                label: device.label_of_index(bare).to_string(),
                detail: "Floquet mode assignment incomplete".into(),
            });
        }
        kappa_by_bare[bare] = kappas[k];
        overlap_by_bare[bare] = w;
        assignment[bare] = k;
    }
    Ok(FloquetColumn {
        scale,
        kappa_by_bare,
        overlap_by_bare,
        weights,
        assignment,
    })
}

/// Labeled quasienergies across a drive-amplitude sweep s ∈ [0, 1].
#[derive(Debug, Clone)]
pub struct QuasienergyMap {
    pub scales: Vec<f64>,
    pub columns: Vec<FloquetColumn>,
    /// |ν| in rad/ns.
    pub nu_abs: f64,
}

/// Compute the quasienergy map over the given amplitude scales.
pub fn quasienergy_map(
    device: &DeviceSpec,
    schedule: &DriveSchedule,
    frame: &FloquetFrame,
    scales: &[f64],
    rtol: f64,
) -> Result<QuasienergyMap> {
    let columns: Result<Vec<FloquetColumn>> = scales
        .par_iter()
        .map(|&s| quasienergies(device, schedule, frame, s, rtol))
        .collect();
    Ok(QuasienergyMap {
        scales: scales.to_vec(),
        columns: columns?,
        nu_abs: frame.nu.abs(),
    })
}

/// One ranked leakage candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageCandidate {
    pub label: FockLabel,
    /// Minimum circular quasienergy gap to the tracked state across the
    /// sweep, rad/ns.
    pub min_gap: f64,
    /// Maximum overlap of the candidate's Floquet mode with the tracked
    /// bare state across the sweep.
    pub hybridization: f64,
}

#[derive(Debug, Clone)]
pub struct LeakageRanking {
    pub candidates: Vec<LeakageCandidate>,
    pub warnings: Vec<String>,
}

/// Rank non-computational states by proximity to the tracked state in
/// quasienergy across the sweep (ascending minimum circular gap, ties broken
/// by larger exchanged overlap), restricted to candidates entering `window`.
pub fn identify_leakage_candidates(
    map: &QuasienergyMap,
    device: &DeviceSpec,
    pair: (usize, usize),
    state: &FockLabel,
    window: f64,
) -> Result<LeakageRanking> {
    let tracked = device.fock_index(state)?;
    let comp: Vec<usize> = gate::computational_labels(device, pair)
        .iter()
        .map(|l| device.fock_index(l))
        .collect::<Result<_>>()?;
    let dim = device.dim();
    let circular_gap = |a: f64, b: f64| {
        let g = (a - b).abs() % map.nu_abs;
        g.min(map.nu_abs - g)
    };
    let mut warnings = Vec::new();
    for col in &map.columns {
        if col.overlap_by_bare[tracked] < 0.5 {
            warnings.push(format!(
                "tracked state {state} loses identity at s = {} (overlap {:.3})",
                col.scale, col.overlap_by_bare[tracked]
            ));
        }
    }
    let mut candidates = Vec::new();
    for bare in 0..dim {
        if bare == tracked || comp.contains(&bare) {
            continue;
        }
        let mut min_gap = f64::MAX;
        let mut hybridization = 0.0f64;
        for col in &map.columns {
            let gap = circular_gap(col.kappa_by_bare[bare], col.kappa_by_bare[tracked]);
            min_gap = min_gap.min(gap);
            hybridization = hybridization.max(col.weights[(tracked, col.assignment[bare])]);
        }
        if min_gap <= window {
            candidates.push(LeakageCandidate {
                label: device.label_of_index(bare),
                min_gap,
                hybridization,
            });
        }
    }
    candidates.sort_by(|a, b| {
        a.min_gap
            .partial_cmp(&b.min_gap)
            .unwrap()
            .then(b.hybridization.partial_cmp(&a.hybridization).unwrap())
            .then(a.label.to_string().cmp(&b.label.to_string()))
    });
    Ok(LeakageRanking {
        candidates,
        warnings,
    })
}

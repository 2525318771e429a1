//! Fourth-order effective coupling between the single-excitation states of
//! the two qubits: a generic path-sum engine over virtual transitions with
//! the drives treated as quantized photon modes, the equivalent closed form,
//! and a dynamics-based extraction used for cross-validation.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, PropagationSettings};
use crate::error::{CoreError, Result};
use crate::hilbert::{self, DeviceSpec, FockLabel};
use crate::pulse::DriveSchedule;
use crate::spectrum;
use crate::C64;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Occupations of |Q1, Q2, Qc, D1, D2⟩: the two qubits, the coupler, and
/// the two drive photon modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub q1: u8,
    pub q2: u8,
    pub qc: u8,
    pub d1: u8,
    pub d2: u8,
}

impl ExtendedState {
    pub const fn new(q1: u8, q2: u8, qc: u8, d1: u8, d2: u8) -> Self {
        Self { q1, q2, qc, d1, d2 }
    }
}

impl std::fmt::Display for ExtendedState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{}{}{}{}{}⟩", self.q1, self.q2, self.qc, self.d1, self.d2)
    }
}

/// Parameters entering the fourth-order sums, all in rad/ns:
/// qubit-coupler detunings Δ_k = ω_k − ω_c, drive detuning δ, drive
/// amplitudes Ω_k(0), couplings g_k, and the coupler anharmonicity α_c.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationContext {
    pub delta1: f64,
    pub delta2: f64,
    pub delta: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub g1: f64,
    pub g2: f64,
    pub alpha_c: f64,
}

impl PerturbationContext {
    /// Context for qubit modes `a`, `b` coupled to `coupler`, with drive
    /// amplitudes and drive detuning δ in GHz.
    pub fn for_pair(
        device: &DeviceSpec,
        a: usize,
        b: usize,
        coupler: usize,
        amp1_ghz: f64,
        amp2_ghz: f64,
        delta_ghz: f64,
    ) -> Result<Self> {
        use crate::units::ghz;
        let find_g = |q: usize| -> Result<f64> {
            let (ql, cl) = (&device.modes[q].label, &device.modes[coupler].label);
            device
                .couplings
                .iter()
                .find(|c| {
                    (&c.mode_a == ql && &c.mode_b == cl) || (&c.mode_a == cl && &c.mode_b == ql)
                })
                .map(|c| ghz(c.strength))
                .ok_or_else(|| {
                    CoreError::InvalidDevice(format!("no coupling between `{ql}` and `{cl}`"))
                })
        };
        Ok(Self {
            delta1: ghz(device.modes[a].frequency - device.modes[coupler].frequency),
            delta2: ghz(device.modes[b].frequency - device.modes[coupler].frequency),
            delta: ghz(delta_ghz),
            omega1: ghz(amp1_ghz),
            omega2: ghz(amp2_ghz),
            g1: find_g(a)?,
            g2: find_g(b)?,
            alpha_c: ghz(device.modes[coupler].anharmonicity),
        })
    }

    /// Dispersive-regime guard: detunings should dominate the couplings and
    /// the coupler-drive detunings should dominate the drive strengths.
    pub fn dispersive_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.delta1.abs() <= 3.0 * self.g1.abs() {
            w.push(format!(
                "|Δ1| = {:.3} rad/ns not large against 3 g1 = {:.3}",
                self.delta1.abs(),
                3.0 * self.g1.abs()
            ));
        }
        if self.delta2.abs() <= 3.0 * self.g2.abs() {
            w.push(format!(
                "|Δ2| = {:.3} rad/ns not large against 3 g2 = {:.3}",
                self.delta2.abs(),
                3.0 * self.g2.abs()
            ));
        }
        let dc1 = (self.delta1 - self.alpha_c - self.delta).abs();
        let dc2 = (self.delta2 - self.alpha_c - self.delta).abs();
        if dc1 <= 3.0 * self.omega1.abs() {
            w.push(format!(
                "|ω_c − ω_1^d| = {dc1:.3} rad/ns not large against 3 Ω1 = {:.3}",
                3.0 * self.omega1.abs()
            ));
        }
        if dc2 <= 3.0 * self.omega2.abs() {
            w.push(format!(
                "|ω_c − ω_2^d| = {dc2:.3} rad/ns not large against 3 Ω2 = {:.3}",
                3.0 * self.omega2.abs()
            ));
        }
        w
    }

    /// Extended-state energy with the coupler frequency gauged to zero;
    /// energy differences along excitation-conserving paths are unchanged.
    fn energy(&self, s: &ExtendedState) -> f64 {
        let nc = s.qc as f64;
        let w1d = self.alpha_c - self.delta1 + self.delta;
        let w2d = self.alpha_c - self.delta2 + self.delta;
        self.delta1 * s.q1 as f64
            + self.delta2 * s.q2 as f64
            + self.alpha_c / 2.0 * nc * (nc - 1.0)
            + w1d * s.d1 as f64
            + w2d * s.d2 as f64
    }

    /// Matrix element of one elementary exchange between consecutive
    /// extended states: qubit-coupler swaps carry g_k with bosonic factors,
    /// drive-photon exchanges carry Ω_k/2 with the coupler and drive-mode
    /// bosonic factors.
    fn hop_element(&self, from: &ExtendedState, to: &ExtendedState) -> Result<f64> {
        let dq1 = to.q1 as i8 - from.q1 as i8;
        let dq2 = to.q2 as i8 - from.q2 as i8;
        let dqc = to.qc as i8 - from.qc as i8;
        let dd1 = to.d1 as i8 - from.d1 as i8;
        let dd2 = to.d2 as i8 - from.d2 as i8;
        let boson = |a: u8, b: u8| (a.max(b) as f64).sqrt();
        match (dq1, dq2, dqc, dd1, dd2) {
            (x, 0, y, 0, 0) if x == -y && x.abs() == 1 => {
                Ok(self.g1 * boson(from.q1, to.q1) * boson(from.qc, to.qc))
            }
            (0, x, y, 0, 0) if x == -y && x.abs() == 1 => {
                Ok(self.g2 * boson(from.q2, to.q2) * boson(from.qc, to.qc))
            }
            (0, 0, y, x, 0) if x == -y && x.abs() == 1 => {
                Ok(self.omega1 / 2.0 * boson(from.qc, to.qc) * boson(from.d1, to.d1))
            }
            (0, 0, y, 0, x) if x == -y && x.abs() == 1 => {
                Ok(self.omega2 / 2.0 * boson(from.qc, to.qc) * boson(from.d2, to.d2))
            }
            _ => Err(CoreError::InvalidInput(format!(
                "{from} → {to} is not an elementary exchange"
            ))),
        }
    }
}

/// A fourth-order virtual transition: initial, three intermediates, final.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionPath {
    pub states: [ExtendedState; 5],
}

impl TransitionPath {
    pub fn new(states: [ExtendedState; 5]) -> Self {
        Self { states }
    }
}

/// The eight paths linking |10011⟩ and |01002⟩: a drive-1 photon absorbed,
/// a drive-2 photon emitted, one excitation moved from qubit 1 to qubit 2.
pub fn canonical_paths() -> [TransitionPath; 8] {
    let s = ExtendedState::new;
    [
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(0, 0, 1, 1, 1),
            s(0, 0, 2, 0, 1),
            s(0, 1, 1, 0, 1),
            s(0, 1, 0, 0, 2),
        ]),
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(0, 0, 1, 1, 1),
            s(0, 0, 2, 0, 1),
            s(0, 0, 1, 0, 2),
            s(0, 1, 0, 0, 2),
        ]),
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(1, 0, 1, 0, 1),
            s(0, 0, 2, 0, 1),
            s(0, 1, 1, 0, 1),
            s(0, 1, 0, 0, 2),
        ]),
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(1, 0, 1, 0, 1),
            s(0, 0, 2, 0, 1),
            s(0, 0, 1, 0, 2),
            s(0, 1, 0, 0, 2),
        ]),
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(1, 0, 1, 0, 1),
            s(1, 1, 0, 0, 1),
            s(0, 1, 1, 0, 1),
            s(0, 1, 0, 0, 2),
        ]),
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(1, 0, 1, 0, 1),
            s(1, 0, 0, 0, 2),
            s(0, 0, 1, 0, 2),
            s(0, 1, 0, 0, 2),
        ]),
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(0, 0, 1, 1, 1),
            s(0, 1, 0, 1, 1),
            s(0, 1, 1, 0, 1),
            s(0, 1, 0, 0, 2),
        ]),
        TransitionPath::new([
            s(1, 0, 0, 1, 1),
            s(0, 0, 1, 1, 1),
            s(0, 0, 0, 1, 2),
            s(0, 0, 1, 0, 2),
            s(0, 1, 0, 0, 2),
        ]),
    ]
}

/// Value of one path: product of the four hop elements divided by the three
/// energy-denominator factors (E_i − E_s).
pub fn path_value(ctx: &PerturbationContext, path: &TransitionPath, index: usize) -> Result<f64> {
    let e_i = ctx.energy(&path.states[0]);
    let mut numerator = 1.0;
    for hop in path.states.windows(2) {
        numerator *= ctx.hop_element(&hop[0], &hop[1])?;
    }
    let mut denominator = 1.0;
    for s in &path.states[1..4] {
        let gap = e_i - ctx.energy(s);
        if gap.abs() <= 1e-6 {
            return Err(CoreError::SingularPath {
                index,
                state: s.to_string(),
                gap: gap.abs(),
            });
        }
        denominator *= gap;
    }
    Ok(numerator / denominator)
}

/// Fourth-order effective coupling: sum of the supplied path values, in
/// rad/ns.
pub fn path_sum_j(ctx: &PerturbationContext, paths: &[TransitionPath]) -> Result<f64> {
    let mut j = 0.0;
    for (i, p) in paths.iter().enumerate() {
        j += path_value(ctx, p, i)?;
    }
    Ok(j)
}

/// The eight closed-form terms, ordered to match [`canonical_paths`]
/// term-by-term.
pub fn closed_form_terms(ctx: &PerturbationContext) -> Result<[f64; 8]> {
    let c = ctx.g1 * ctx.g2 * ctx.omega1 * ctx.omega2;
    let d1 = ctx.delta1;
    let d2 = ctx.delta2;
    let dd = ctx.delta;
    let a1 = ctx.delta1 - ctx.alpha_c - ctx.delta;
    let a2 = ctx.delta2 - ctx.alpha_c - ctx.delta;
    let a12 = ctx.delta1 + ctx.delta2 - ctx.alpha_c - ctx.delta;
    let w12 = ctx.delta1 - ctx.delta2; // ω1 − ω2
    let terms: [(f64, f64); 8] = [
        (-SQRT2 / 2.0, d1 * dd * a2),
        (SQRT2 / 2.0, d1 * dd * d2),
        (SQRT2 / 2.0, a1 * dd * a2),
        (-SQRT2 / 2.0, a1 * dd * d2),
        (-SQRT2 / 4.0, a1 * a12 * a2),
        (SQRT2 / 4.0, a1 * w12 * d2),
        (-SQRT2 / 4.0, d1 * w12 * a2),
        (SQRT2 / 4.0, d1 * a12 * d2),
    ];
    let mut out = [0.0f64; 8];
    for (i, (coeff, den)) in terms.iter().enumerate() {
        if den.abs() <= 1e-18 {
            return Err(CoreError::SingularPath {
                index: i,
                state: "closed-form denominator".into(),
                gap: den.abs(),
            });
        }
        out[i] = coeff * c / den;
    }
    Ok(out)
}

/// Closed-form J₁₂ in rad/ns: the eight-term expression with the coupler
/// anharmonicity in every parallel denominator factor.
pub fn closed_form_j12(ctx: &PerturbationContext) -> Result<f64> {
    Ok(closed_form_terms(ctx)?.iter().sum())
}

/// Least-squares fit of P(t) = A sin²(J t) to a sampled population record.
/// Returns (A, J) with J in rad/ns.
pub fn fit_swap_rate(times: &[f64], populations: &[f64]) -> Result<(f64, f64)> {
    if times.len() != populations.len() || times.len() < 8 {
        return Err(CoreError::InvalidInput(
            "need at least 8 samples to fit an oscillation".into(),
        ));
    }
    let p_max = populations.iter().cloned().fold(f64::MIN, f64::max);
    if p_max < 0.2 {
        return Err(CoreError::ExtractionFailure(format!(
            "max transfer {p_max:.3} below 0.2"
        )));
    }
    // First crossing of half maximum seeds J: sin²(J t) = 1/2 at J t = π/4.
    let half = p_max / 2.0;
    let mut t_half = None;
    for (w, p) in times.windows(2).zip(populations.windows(2)) {
        if p[0] < half && p[1] >= half {
            let frac = (half - p[0]) / (p[1] - p[0]);
            t_half = Some(w[0] + frac * (w[1] - w[0]));
            break;
        }
    }
    let t_half = t_half.ok_or_else(|| {
        CoreError::ExtractionFailure("population never crosses half maximum".into())
    })?;
    let j0 = std::f64::consts::FRAC_PI_4 / t_half;

    // For trial J the amplitude solves linearly: A = Σ P s² / Σ s⁴.
    let sse = |j: f64| -> (f64, f64) {
        let mut ps2 = 0.0;
        let mut s4 = 0.0;
        for (&t, &p) in times.iter().zip(populations) {
            let s2 = (j * t).sin().powi(2);
            ps2 += p * s2;
            s4 += s2 * s2;
        }
        let a = if s4 > 0.0 { ps2 / s4 } else { 0.0 };
        let mut err = 0.0;
        for (&t, &p) in times.iter().zip(populations) {
            let r = p - a * (j * t).sin().powi(2);
            err += r * r;
        }
        (err, a)
    };
    let mut best = (f64::MAX, j0, 0.0);
    let n_grid = 161;
    for k in 0..n_grid {
        let j = j0 * (0.5 + k as f64 / (n_grid - 1) as f64);
        let (err, a) = sse(j);
        if err < best.0 {
            best = (err, j, a);
        }
    }
    let dj = j0 / (n_grid - 1) as f64;
    let (e0, _) = sse(best.1 - dj);
    let (e1, _) = sse(best.1);
    let (e2, _) = sse(best.1 + dj);
    let denom = e0 - 2.0 * e1 + e2;
    let j_ref = if denom.abs() > 1e-30 {
        best.1 + dj * 0.5 * (e0 - e2) / denom
    } else {
        best.1
    };
    let (_, a_ref) = sse(j_ref);
    Ok((a_ref, j_ref))
}

/// Extract the effective coupling from the plateau swap oscillation: start
/// in the dressed one-excitation state of qubit `pair.0`, drive at the
/// calibrated frequencies with constant envelopes, and fit
/// P(t) = A sin²(J t) against the dressed one-excitation state of
/// `pair.1`.
pub fn extract_j_from_dynamics(
    device: &DeviceSpec,
    schedule: &DriveSchedule,
    pair: (usize, usize),
    horizon: f64,
    settings: &PropagationSettings,
) -> Result<f64> {
    let h = hilbert::bare_hamiltonian(device)?;
    let eig = spectrum::eigensystem(&h)?;
    let assignment = spectrum::dressed_label(device, &eig)?;
    let n = device.n_modes();
    let label_for = |mode: usize| {
        let mut occ = vec![0usize; n];
        occ[mode] = 1;
        FockLabel::new(occ)
    };
    let lvl_a = assignment.get(device, &label_for(pair.0))?;
    let lvl_b = assignment.get(device, &label_for(pair.1))?;
    let psi0: Array1<C64> = eig.1.column(lvl_a.eigen_index).to_owned();
    let target: Array1<C64> = eig.1.column(lvl_b.eigen_index).to_owned();

    let n_samples = 600;
    let grid: Vec<f64> = (0..=n_samples)
        .map(|k| horizon * k as f64 / n_samples as f64)
        .collect();
    let local = PropagationSettings {
        output_grid: grid.clone(),
        ..settings.clone()
    };
    let traj = dynamics::propagate_state(device, schedule, &psi0, &local)?;
    let pops = traj.overlap_population(&target);
    let (_, j) = fit_swap_rate(&grid, &pops)?;
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{CouplingSpec, ModeSpec};
    use crate::pulse::{DriveSpec, Envelope};
    use crate::units;

    fn aba_context() -> PerturbationContext {
        PerturbationContext {
            delta1: units::ghz(5.0 - 7.0),
            delta2: units::ghz(5.9 - 7.0),
            delta: units::ghz(-0.030),
            omega1: units::ghz(0.160),
            omega2: units::ghz(0.160),
            g1: units::ghz(0.190),
            g2: units::ghz(0.100),
            alpha_c: units::ghz(-0.400),
        }
    }

    #[test]
    fn paths_are_elementary() {
        let ctx = aba_context();
        for (i, p) in canonical_paths().iter().enumerate() {
            assert!(path_value(&ctx, p, i).is_ok(), "path {i} invalid");
        }
    }

    #[test]
    fn zero_drive_amplitude_kills_every_path() {
        let mut ctx = aba_context();
        ctx.omega1 = 0.0;
        let j = path_sum_j(&ctx, &canonical_paths()).unwrap();
        assert_eq!(j, 0.0);
    }

    #[test]
    fn path_sum_matches_closed_form_term_by_term() {
        let ctx = aba_context();
        let terms = closed_form_terms(&ctx).unwrap();
        for (i, p) in canonical_paths().iter().enumerate() {
            let pv = path_value(&ctx, p, i).unwrap();
            let rel = ((pv - terms[i]) / terms[i]).abs();
            assert!(
                rel < 1e-10,
                "term {i}: path {pv:.6e} vs closed {:.6e} (rel {rel:.2e})",
                terms[i]
            );
        }
    }

    #[test]
    fn random_dispersive_draws_agree() {
        // 50 deterministic pseudo-random dispersive-regime contexts.
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for draw in 0..50 {
            let ctx = PerturbationContext {
                delta1: units::ghz(-3.0 + 1.5 * next()),
                delta2: units::ghz(-1.8 + 1.2 * next()),
                delta: units::ghz(-0.05 + 0.03 * next()),
                omega1: units::ghz(0.08 + 0.15 * next()),
                omega2: units::ghz(0.08 + 0.15 * next()),
                g1: units::ghz(0.05 + 0.2 * next()),
                g2: units::ghz(0.05 + 0.2 * next()),
                alpha_c: units::ghz(-0.5 + 0.25 * next()),
            };
            let terms = closed_form_terms(&ctx).unwrap();
            for (i, p) in canonical_paths().iter().enumerate() {
                let pv = path_value(&ctx, p, i).unwrap();
                let rel = ((pv - terms[i]) / terms[i]).abs();
                assert!(rel < 1e-10, "draw {draw}, term {i}: rel {rel:.2e}");
            }
        }
    }

    #[test]
    fn closed_form_zero_when_uncoupled() {
        let mut ctx = aba_context();
        ctx.g1 = 0.0;
        assert_eq!(closed_form_j12(&ctx).unwrap(), 0.0);
    }

    #[test]
    fn anharmonicity_controls_the_interaction() {
        // |J| decreases monotonically toward 0 as α_c → 0, and the α_c = 0
        // point sits below 3% of the −400 MHz value.
        let j_400 = closed_form_j12(&aba_context()).unwrap().abs();
        let mut prev = f64::MAX;
        for k in 0..=20 {
            let alpha = -0.400 + 0.4 * k as f64 / 20.0;
            let mut ctx = aba_context();
            ctx.alpha_c = units::ghz(alpha);
            let j = closed_form_j12(&ctx).unwrap().abs();
            assert!(j <= prev * (1.0 + 1e-9), "not monotone at α_c = {alpha}");
            prev = j;
        }
        let mut ctx0 = aba_context();
        ctx0.alpha_c = 0.0;
        let j0 = closed_form_j12(&ctx0).unwrap().abs();
        assert!(j0 <= 0.03 * j_400, "J(0) = {j0:.3e}, J(-400 MHz) = {j_400:.3e}");
    }

    #[test]
    fn swap_symmetry_in_magnitude() {
        let ctx = aba_context();
        let swapped = PerturbationContext {
            delta1: ctx.delta2,
            delta2: ctx.delta1,
            omega1: ctx.omega2,
            omega2: ctx.omega1,
            g1: ctx.g2,
            g2: ctx.g1,
            ..ctx.clone()
        };
        let j = closed_form_j12(&ctx).unwrap();
        let js = closed_form_j12(&swapped).unwrap();
        assert!(((j.abs() - js.abs()) / j.abs()).abs() < 1e-12, "{j} vs {js}");
    }

    #[test]
    fn linear_in_each_coupling_and_amplitude() {
        let ctx = aba_context();
        let j = closed_form_j12(&ctx).unwrap();
        for field in 0..4 {
            let mut c2 = ctx.clone();
            match field {
                0 => c2.omega1 *= 2.0,
                1 => c2.omega2 *= 2.0,
                2 => c2.g1 *= 2.0,
                _ => c2.g2 *= 2.0,
            }
            let j2 = closed_form_j12(&c2).unwrap();
            assert!(((j2 - 2.0 * j) / j).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_denominator_is_reported() {
        let mut ctx = aba_context();
        // δ → 0 makes the doubly excited coupler intermediates resonant
        // with the initial state.
        ctx.delta = 0.0;
        let paths = canonical_paths();
        let err = path_value(&ctx, &paths[0], 0);
        assert!(matches!(err, Err(CoreError::SingularPath { .. })));
    }

    #[test]
    fn synthetic_swap_rate_recovery() {
        let j_true = 5.3e-3; // rad/ns
        let a_true = 0.93;
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 1.2).collect();
        let pops: Vec<f64> = times
            .iter()
            .map(|&t| a_true * (j_true * t).sin().powi(2))
            .collect();
        let (a, j) = fit_swap_rate(&times, &pops).unwrap();
        assert!(((j - j_true) / j_true).abs() < 1e-3, "J = {j}");
        assert!((a - a_true).abs() < 1e-3);
    }

    #[test]
    fn no_oscillation_is_extraction_failure() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        let pops = vec![0.01; 101];
        assert!(matches!(
            fit_swap_rate(&times, &pops),
            Err(CoreError::ExtractionFailure(_))
        ));
    }

    fn table_one() -> DeviceSpec {
        DeviceSpec::new(
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
        .unwrap()
    }

    #[test]
    fn zero_drives_give_no_transfer() {
        let dev = table_one();
        let sched = DriveSchedule::new(vec![
            DriveSpec::new("qc", 8.654, 0.0, Envelope::constant(0.0, 400.0)).unwrap(),
            DriveSpec::new("qc", 7.744, 0.0, Envelope::constant(0.0, 400.0)).unwrap(),
        ]);
        let settings = PropagationSettings {
            rtol: 1e-8,
            atol: 1e-10,
            ..Default::default()
        };
        let r = extract_j_from_dynamics(&dev, &sched, (0, 1), 400.0, &settings);
        assert!(matches!(r, Err(CoreError::ExtractionFailure(_))));
    }

    #[test]
    fn dynamics_extraction_within_quarter_of_closed_form() {
        // Cross-validation at the table-device working point.
        let dev = table_one();
        let ctx = PerturbationContext::for_pair(&dev, 0, 1, 2, 0.160, 0.160, -0.030).unwrap();
        let j_closed = closed_form_j12(&ctx).unwrap();
        let horizon = 1.2 * std::f64::consts::FRAC_PI_2 / j_closed.abs();
        let sched = DriveSchedule::new(vec![
            DriveSpec::new("qc", 8.654, 0.0, Envelope::constant(0.160, horizon)).unwrap(),
            DriveSpec::new("qc", 7.744, 0.0, Envelope::constant(0.160, horizon)).unwrap(),
        ]);
        let settings = PropagationSettings {
            rtol: 1e-8,
            atol: 1e-10,
            ..Default::default()
        };
        let j_dyn = extract_j_from_dynamics(&dev, &sched, (0, 1), horizon, &settings).unwrap();
        let rel = ((j_closed.abs() - j_dyn.abs()) / j_dyn.abs()).abs();
        assert!(
            rel <= 0.25,
            "J_closed = {:.4} MHz, J_dyn = {:.4} MHz, rel {rel:.3}",
            units::to_mhz(j_closed.abs()),
            units::to_mhz(j_dyn.abs())
        );
    }

    #[test]
    fn dispersive_guard_flags_strong_drive() {
        let mut ctx = aba_context();
        assert!(ctx.dispersive_warnings().is_empty());
        ctx.omega1 = units::ghz(2.0);
        assert!(!ctx.dispersive_warnings().is_empty());
    }
}

//! Composite truncated-oscillator space: operator construction, basis
//! indexing, and assembly of the static and drive Hamiltonians.
//!
//! Basis ordering is row-major over the declared mode list, so for modes
//! (Q1, Q2, Qc) with 4 levels each, the flat index of |m, n, p⟩ is
//! 16 m + 4 n + p.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::units;
use crate::C64;

/// Dense complex square matrix over the composite basis.
pub type Operator = Array2<C64>;

/// One oscillator mode: a transmon qubit or the coupler.
///
/// `frequency` and `anharmonicity` are linear frequencies in GHz (ω/2π,
/// α/2π); the anharmonicity is negative for transmons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: String,
    pub frequency: f64,
    pub anharmonicity: f64,
    pub levels: usize,
}

impl ModeSpec {
    pub fn new(label: impl Into<String>, frequency: f64, anharmonicity: f64, levels: usize) -> Self {
        Self {
            label: label.into(),
            frequency,
            anharmonicity,
            levels,
        }
    }
}

/// Fixed capacitive coupling between two modes, strength g/2π in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub mode_a: String,
    pub mode_b: String,
    pub strength: f64,
}

impl CouplingSpec {
    pub fn new(mode_a: impl Into<String>, mode_b: impl Into<String>, strength: f64) -> Self {
        Self {
            mode_a: mode_a.into(),
            mode_b: mode_b.into(),
            strength,
        }
    }
}

/// The device: an ordered list of modes plus the fixed coupling edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub modes: Vec<ModeSpec>,
    pub couplings: Vec<CouplingSpec>,
}

/// Occupation-number label for one composite basis state, one entry per
/// mode in declared order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockLabel(pub Vec<usize>);

impl FockLabel {
    pub fn new(occupations: impl Into<Vec<usize>>) -> Self {
        Self(occupations.into())
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }
}

impl std::fmt::Display for FockLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|")?;
        for n in &self.0 {
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl DeviceSpec {
    pub fn new(modes: Vec<ModeSpec>, couplings: Vec<CouplingSpec>) -> Result<Self> {
        let device = Self { modes, couplings };
        device.validate()?;
        Ok(device)
    }

    fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(CoreError::InvalidDevice("no modes declared".into()));
        }
        for m in &self.modes {
            if m.levels < 2 {
                return Err(CoreError::InvalidDevice(format!(
                    "mode `{}` needs at least 2 levels, got {}",
                    m.label, m.levels
                )));
            }
            if m.frequency <= 0.0 {
                return Err(CoreError::InvalidDevice(format!(
                    "mode `{}` frequency must be positive, got {}",
                    m.label, m.frequency
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.modes {
            if !seen.insert(m.label.as_str()) {
                return Err(CoreError::InvalidDevice(format!(
                    "duplicate mode label `{}`",
                    m.label
                )));
            }
        }
        for c in &self.couplings {
            if c.mode_a == c.mode_b {
                return Err(CoreError::InvalidDevice(format!(
                    "coupling endpoints must differ, got `{}` twice",
                    c.mode_a
                )));
            }
            self.mode_index(&c.mode_a)?;
            self.mode_index(&c.mode_b)?;
        }
        Ok(())
    }

    /// Composite Hilbert-space dimension (product of mode levels).
    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.levels).product()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| CoreError::UnknownMode(label.to_string()))
    }

    /// Row-major strides, one per mode.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.modes.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.modes[i + 1].levels;
        }
        strides
    }

    /// Flat basis index of a Fock label under the declared mode ordering.
    pub fn fock_index(&self, label: &FockLabel) -> Result<usize> {
        if label.0.len() != self.modes.len() {
            return Err(CoreError::InvalidInput(format!(
                "label has {} occupations, device has {} modes",
                label.0.len(),
                self.modes.len()
            )));
        }
        let strides = self.strides();
        let mut idx = 0usize;
        for (k, (&n, mode)) in label.0.iter().zip(&self.modes).enumerate() {
            if n >= mode.levels {
                return Err(CoreError::OccupationOutOfRange {
                    mode: mode.label.clone(),
                    occupation: n,
                    levels: mode.levels,
                });
            }
            idx += n * strides[k];
        }
        Ok(idx)
    }

    /// Inverse of [`fock_index`](Self::fock_index).
    pub fn label_of_index(&self, mut index: usize) -> FockLabel {
        let strides = self.strides();
        let occ = strides
            .iter()
            .zip(&self.modes)
            .map(|(&s, m)| {
                let n = (index / s) % m.levels;
                index -= n * s;
                n
            })
            .collect();
        FockLabel(occ)
    }

    /// Occupation of `mode` in basis state `index`.
    pub fn occupation_of(&self, index: usize, mode: usize) -> usize {
        let strides = self.strides();
        (index / strides[mode]) % self.modes[mode].levels
    }

    /// Copy of the device with every mode truncated to `levels`.
    pub fn with_levels(&self, levels: usize) -> Result<Self> {
        let modes = self
            .modes
            .iter()
            .map(|m| ModeSpec {
                levels,
                ..m.clone()
            })
            .collect();
        Self::new(modes, self.couplings.clone())
    }

    /// Copy of the device with one mode retuned to `frequency` (GHz).
    pub fn with_frequency(&self, label: &str, frequency: f64) -> Result<Self> {
        let idx = self.mode_index(label)?;
        let mut modes = self.modes.clone();
        modes[idx].frequency = frequency;
        Self::new(modes, self.couplings.clone())
    }

    pub fn mode(&self, label: &str) -> Result<&ModeSpec> {
        Ok(&self.modes[self.mode_index(label)?])
    }
}

/// Annihilation operator of `mode` embedded in the composite space:
/// entries √n on the (n−1, n) single-mode positions, identity elsewhere.
pub fn lowering_operator(mode: &str, device: &DeviceSpec) -> Result<Operator> {
    let m = device.mode_index(mode)?;
    let dim = device.dim();
    let stride = device.strides()[m];
    let mut q = Operator::zeros((dim, dim));
    for j in 0..dim {
        let n = device.occupation_of(j, m);
        if n >= 1 {
            q[(j - stride, j)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    Ok(q)
}

/// Number operator q†q of `mode` embedded in the composite space.
pub fn number_operator(mode: &str, device: &DeviceSpec) -> Result<Operator> {
    let m = device.mode_index(mode)?;
    let dim = device.dim();
    let mut n_op = Operator::zeros((dim, dim));
    for j in 0..dim {
        n_op[(j, j)] = C64::new(device.occupation_of(j, m) as f64, 0.0);
    }
    Ok(n_op)
}

/// Hermitian quadrature operator (q† + q) of the addressed mode.
pub fn drive_operator(mode: &str, device: &DeviceSpec) -> Result<Operator> {
    let m = device.mode_index(mode)?;
    let dim = device.dim();
    let stride = device.strides()[m];
    let mut x = Operator::zeros((dim, dim));
    for j in 0..dim {
        let n = device.occupation_of(j, m);
        if n >= 1 {
            let v = C64::new((n as f64).sqrt(), 0.0);
            x[(j - stride, j)] = v;
            x[(j, j - stride)] = v;
        }
    }
    Ok(x)
}

/// Sparse triplet form of (q† + q) for `mode`; entries are real.
///
/// Used by the propagators to apply the drive term without a dense product.
pub fn drive_triplets(mode: &str, device: &DeviceSpec) -> Result<Vec<(usize, usize, f64)>> {
    let m = device.mode_index(mode)?;
    let dim = device.dim();
    let stride = device.strides()[m];
    let mut t = Vec::with_capacity(2 * dim);
    for j in 0..dim {
        let n = device.occupation_of(j, m);
        if n >= 1 {
            let v = (n as f64).sqrt();
            t.push((j - stride, j, v));
            t.push((j, j - stride, v));
        }
    }
    Ok(t)
}

/// Static Hamiltonian of the device in angular units (rad/ns):
/// Σ_j [ω_j q_j†q_j + (α_j/2) q_j†q_j†q_j q_j]
/// + Σ couplings g (q_a† + q_a)(q_b† + q_b).
pub fn bare_hamiltonian(device: &DeviceSpec) -> Result<Operator> {
    let dim = device.dim();
    let mut h = Operator::zeros((dim, dim));
    // Diagonal anharmonic ladders.
    for j in 0..dim {
        let mut e = 0.0;
        for (m, mode) in device.modes.iter().enumerate() {
            let n = device.occupation_of(j, m) as f64;
            e += units::ghz(mode.frequency) * n
                + units::ghz(mode.anharmonicity) / 2.0 * n * (n - 1.0);
        }
        h[(j, j)] = C64::new(e, 0.0);
    }
    // Quadrature-quadrature couplings; operators on distinct modes commute,
    // so the matrix product realizes the tensor factor directly.
    for c in &device.couplings {
        let xa = drive_operator(&c.mode_a, device)?;
        let xb = drive_operator(&c.mode_b, device)?;
        let g = units::ghz(c.strength);
        h = h + xa.dot(&xb).mapv(|v| v * g);
    }
    Ok(h)
}

/// Max-norm deviation from Hermiticity.
pub fn hermiticity_deviation(op: &Operator) -> f64 {
    let (r, c) = op.dim();
    debug_assert_eq!(r, c);
    let mut max = 0.0f64;
    for i in 0..r {
        for j in i..c {
            let dev = (op[(i, j)] - op[(j, i)].conj()).norm();
            if dev > max {
                max = dev;
            }
        }
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn single_mode(levels: usize) -> DeviceSpec {
        DeviceSpec::new(
            vec![ModeSpec::new("q", 5.0, -0.2, levels)],
            vec![],
        )
        .unwrap()
    }

    pub(crate) fn table_one() -> DeviceSpec {
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
    fn fock_index_examples() {
        let dev = table_one();
        assert_eq!(dev.fock_index(&FockLabel::new([0, 0, 0])).unwrap(), 0);
        assert_eq!(dev.fock_index(&FockLabel::new([1, 0, 0])).unwrap(), 16);
        assert_eq!(dev.fock_index(&FockLabel::new([0, 0, 2])).unwrap(), 2);
    }

    #[test]
    fn fock_index_round_trip() {
        let dev = table_one();
        for i in 0..dev.dim() {
            let label = dev.label_of_index(i);
            assert_eq!(dev.fock_index(&label).unwrap(), i);
        }
    }

    #[test]
    fn fock_index_out_of_range() {
        let dev = table_one();
        assert!(matches!(
            dev.fock_index(&FockLabel::new([4, 0, 0])),
            Err(CoreError::OccupationOutOfRange { .. })
        ));
    }

    #[test]
    fn lowering_ladder_elements() {
        let dev = single_mode(4);
        let q = lowering_operator("q", &dev).unwrap();
        assert!((q[(0, 1)].re - 1.0).abs() < 1e-15);
        assert!((q[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((q[(2, 3)].re - 3f64.sqrt()).abs() < 1e-15);
        // q†q = diag(0, 1, 2, 3)
        let n = q.t().mapv(|v| v.conj()).dot(&q);
        for k in 0..4 {
            assert!((n[(k, k)].re - k as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn truncated_commutator_below_cutoff() {
        let dev = single_mode(4);
        let q = lowering_operator("q", &dev).unwrap();
        let qd = q.t().mapv(|v| v.conj());
        let comm = q.dot(&qd) - qd.dot(&q);
        // [q, q†] = 1 on the lowest 3 of 4 levels; truncation breaks it on
        // the top level only.
        for k in 0..3 {
            assert!((comm[(k, k)].re - 1.0).abs() < 1e-14);
        }
        assert!((comm[(3, 3)].re - (-3.0)).abs() < 1e-14);
    }

    #[test]
    fn unknown_mode_is_error() {
        let dev = single_mode(4);
        assert!(matches!(
            lowering_operator("nope", &dev),
            Err(CoreError::UnknownMode(_))
        ));
    }

    #[test]
    fn bare_hamiltonian_single_mode_ladder() {
        let dev = single_mode(4);
        let h = bare_hamiltonian(&dev).unwrap();
        let w = TAU * 5.0;
        let a = TAU * -0.2;
        let expect = [0.0, w, 2.0 * w + a, 3.0 * w + 3.0 * a];
        for (k, &e) in expect.iter().enumerate() {
            assert!((h[(k, k)].re - e).abs() < 1e-12, "level {k}");
        }
    }

    #[test]
    fn bare_hamiltonian_table_one_is_hermitian_dim_64() {
        let dev = table_one();
        let h = bare_hamiltonian(&dev).unwrap();
        assert_eq!(h.dim(), (64, 64));
        assert!(hermiticity_deviation(&h) < 1e-12);
    }

    #[test]
    fn drive_operator_examples() {
        let dev = single_mode(4);
        let x = drive_operator("q", &dev).unwrap();
        assert!((x[(0, 1)].re - 1.0).abs() < 1e-15);
        assert!((x[(1, 0)].re - 1.0).abs() < 1e-15);
        assert!((x[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((x[(2, 3)].re - 3f64.sqrt()).abs() < 1e-15);
        let trace: C64 = (0..4).map(|k| x[(k, k)]).sum();
        assert!(trace.norm() < 1e-15);
        let x2 = x.dot(&x);
        assert!((x2[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn embedded_operators_on_distinct_modes_commute() {
        let dev = table_one();
        let q1 = lowering_operator("q1", &dev).unwrap();
        let xc = drive_operator("qc", &dev).unwrap();
        let comm = q1.dot(&xc) - xc.dot(&q1);
        let max = comm.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max < 1e-15);
    }

    #[test]
    fn triplets_match_dense_drive_operator() {
        let dev = table_one();
        let x = drive_operator("qc", &dev).unwrap();
        let t = drive_triplets("qc", &dev).unwrap();
        let mut rebuilt = Operator::zeros(x.raw_dim());
        for &(i, j, v) in &t {
            rebuilt[(i, j)] += C64::new(v, 0.0);
        }
        let max = (&x - &rebuilt).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max < 1e-15);
    }
}

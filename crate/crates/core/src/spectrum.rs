//! Static eigenanalysis: dressed-state labeling, eigenenergies, ZZ coupling
//! strength, and ZZ landscape sweeps.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hilbert::{self, DeviceSpec, FockLabel, Operator};
use crate::units;
use crate::C64;

/// Ascending eigenvalues and the matching orthonormal eigenvector columns of
/// a Hermitian operator.
pub type Eigensystem = (Array1<f64>, Array2<C64>);

/// Hermitian diagonalization with ascending eigenvalues.
pub fn eigensystem(h: &Operator) -> Result<Eigensystem> {
    let dev = hilbert::hermiticity_deviation(h);
    if dev > 1e-9 {
        return Err(CoreError::NonHermitian { max_dev: dev });
    }
    let (vals, vecs) = h.eigh(UPLO::Lower)?;
    // The LAPACK call sees the row-major buffer as column-major, i.e. it
    // diagonalizes conj(H); conjugate back so columns satisfy H v = λ v.
    let vecs = vecs.mapv(|v| v.conj());
    Ok((vals, vecs))
}

/// One labeled eigenstate: the bare state it descends from, its energy, and
/// the identification quality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DressedLevel {
    pub bare: FockLabel,
    /// Eigenenergy in rad/ns.
    pub energy: f64,
    /// |⟨bare|dressed⟩|².
    pub overlap: f64,
    /// Column index in the eigenvector matrix.
    pub eigen_index: usize,
    /// Overlap above 0.5, i.e. the label is unambiguous in the dispersive
    /// sense.
    pub well_resolved: bool,
}

/// Injective assignment bare label → dressed level over the whole basis.
#[derive(Debug, Clone)]
pub struct DressedAssignment {
    /// Indexed by flat bare basis index.
    pub levels: Vec<DressedLevel>,
}

impl DressedAssignment {
    pub fn get(&self, device: &DeviceSpec, label: &FockLabel) -> Result<&DressedLevel> {
        let idx = device.fock_index(label)?;
        Ok(&self.levels[idx])
    }
}

/// Greedy unique assignment of columns to bare rows by descending weight
/// |V[i,k]|²; ties (within 1e-12) broken by ascending `order`, then by
/// indices for determinism. Shared with the Floquet-mode labeling.
pub(crate) fn greedy_assignment(weights: &Array2<f64>, order: &[f64]) -> Vec<(usize, f64)> {
    let d = weights.nrows();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(d * d);
    for bare in 0..d {
        for k in 0..d {
            pairs.push((bare, k, weights[(bare, k)]));
        }
    }
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| {
                if (a.2 - b.2).abs() < 1e-12 {
                    order[a.1].partial_cmp(&order[b.1]).unwrap()
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    let mut bare_used = vec![false; d];
    let mut col_used = vec![false; d];
    let mut slot: Vec<(usize, f64)> = vec![(usize::MAX, 0.0); d];
    let mut assigned = 0;
    for &(bare, k, w) in &pairs {
        if bare_used[bare] || col_used[k] {
            continue;
        }
        bare_used[bare] = true;
        col_used[k] = true;
        slot[bare] = (k, w);
        assigned += 1;
        if assigned == d {
            break;
        }
    }
    slot
}

/// Greedy unique assignment of eigenvectors to bare states by descending
/// overlap; ties broken by ascending eigenvalue.
pub fn dressed_label(device: &DeviceSpec, eig: &Eigensystem) -> Result<DressedAssignment> {
    let (vals, vecs) = eig;
    let d = device.dim();
    if vecs.dim() != (d, d) {
        return Err(CoreError::InvalidInput(format!(
            "eigensystem dimension {:?} does not match device dimension {d}",
            vecs.dim()
        )));
    }
    let weights = Array2::from_shape_fn((d, d), |(i, k)| vecs[(i, k)].norm_sqr());
    let slots = greedy_assignment(&weights, vals.as_slice().unwrap());
    let levels = slots
        .into_iter()
        .enumerate()
        .map(|(bare, (k, w))| {
            if k == usize::MAX {
                return Err(CoreError::LabelingFailure {
                    label: device.label_of_index(bare).to_string(),
                    detail: "all eigenvector candidates consumed".into(),
                });
            }
            Ok(DressedLevel {
                bare: device.label_of_index(bare),
                energy: vals[k],
                overlap: w,
                eigen_index: k,
                well_resolved: w > 0.5,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DressedAssignment { levels })
}

/// ZZ coupling strength between two qubit modes, from the four dressed
/// eigenenergies: ζ = (E₁₁ − E₀₁) − (E₁₀ − E₀₀).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZzReport {
    /// ζ as a linear frequency in kHz, sign preserved.
    pub zeta_khz: f64,
    /// Dressed energies (E₀₀, E₀₁, E₁₀, E₁₁) in rad/ns.
    pub energies: [f64; 4],
    /// Identification overlaps of the four states.
    pub overlaps: [f64; 4],
    /// All four labels resolved with overlap > 0.5.
    pub well_resolved: bool,
}

/// ζ between the first two modes of the device (all other modes in their
/// ground states).
pub fn zz_strength(device: &DeviceSpec) -> Result<ZzReport> {
    zz_strength_pair(device, 0, 1)
}

/// ζ between modes `a` and `b` by index, all other modes in |0⟩.
pub fn zz_strength_pair(device: &DeviceSpec, a: usize, b: usize) -> Result<ZzReport> {
    let h = hilbert::bare_hamiltonian(device)?;
    let eig = eigensystem(&h)?;
    let assignment = dressed_label(device, &eig)?;
    let n = device.n_modes();
    let label = |na: usize, nb: usize| {
        let mut occ = vec![0usize; n];
        occ[a] = na;
        occ[b] = nb;
        FockLabel::new(occ)
    };
    let mut energies = [0.0f64; 4];
    let mut overlaps = [0.0f64; 4];
    for (slot, (na, nb)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
        let lvl = assignment.get(device, &label(*na, *nb))?;
        energies[slot] = lvl.energy;
        overlaps[slot] = lvl.overlap;
    }
    let zeta = (energies[3] - energies[1]) - (energies[2] - energies[0]);
    Ok(ZzReport {
        zeta_khz: units::to_khz(zeta),
        energies,
        overlaps,
        well_resolved: overlaps.iter().all(|&w| w > 0.5),
    })
}

/// One cell of a ZZ landscape sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZzCell {
    pub omega1_ghz: f64,
    pub omega2_ghz: f64,
    /// Missing when the dressed labeling degrades (near resonances).
    pub zeta_khz: Option<f64>,
}

/// ZZ strength over a grid of the two qubit frequencies, row-major over
/// (ω₁, ω₂). Labeling failures are recorded as missing cells, not aborts.
pub fn zz_sweep(
    device: &DeviceSpec,
    omega1_range: (f64, f64),
    omega2_range: (f64, f64),
    grid: (usize, usize),
) -> Result<Vec<ZzCell>> {
    if grid.0 < 1 || grid.1 < 1 {
        return Err(CoreError::InvalidInput("empty sweep grid".into()));
    }
    let label1 = device.modes[0].label.clone();
    let label2 = device.modes[1].label.clone();
    let lin = |range: (f64, f64), n: usize, k: usize| {
        if n == 1 {
            range.0
        } else {
            range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
        }
    };
    let cells: Vec<(usize, usize)> = (0..grid.0)
        .flat_map(|i| (0..grid.1).map(move |j| (i, j)))
        .collect();
    // Cells are independent; par_iter keeps input order on collect.
    let results: Vec<ZzCell> = cells
        .par_iter()
        .map(|&(i, j)| {
            let w1 = lin(omega1_range, grid.0, i);
            let w2 = lin(omega2_range, grid.1, j);
            let zeta = device
                .with_frequency(&label1, w1)
                .and_then(|d| d.with_frequency(&label2, w2))
                .and_then(|d| zz_strength(&d))
                .ok()
                .filter(|r| r.well_resolved)
                .map(|r| r.zeta_khz);
            ZzCell {
                omega1_ghz: w1,
                omega2_ghz: w2,
                zeta_khz: zeta,
            }
        })
        .collect();
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{CouplingSpec, ModeSpec};

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

    fn table_two() -> DeviceSpec {
        DeviceSpec::new(
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
        .unwrap()
    }

    fn uncoupled() -> DeviceSpec {
        DeviceSpec::new(
            vec![
                ModeSpec::new("q1", 5.0, -0.2, 4),
                ModeSpec::new("q2", 5.9, -0.2, 4),
                ModeSpec::new("qc", 7.0, -0.4, 4),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn diagonal_eigensystem() {
        let mut h: Operator = Array2::zeros((3, 3));
        for (i, &e) in [0.3, -1.0, 2.0].iter().enumerate() {
            h[(i, i)] = C64::new(e, 0.0);
        }
        let (vals, vecs) = eigensystem(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 0.3).abs() < 1e-12);
        assert!((vals[2] - 2.0).abs() < 1e-12);
        for k in 0..3 {
            let col = vecs.column(k);
            let max = col.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_x_eigenvalues() {
        let mut h: Operator = Array2::zeros((2, 2));
        h[(0, 1)] = C64::new(1.0, 0.0);
        h[(1, 0)] = C64::new(1.0, 0.0);
        let (vals, _) = eigensystem(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        // Deterministic pseudo-random Hermitian 8x8; the spectral
        // decomposition must reconstruct it to 1e-9.
        let n = 8;
        let mut h: Operator = Array2::zeros((n, n));
        let mut seed = 0x243f_6a88u64;
        let mut next = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            h[(i, i)] = C64::new(next(), 0.0);
            for j in (i + 1)..n {
                let v = C64::new(next(), next());
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        let (vals, vecs) = eigensystem(&h).unwrap();
        // Columns must satisfy the eigenvector equation itself, not just
        // orthonormality.
        let hv = h.dot(&vecs);
        let mut eq_dev = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                eq_dev = eq_dev.max((hv[(i, k)] - vecs[(i, k)] * vals[k]).norm());
            }
        }
        assert!(eq_dev < 1e-9, "eigenvector equation residual {eq_dev}");
        let mut gram_dev = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += vecs[(k, a)].conj() * vecs[(k, b)];
                }
                if a == b {
                    acc -= 1.0;
                }
                gram_dev = gram_dev.max(acc.norm());
            }
        }
        assert!(gram_dev < 1e-9);
        let mut rec: Operator = Array2::zeros((n, n));
        for k in 0..n {
            let col = vecs.column(k);
            for i in 0..n {
                for j in 0..n {
                    rec[(i, j)] += col[i] * C64::new(vals[k], 0.0) * col[j].conj();
                }
            }
        }
        let max = (&h - &rec).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max < 1e-9, "reconstruction deviation {max}");
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h: Operator = Array2::zeros((2, 2));
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(eigensystem(&h), Err(CoreError::NonHermitian { .. })));
    }

    #[test]
    fn zero_coupling_identity_assignment() {
        let dev = uncoupled();
        let h = hilbert::bare_hamiltonian(&dev).unwrap();
        let eig = eigensystem(&h).unwrap();
        let assign = dressed_label(&dev, &eig).unwrap();
        for lvl in &assign.levels {
            assert!((lvl.overlap - 1.0).abs() < 1e-12);
        }
        let zz = zz_strength(&dev).unwrap();
        assert!(zz.zeta_khz.abs() < 1e-9);
    }

    #[test]
    fn table_devices_dressed_labels_resolved() {
        for dev in [table_one(), table_two()] {
            let h = hilbert::bare_hamiltonian(&dev).unwrap();
            let eig = eigensystem(&h).unwrap();
            let assign = dressed_label(&dev, &eig).unwrap();
            for occ in [[1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 0]] {
                let lvl = assign.get(&dev, &FockLabel::new(occ)).unwrap();
                assert!(lvl.overlap > 0.9, "{occ:?}: overlap {}", lvl.overlap);
            }
        }
    }

    #[test]
    fn zz_anchor_table_one() {
        let zz = zz_strength(&table_one()).unwrap();
        let target = -273.0;
        assert!(
            (zz.zeta_khz - target).abs() <= 0.15 * target.abs(),
            "zeta = {} kHz, anchor {target} kHz",
            zz.zeta_khz
        );
    }

    #[test]
    fn zz_anchor_table_two() {
        let zz = zz_strength(&table_two()).unwrap();
        let target = -36.0;
        assert!(
            (zz.zeta_khz - target).abs() <= 0.15 * target.abs(),
            "zeta = {} kHz, anchor {target} kHz",
            zz.zeta_khz
        );
    }

    #[test]
    fn zz_truncation_convergence() {
        for dev in [table_one(), table_two()] {
            let z4 = zz_strength(&dev).unwrap().zeta_khz;
            let z5 = zz_strength(&dev.with_levels(5).unwrap()).unwrap().zeta_khz;
            assert!(
                ((z4 - z5) / z5).abs() < 0.05,
                "4 levels: {z4} kHz, 5 levels: {z5} kHz"
            );
        }
    }

    #[test]
    fn zz_symmetric_under_qubit_swap() {
        let dev = table_one();
        let swapped = DeviceSpec::new(
            vec![
                dev.modes[1].clone(),
                dev.modes[0].clone(),
                dev.modes[2].clone(),
            ],
            dev.couplings.clone(),
        )
        .unwrap();
        let z = zz_strength(&dev).unwrap().zeta_khz;
        let zs = zz_strength(&swapped).unwrap().zeta_khz;
        assert!((z - zs).abs() < 1e-6 * z.abs().max(1.0));
    }

    #[test]
    fn sweep_contains_consistent_center_cell() {
        let dev = table_one();
        let cells = zz_sweep(&dev, (4.9, 5.1), (5.8, 6.0), (3, 3)).unwrap();
        assert_eq!(cells.len(), 9);
        let center = cells
            .iter()
            .find(|c| (c.omega1_ghz - 5.0).abs() < 1e-12 && (c.omega2_ghz - 5.9).abs() < 1e-12)
            .expect("center cell");
        let direct = zz_strength(&dev).unwrap().zeta_khz;
        assert!((center.zeta_khz.unwrap() - direct).abs() < 1e-9);
    }
}

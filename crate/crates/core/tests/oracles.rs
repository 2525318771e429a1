//! Cross-route oracles: every check here compares the production propagator
//! against an independent computation (spectral exponential, basis-state
//! consistency, tolerance refinement).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use pulsegate_core::dynamics::{
    propagate_basis_state, propagate_state, propagate_unitary, unitarity_deviation,
    PropagationSettings,
};
use pulsegate_core::hilbert::{bare_hamiltonian, CouplingSpec, DeviceSpec, FockLabel, ModeSpec};
use pulsegate_core::pulse::{DriveSchedule, DriveSpec, Envelope};
use pulsegate_core::spectrum::eigensystem;

fn toy_device() -> DeviceSpec {
    DeviceSpec::new(
        vec![
            ModeSpec::new("q1", 4.0, -0.2, 3),
            ModeSpec::new("q2", 4.7, -0.2, 3),
            ModeSpec::new("qc", 6.0, -0.4, 3),
        ],
        vec![
            CouplingSpec::new("q1", "qc", 0.1),
            CouplingSpec::new("q2", "qc", 0.1),
        ],
    )
    .unwrap()
}

fn toy_schedule(duration: f64) -> DriveSchedule {
    DriveSchedule::new(vec![
        DriveSpec::new("qc", 7.575, 0.0, Envelope::constant(0.1, duration)).unwrap(),
        DriveSpec::new("qc", 6.875, 0.0, Envelope::constant(0.1, duration)).unwrap(),
    ])
}

/// Zero drive: the propagator must equal the spectral matrix exponential
/// exp(−i H_s t) computed through an independent eigendecomposition.
#[test]
fn undriven_propagator_matches_spectral_exponential() {
    let dev = toy_device();
    let t = 17.3;
    let sched = DriveSchedule::new(vec![DriveSpec::new(
        "qc",
        7.0,
        0.0,
        Envelope::constant(0.0, t),
    )
    .unwrap()]);
    let settings = PropagationSettings {
        rtol: 1e-12,
        atol: 1e-14,
        ..Default::default()
    };
    let u = propagate_unitary(&dev, &sched, &settings).unwrap();

    let h = bare_hamiltonian(&dev).unwrap();
    let (vals, vecs) = eigensystem(&h).unwrap();
    let d = dev.dim();
    let mut u_ref: Array2<C64> = Array2::zeros((d, d));
    for k in 0..d {
        let phase = C64::new(0.0, -vals[k] * t).exp();
        let col = vecs.column(k);
        for i in 0..d {
            for j in 0..d {
                u_ref[(i, j)] += col[i] * phase * col[j].conj();
            }
        }
    }
    let max = (&u - &u_ref).iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(max < 1e-8, "max deviation from spectral exponential {max:.3e}");
}

#[test]
fn driven_propagator_is_unitary() {
    let dev = toy_device();
    let sched = toy_schedule(40.0);
    let settings = PropagationSettings {
        rtol: 1e-10,
        atol: 1e-12,
        ..Default::default()
    };
    let u = propagate_unitary(&dev, &sched, &settings).unwrap();
    assert!(unitarity_deviation(&u.view()) < 1e-6);
}

/// Columns of the full propagator must equal independent single-state
/// propagations from the corresponding basis states.
#[test]
fn propagator_columns_match_state_runs() {
    let dev = toy_device();
    let duration = 35.0;
    let sched = toy_schedule(duration);
    let settings = PropagationSettings {
        rtol: 1e-11,
        atol: 1e-13,
        ..Default::default()
    };
    let u = propagate_unitary(&dev, &sched, &settings).unwrap();
    let per_state = PropagationSettings {
        rtol: 1e-11,
        atol: 1e-13,
        ..Default::default()
    }
    .with_grid(vec![duration]);
    for idx in [0usize, 1, 4, 9, 13, 26] {
        let label = dev.label_of_index(idx);
        let traj = propagate_basis_state(&dev, &sched, &label, &per_state).unwrap();
        let fin = traj.final_state().unwrap();
        let max = (0..dev.dim())
            .map(|i| (u[(i, idx)] - fin[i]).norm())
            .fold(0.0, f64::max);
        assert!(max < 1e-8, "column {idx}: deviation {max:.3e}");
    }
}

/// Halving the tolerances must leave end-state populations unchanged at the
/// 1e-7 level (convergence of the adaptive integration).
#[test]
fn tolerance_refinement_converges() {
    let dev = toy_device();
    let duration = 60.0;
    let env = Envelope::half_gamma_ramp(0.1, 30.0, duration).unwrap();
    let sched = DriveSchedule::new(vec![
        DriveSpec::new("qc", 7.575, 0.0, env.clone()).unwrap(),
        DriveSpec::new("qc", 6.875, 0.0, env).unwrap(),
    ]);
    let run = |rtol: f64, atol: f64| -> Vec<f64> {
        let settings = PropagationSettings {
            rtol,
            atol,
            ..Default::default()
        }
        .with_grid(vec![duration]);
        let traj =
            propagate_basis_state(&dev, &sched, &FockLabel::new([1, 0, 0]), &settings).unwrap();
        let fin = traj.final_state().unwrap();
        fin.iter().map(|v| v.norm_sqr()).collect()
    };
    let coarse = run(1e-10, 1e-12);
    let fine = run(5e-11, 5e-13);
    let max: f64 = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max < 1e-7, "population change under tolerance halving {max:.3e}");
}

/// Norm preservation along a strongly driven trajectory.
#[test]
fn norm_preserved_on_dense_grid() {
    let dev = toy_device();
    let duration = 50.0;
    let sched = toy_schedule(duration);
    let settings = PropagationSettings::default().uniform_grid(duration, 100);
    let mut psi0: Array1<C64> = Array1::zeros(dev.dim());
    psi0[dev.fock_index(&FockLabel::new([1, 0, 0])).unwrap()] = C64::new(1.0, 0.0);
    let traj = propagate_state(&dev, &sched, &psi0, &settings).unwrap();
    if let pulsegate_core::dynamics::TrajectoryData::Pure(states) = &traj.data {
        for s in states {
            let n: f64 = s.iter().map(|v| v.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-8);
        }
    }
}

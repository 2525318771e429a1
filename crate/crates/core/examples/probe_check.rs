use ndarray::{Array1, Array2};
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::hilbert::{bare_hamiltonian, drive_operator, FockLabel};
use pulsegate_core::pulse::{drive_hamiltonian, DriveSchedule, DriveSpec, Envelope};
use pulsegate_core::spectrum::{dressed_label, eigensystem};
use pulsegate_core::units;
use pulsegate_core::C64;

// Naive dense lab-frame RK4 with tiny fixed steps, fully independent of the
// production propagator path (uses the dense drive_hamiltonian).
fn rk4_reference(
    dev: &pulsegate_core::DeviceSpec,
    sched: &DriveSchedule,
    psi0: &Array1<C64>,
    t_end: f64,
    dt: f64,
) -> Array1<C64> {
    let h0 = bare_hamiltonian(dev).unwrap();
    let rhs = |t: f64, y: &Array1<C64>| -> Array1<C64> {
        let h = &h0 + &drive_hamiltonian(sched, dev, t).unwrap();
        let hy = h.dot(y);
        hy.mapv(|v| C64::new(v.im, -v.re))
    };
    let n = (t_end / dt).round() as usize;
    let dt = t_end / n as f64;
    let mut y = psi0.clone();
    let mut t = 0.0;
    for _ in 0..n {
        let k1 = rhs(t, &y);
        let k2 = rhs(t + dt / 2.0, &(&y + &(&k1 * C64::new(dt / 2.0, 0.0))));
        let k3 = rhs(t + dt / 2.0, &(&y + &(&k2 * C64::new(dt / 2.0, 0.0))));
        let k4 = rhs(t + dt, &(&y + &(&k3 * C64::new(dt, 0.0))));
        y = &y + &((k1 + k2 * 2.0 + k3 * 2.0 + k4) * C64::new(dt / 6.0, 0.0));
        t += dt;
    }
    y
}

fn main() {
    // Small two-mode system, two tones, moderate time: reference vs fast path.
    let dev = pulsegate_core::DeviceSpec::new(
        vec![
            pulsegate_core::ModeSpec::new("a", 5.0, -0.2, 3),
            pulsegate_core::ModeSpec::new("c", 7.0, -0.4, 3),
        ],
        vec![pulsegate_core::CouplingSpec::new("a", "c", 0.19)],
    )
    .unwrap();
    let sched = DriveSchedule::new(vec![
        DriveSpec::new("c", 8.654, 0.0, Envelope::constant(0.16, 30.0)).unwrap(),
        DriveSpec::new("c", 7.744, 0.0, Envelope::constant(0.16, 30.0)).unwrap(),
    ]);
    let mut psi0 = Array1::<C64>::zeros(dev.dim());
    psi0[dev.fock_index(&FockLabel::new([1, 0])).unwrap()] = C64::new(1.0, 0.0);
    let reference = rk4_reference(&dev, &sched, &psi0, 30.0, 2e-5);
    let mut cols = Array2::<C64>::zeros((dev.dim(), 1));
    for i in 0..dev.dim() {
        cols[(i, 0)] = psi0[i];
    }
    let settings = PropagationSettings {
        rtol: 1e-12,
        atol: 1e-14,
        max_step: 0.25,
        output_grid: vec![30.0],
    };
    let (states, _) = propagate_columns(&dev, &sched, &cols, &settings).unwrap();
    let fast = states.last().unwrap().column(0).to_owned();
    let maxdev = reference
        .iter()
        .zip(fast.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("differential test max |psi_ref - psi_fast| = {maxdev:.3e}");

    // Dressed gaps of the |110> leakage sector for ABA.
    let sc = Scenario::aba();
    let h = bare_hamiltonian(&sc.device).unwrap();
    let eig = eigensystem(&h).unwrap();
    let assign = dressed_label(&sc.device, &eig).unwrap();
    let e = |occ: [usize; 3]| assign.get(&sc.device, &FockLabel::new(occ)).unwrap().energy;
    let gap = |a: [usize; 3], b: [usize; 3]| units::to_ghz(e(a) - e(b));
    println!("\nABA dressed transition energies (GHz):");
    println!("  E(002)-E(100) = {:.6}  (tone1 = {}, protection {:+.1} MHz)", gap([0,0,2],[1,0,0]), sc.drive1, (gap([0,0,2],[1,0,0]) - sc.drive1)*1e3);
    println!("  E(002)-E(010) = {:.6}  (tone2 = {}, protection {:+.1} MHz)", gap([0,0,2],[0,1,0]), sc.drive2, (gap([0,0,2],[0,1,0]) - sc.drive2)*1e3);
    println!("  E(012)-E(110) = {:.6}  (vs tone1: {:+.1} MHz)", gap([0,1,2],[1,1,0]), (gap([0,1,2],[1,1,0]) - sc.drive1)*1e3);
    println!("  E(102)-E(110) = {:.6}  (vs tone2: {:+.1} MHz)", gap([1,0,2],[1,1,0]), (gap([1,0,2],[1,1,0]) - sc.drive2)*1e3);
    println!("  E(021)-E(110) = {:.6}  (vs tone2: {:+.1} MHz)", gap([0,2,1],[1,1,0]), (gap([0,2,1],[1,1,0]) - sc.drive2)*1e3);
    println!("  E(201)-E(110) = {:.6}  (vs tone1: {:+.1} MHz)", gap([2,0,1],[1,1,0]), (gap([2,0,1],[1,1,0]) - sc.drive1)*1e3);
}

use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn eval(sc: &Scenario, d1: f64, d2: f64, gamma: f64, tp: f64) -> (f64, f64, f64, f64) {
    let mut sc = sc.clone();
    sc.drive1 = d1;
    let dev = sc.device.clone();
    let sched = sc.schedule_with(d2, gamma, tp).unwrap();
    let labels = gate::computational_labels(&dev, sc.pair);
    let mut cols = Array2::<C64>::zeros((dev.dim(), 4));
    for (c, l) in labels.iter().enumerate() {
        cols[(dev.fock_index(l).unwrap(), c)] = C64::new(1.0, 0.0);
    }
    let settings = PropagationSettings {
        rtol: 1e-6,
        atol: 1e-8,
        max_step: 0.25,
        output_grid: vec![tp],
    };
    let (mut states, _) = propagate_columns(&dev, &sched, &cols, &settings).unwrap();
    let fin = states.pop().unwrap();
    let proj = gate::project_columns(&fin, &dev, sc.pair).unwrap();
    let fc = gate::compensate_phases(&proj.matrix, true);
    let f1 = gate::compensate_phases(&proj.matrix, false);
    (fc.fidelity, fc.phi, f1.fidelity, proj.column_deficits[3])
}

fn main() {
    let sc = Scenario::aba();
    println!("all-ramp bump family (gamma = tp):");
    for &tp in &[380.0, 420.0, 440.0, 460.0, 480.0] {
        for &d2 in &[7.7435, 7.7450, 7.7465] {
            let (fc, phi, f1, leak11) = eval(&sc, 8.654, d2, tp, tp);
            println!(
                "  d2={d2:.4} tp={tp:.0}: Fcond={fc:.5} F1q={f1:.4} phi={phi:+.3} leak11={leak11:.2e}"
            );
        }
    }
}

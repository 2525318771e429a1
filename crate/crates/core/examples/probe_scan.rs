use ndarray::Array2;
use pulsegate_core::calibrate::{scan_drive_frequency, Scenario};
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn gate_row(sc: &Scenario, drive2: f64, settings: &PropagationSettings) -> (f64, f64, f64, f64, f64) {
    let dev = &sc.device;
    let sched = sc.schedule_with(drive2, sc.gamma, sc.duration).unwrap();
    let labels = gate::computational_labels(dev, sc.pair);
    let mut cols = Array2::<C64>::zeros((dev.dim(), 4));
    for (c, l) in labels.iter().enumerate() {
        cols[(dev.fock_index(l).unwrap(), c)] = C64::new(1.0, 0.0);
    }
    let local = PropagationSettings { output_grid: vec![sc.duration], ..settings.clone() };
    let (mut states, _) = propagate_columns(dev, &sched, &cols, &local).unwrap();
    let fin = states.pop().unwrap();
    let proj = gate::project_columns(&fin, dev, sc.pair).unwrap();
    let f1 = gate::compensate_phases(&proj.matrix, false);
    let fc = gate::compensate_phases(&proj.matrix, true);
    // swap magnitude |U[01,10]|^2
    let swap = proj.matrix[(1, 2)].norm_sqr();
    (f1.fidelity, fc.fidelity, fc.phi, swap, proj.column_deficits[3])
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "aba".into());
    let sc = Scenario::by_name(&which).unwrap();
    let settings = PropagationSettings { rtol: 1e-9, atol: 1e-11, ..Default::default() };
    // scan (max transfer objective)
    match scan_drive_frequency(&sc, sc.drive2, 0.010, 21, &PropagationSettings { rtol: 1e-8, atol: 1e-10, ..Default::default() }) {
        Ok(scan) => {
            println!("max-transfer scan optimum: {:.6} GHz (nominal {:.6})", scan.optimum, sc.drive2);
            for (f, o) in scan.scanned.iter().zip(&scan.objective) {
                println!("  {:.4} GHz -> max transfer {:.4}", f, o);
            }
        }
        Err(e) => println!("scan failed: {e}"),
    }
    println!("\ngate quality vs drive2 at (gamma={}, tp={}):", sc.gamma, sc.duration);
    for k in -6..=6i32 {
        let f2 = sc.drive2 + 0.001 * k as f64;
        let (f1, fc, phi, swap, d11) = gate_row(&sc, f2, &settings);
        println!(
            "  drive2 {:.4}: F1q={:.4} Fcond={:.5} phi={:+.3} |U01,10|^2={:.4} leak11={:.2e}",
            f2, f1, fc, phi, swap, d11
        );
    }
}

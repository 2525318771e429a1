use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn gate_row(sc: &Scenario, d1: f64, d2: f64, settings: &PropagationSettings) -> (f64, f64, f64) {
    let mut sc = sc.clone();
    sc.drive1 = d1;
    let dev = &sc.device;
    let sched = sc.schedule_with(d2, sc.gamma, sc.duration).unwrap();
    let labels = gate::computational_labels(dev, sc.pair);
    let mut cols = Array2::<C64>::zeros((dev.dim(), 4));
    for (c, l) in labels.iter().enumerate() {
        cols[(dev.fock_index(l).unwrap(), c)] = C64::new(1.0, 0.0);
    }
    let local = PropagationSettings { output_grid: vec![sc.duration], ..settings.clone() };
    let (mut states, _) = propagate_columns(dev, &sched, &cols, &local).unwrap();
    let fin = states.pop().unwrap();
    let proj = gate::project_columns(&fin, dev, sc.pair).unwrap();
    let fc = gate::compensate_phases(&proj.matrix, true);
    let leak: f64 = proj.column_deficits.iter().sum::<f64>() / 4.0;
    (fc.fidelity, fc.phi, leak)
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "aba".into());
    let sc = Scenario::by_name(&which).unwrap();
    let settings = PropagationSettings { rtol: 1e-7, atol: 1e-9, ..Default::default() };
    let d1_offsets: Vec<f64> = (-3..=3).map(|k| k as f64 * 0.002).collect();
    let d2_offsets: Vec<f64> = (-4..=8).map(|k| k as f64 * 0.0005).collect();
    println!("rows: drive1 offsets (MHz); cols: drive2 offsets (MHz); cell: Fcond");
    print!("{:>8}", "");
    for o2 in &d2_offsets {
        print!("{:>8.2}", o2 * 1e3);
    }
    println!();
    let mut best = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for o1 in &d1_offsets {
        print!("{:>8.2}", o1 * 1e3);
        for o2 in &d2_offsets {
            let (f, phi, leak) = gate_row(&sc, sc.drive1 + o1, sc.drive2 + o2, &settings);
            print!("{:>8.4}", f);
            if f > best.0 {
                best = (f, sc.drive1 + o1, sc.drive2 + o2, phi, leak);
            }
        }
        println!();
    }
    println!(
        "best: F={:.5} at d1={:.4} d2={:.4} phi={:+.3} leak_avg={:.2e}",
        best.0, best.1, best.2, best.3, best.4
    );
}

use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn leak11(sc: &Scenario, d1: f64, d2: f64, gamma: f64, tp: f64) -> f64 {
    let mut sc = sc.clone();
    sc.drive1 = d1;
    let dev = sc.device.clone();
    let sched = sc.schedule_with(d2, gamma, tp).unwrap();
    let labels = gate::computational_labels(&dev, sc.pair);
    let mut cols = Array2::<C64>::zeros((dev.dim(), 1));
    cols[(dev.fock_index(&labels[3]).unwrap(), 0)] = C64::new(1.0, 0.0);
    let settings = PropagationSettings {
        rtol: 1e-6,
        atol: 1e-8,
        max_step: 0.25,
        output_grid: vec![tp],
    };
    let (mut states, _) = propagate_columns(&dev, &sched, &cols, &settings).unwrap();
    let fin = states.pop().unwrap();
    let col = fin.column(0).to_owned();
    gate::leakage_of_column(&col, &dev, sc.pair).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let d1: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(8.654);
    let gamma: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(196.0);
    let sc = Scenario::aba();
    println!("leak11 * 1e3; rows d2, cols tp (d1={d1}, gamma={gamma})");
    print!("{:>9}", "");
    let tps: Vec<f64> = (0..16).map(|k| 320.0 + 6.0 * k as f64).collect();
    for tp in &tps {
        print!("{:>7.0}", tp);
    }
    println!();
    let mut best = (1.0f64, 0.0, 0.0);
    for i in 0..15 {
        let d2 = 7.7435 + 0.0005 * i as f64;
        print!("{:>9.4}", d2);
        for &tp in &tps {
            let l = leak11(&sc, d1, d2, gamma, tp);
            print!("{:>7.1}", l * 1e3);
            if l < best.0 {
                best = (l, d2, tp);
            }
        }
        println!();
    }
    println!("min leak11 = {:.2e} at d2={:.4} tp={:.0}", best.0, best.1, best.2);
}

use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn eval(sc: &Scenario, d2: f64, gamma: f64, tp: f64, rtol: f64) -> (f64, f64) {
    let dev = &sc.device;
    let sched = sc.schedule_with(d2, gamma, tp).unwrap();
    let labels = gate::computational_labels(dev, sc.pair);
    let mut cols = Array2::<C64>::zeros((dev.dim(), 4));
    for (c, l) in labels.iter().enumerate() {
        cols[(dev.fock_index(l).unwrap(), c)] = C64::new(1.0, 0.0);
    }
    let settings = PropagationSettings {
        rtol,
        atol: rtol * 0.01,
        max_step: 0.25,
        output_grid: vec![tp],
    };
    let (mut states, _) = propagate_columns(dev, &sched, &cols, &settings).unwrap();
    let fin = states.pop().unwrap();
    let proj = gate::project_columns(&fin, dev, sc.pair).unwrap();
    let fc = gate::compensate_phases(&proj.matrix, true);
    (fc.fidelity, fc.phi)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).cloned().unwrap_or_else(|| "aba".into());
    let d2_list: Vec<f64> = args[2..].iter().map(|s| s.parse().unwrap()).collect();
    let sc = Scenario::by_name(&which).unwrap();
    let gammas: Vec<f64> = (0..5).map(|k| 180.0 + 8.0 * k as f64).collect();
    let tps: Vec<f64> = (0..9).map(|k| 326.0 + 5.0 * k as f64).collect();
    for &d2 in &d2_list {
        println!("--- drive2 = {d2} ---");
        print!("{:>7}", "g\\tp");
        for tp in &tps {
            print!("{:>8.0}", tp);
        }
        println!();
        let mut best = (0.0f64, 0.0, 0.0, 0.0);
        for &g in &gammas {
            print!("{:>7.0}", g);
            for &tp in &tps {
                let (f, phi) = eval(&sc, d2, g, tp, 1e-6);
                print!("{:>8.4}", f);
                if f > best.0 {
                    best = (f, g, tp, phi);
                }
            }
            println!();
        }
        println!("best: F={:.5} at gamma={} tp={} phi={:+.3}\n", best.0, best.1, best.2, best.3);
    }
}

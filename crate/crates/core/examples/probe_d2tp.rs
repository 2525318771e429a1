use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn eval(sc: &Scenario, d1: f64, d2: f64, gamma: f64, tp: f64, rtol: f64) -> (f64, f64) {
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
        rtol,
        atol: rtol * 0.01,
        max_step: 0.25,
        output_grid: vec![tp],
    };
    let (mut states, _) = propagate_columns(&dev, &sched, &cols, &settings).unwrap();
    let fin = states.pop().unwrap();
    let proj = gate::project_columns(&fin, &dev, sc.pair).unwrap();
    let fc = gate::compensate_phases(&proj.matrix, true);
    (fc.fidelity, fc.phi)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).cloned().unwrap_or_else(|| "aba".into());
    let d1: f64 = args[2].parse().unwrap();
    let gamma: f64 = args[3].parse().unwrap();
    let d2_lo: f64 = args[4].parse().unwrap();
    let d2_hi: f64 = args[5].parse().unwrap();
    let n2: usize = args[6].parse().unwrap();
    let tp_lo: f64 = args[7].parse().unwrap();
    let tp_hi: f64 = args[8].parse().unwrap();
    let ntp: usize = args[9].parse().unwrap();
    let sc = Scenario::by_name(&which).unwrap();
    let mut best = (0.0f64, 0.0, 0.0, 0.0);
    println!("rows d2 (GHz), cols tp (ns); cells 1000*(1-F)");
    print!("{:>9}", "");
    for k in 0..ntp {
        let tp = tp_lo + (tp_hi - tp_lo) * k as f64 / (ntp - 1) as f64;
        print!("{:>7.1}", tp);
    }
    println!();
    for i in 0..n2 {
        let d2 = d2_lo + (d2_hi - d2_lo) * i as f64 / (n2 - 1) as f64;
        print!("{:>9.4}", d2);
        for k in 0..ntp {
            let tp = tp_lo + (tp_hi - tp_lo) * k as f64 / (ntp - 1) as f64;
            let (f, phi) = eval(&sc, d1, d2, gamma, tp, 1e-6);
            print!("{:>7.1}", (1.0 - f) * 1e3);
            if f > best.0 {
                best = (f, d2, tp, phi);
            }
        }
        println!();
    }
    println!("best F={:.5} at d2={:.4} tp={:.1} phi={:+.3}", best.0, best.1, best.2, best.3);
}

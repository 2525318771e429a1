use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::hilbert::{bare_hamiltonian, FockLabel};
use pulsegate_core::spectrum::{dressed_label, eigensystem};
use pulsegate_core::units;
use pulsegate_core::C64;
use std::time::Instant;

fn main() {
    let sc = Scenario::aba();
    let dev = &sc.device;
    let h = bare_hamiltonian(dev).unwrap();
    let eig = eigensystem(&h).unwrap();
    let assign = dressed_label(dev, &eig).unwrap();
    let e = |occ: [usize; 3]| assign.get(dev, &FockLabel::new(occ)).unwrap().energy;
    let e100 = e([1, 0, 0]);
    let e010 = e([0, 1, 0]);
    let e002 = e([0, 0, 2]);
    let e000 = e([0, 0, 0]);
    println!("dressed E(100)-E(000) GHz: {:.6}", units::to_ghz(e100 - e000));
    println!("dressed E(010)-E(000) GHz: {:.6}", units::to_ghz(e010 - e000));
    println!("dressed E(002)-E(000) GHz: {:.6}", units::to_ghz(e002 - e000));
    let w1d = units::to_ghz(e002 - e100) + sc.delta;
    let w2d = units::to_ghz(e002 - e010) + sc.delta;
    println!("dressed-resonance w1d + delta: {:.6} GHz (paper 8.654)", w1d);
    println!("dressed-resonance w2d + delta: {:.6} GHz (paper 7.744)", w2d);

    // One-column propagation with stats at default tolerances.
    let t0 = Instant::now();
    let sched = sc.schedule().unwrap();
    let mut cols = Array2::<C64>::zeros((dev.dim(), 1));
    cols[(dev.fock_index(&FockLabel::new([1, 0, 0])).unwrap(), 0)] = C64::new(1.0, 0.0);
    let settings = PropagationSettings::default().with_grid(vec![sc.duration]);
    let (states, stats) = propagate_columns(dev, &sched, &cols, &settings).unwrap();
    println!("stats: {:?}  wall {:.1} s", stats, t0.elapsed().as_secs_f64());
    let fin = states.last().unwrap().column(0).to_owned();
    let mut pops: Vec<(f64, String)> = (0..dev.dim())
        .map(|i| (fin[i].norm_sqr(), dev.label_of_index(i).to_string()))
        .collect();
    pops.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("final populations from |100>:");
    for (p, l) in pops.iter().take(6) {
        println!("  {l}: {p:.5}");
    }
}

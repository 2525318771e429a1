use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn eval(sc: &Scenario, d1: f64, d2: f64, tp: f64, rtol: f64) -> (f64, f64, f64, f64) {
    let mut sc = sc.clone();
    sc.drive1 = d1;
    let dev = sc.device.clone();
    let sched = sc.schedule_with(d2, sc.gamma, tp).unwrap();
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
    let f1 = gate::compensate_phases(&proj.matrix, false);
    let fc = gate::compensate_phases(&proj.matrix, true);
    (fc.fidelity, fc.phi, f1.fidelity, proj.column_deficits[3])
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).cloned().unwrap_or_else(|| "aba".into());
    let sc = Scenario::by_name(&which).unwrap();
    let x0: Vec<f64> = if args.len() >= 5 {
        vec![args[2].parse().unwrap(), args[3].parse().unwrap(), args[4].parse().unwrap()]
    } else {
        vec![sc.drive1, sc.drive2, sc.duration]
    };
    // Nelder-Mead on (d1 GHz, d2 GHz, tp ns), scaled steps.
    let scale = [0.0015, 0.0008, 6.0];
    let f = |x: &[f64]| -> f64 {
        let (fc, _, _, _) = eval(&sc, x[0], x[1], x[2], 1e-7);
        1.0 - fc
    };
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::new();
    simplex.push((f(&x0), x0.clone()));
    for i in 0..3 {
        let mut x = x0.clone();
        x[i] += scale[i];
        simplex.push((f(&x), x));
    }
    for it in 0..120 {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let best = simplex[0].0;
        let worst = simplex[3].0;
        if it % 10 == 0 {
            println!(
                "it {it:3}: best 1-F = {best:.2e} at d1={:.5} d2={:.5} tp={:.2}",
                simplex[0].1[0], simplex[0].1[1], simplex[0].1[2]
            );
        }
        if worst - best < 1e-6 && best < 5e-4 {
            break;
        }
        // centroid of best 3
        let mut c = vec![0.0; 3];
        for s in &simplex[..3] {
            for k in 0..3 {
                c[k] += s.1[k] / 3.0;
            }
        }
        let xr: Vec<f64> = (0..3).map(|k| c[k] + (c[k] - simplex[3].1[k])).collect();
        let fr = f(&xr);
        if fr < simplex[0].0 {
            let xe: Vec<f64> = (0..3).map(|k| c[k] + 2.0 * (c[k] - simplex[3].1[k])).collect();
            let fe = f(&xe);
            simplex[3] = if fe < fr { (fe, xe) } else { (fr, xr) };
        } else if fr < simplex[2].0 {
            simplex[3] = (fr, xr);
        } else {
            let xc: Vec<f64> = (0..3).map(|k| c[k] + 0.5 * (simplex[3].1[k] - c[k])).collect();
            let fcv = f(&xc);
            if fcv < simplex[3].0 {
                simplex[3] = (fcv, xc);
            } else {
                let x0b = simplex[0].1.clone();
                for s in simplex.iter_mut().skip(1) {
                    let xs: Vec<f64> = (0..3).map(|k| 0.5 * (s.1[k] + x0b[k])).collect();
                    *s = (f(&xs), xs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let xb = simplex[0].1.clone();
    println!("\npolish at rtol 1e-9:");
    let (fc, phi, f1, leak11) = eval(&sc, xb[0], xb[1], xb[2], 1e-9);
    println!(
        "final: d1={:.5} d2={:.5} tp={:.2} -> Fcond={:.6} F1q={:.5} phi={:+.4} leak11={:.2e}",
        xb[0], xb[1], xb[2], fc, f1, phi, leak11
    );
}

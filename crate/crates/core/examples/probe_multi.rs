use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::gate;
use pulsegate_core::C64;

fn eval(sc: &Scenario, x: &[f64], rtol: f64) -> (f64, f64, f64, [f64; 4]) {
    let (d1, d2, gamma, tp) = (x[0], x[1], x[2], x[3]);
    if gamma <= 0.0 || tp <= gamma || tp > 500.0 {
        return (0.0, 0.0, 0.0, [1.0; 4]);
    }
    let mut sc = sc.clone();
    sc.drive1 = d1;
    let dev = sc.device.clone();
    let sched = match sc.schedule_with(d2, gamma, tp) {
        Ok(s) => s,
        Err(_) => return (0.0, 0.0, 0.0, [1.0; 4]),
    };
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
    (fc.fidelity, fc.phi, f1.fidelity, proj.column_deficits)
}

fn nelder_mead(sc: &Scenario, x0: Vec<f64>, scale: [f64; 4], iters: usize, rtol: f64) -> (f64, Vec<f64>) {
    let f = |x: &[f64]| -> f64 {
        let (fc, _, _, _) = eval(sc, x, rtol);
        1.0 - fc
    };
    let n = 4;
    let mut simplex: Vec<(f64, Vec<f64>)> = vec![(f(&x0), x0.clone())];
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += scale[i];
        simplex.push((f(&x), x));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if simplex[n].0 - simplex[0].0 < 1e-7 {
            break;
        }
        let mut c = vec![0.0; n];
        for s in &simplex[..n] {
            for k in 0..n {
                c[k] += s.1[k] / n as f64;
            }
        }
        let xr: Vec<f64> = (0..n).map(|k| c[k] + (c[k] - simplex[n].1[k])).collect();
        let fr = f(&xr);
        if fr < simplex[0].0 {
            let xe: Vec<f64> = (0..n).map(|k| c[k] + 2.0 * (c[k] - simplex[n].1[k])).collect();
            let fe = f(&xe);
            simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
        } else if fr < simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            let xc: Vec<f64> = (0..n).map(|k| c[k] + 0.5 * (simplex[n].1[k] - c[k])).collect();
            let fcv = f(&xc);
            if fcv < simplex[n].0 {
                simplex[n] = (fcv, xc);
            } else {
                let x0b = simplex[0].1.clone();
                for s in simplex.iter_mut().skip(1) {
                    let xs: Vec<f64> = (0..n).map(|k| 0.5 * (s.1[k] + x0b[k])).collect();
                    *s = (f(&xs), xs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (simplex[0].0, simplex[0].1.clone())
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).cloned().unwrap_or_else(|| "aba".into());
    let sc = Scenario::by_name(&which).unwrap();
    let (d1_0, d2_0) = (sc.drive1, sc.drive2);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for &dd1 in &[0.0, 0.003, 0.006] {
        for &dd2 in &[0.001, 0.0035] {
            for &g in &[196.0, 250.0] {
                for &tp in &[340.0, 365.0] {
                    starts.push(vec![d1_0 + dd1, d2_0 + dd2, g, tp]);
                }
            }
        }
    }
    let mut results: Vec<(f64, Vec<f64>)> = Vec::new();
    for (i, x0) in starts.iter().enumerate() {
        let (r, xb) = nelder_mead(&sc, x0.clone(), [0.0015, 0.0007, 10.0, 6.0], 70, 1e-6);
        println!(
            "start {i:2} {:?} -> 1-F = {r:.3e} at d1={:.5} d2={:.5} g={:.1} tp={:.1}",
            x0.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>(),
            xb[0], xb[1], xb[2], xb[3]
        );
        results.push((r, xb));
    }
    results.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    println!("\ntop 3 with rtol 1e-9 polish:");
    for (r, xb) in results.iter().take(3) {
        let (fc, phi, f1, deficits) = eval(&sc, xb, 1e-9);
        println!(
            "  coarse 1-F {r:.3e} -> Fcond={fc:.6} F1q={f1:.5} phi={phi:+.4} at d1={:.5} d2={:.5} g={:.2} tp={:.2} deficits={:?}",
            xb[0], xb[1], xb[2], xb[3], deficits
        );
    }
}

use pulsegate_core::calibrate::{run_gate_protocol, ProtocolOptions, Scenario};
use std::time::Instant;

fn main() {
    let scenario = match std::env::args().nth(1).as_deref() {
        Some("abc") => Scenario::abc(),
        _ => Scenario::aba(),
    };
    let t0 = Instant::now();
    let opts = ProtocolOptions::default();
    let (report, _traj) = run_gate_protocol(&scenario, &opts).unwrap();
    println!("scenario        : {}", report.scenario);
    println!("fidelity_raw    : {:.6}", report.fidelity_raw);
    println!("fidelity_1q     : {:.6}", report.fidelity_1q);
    println!("fidelity_cond   : {:.6}", report.fidelity_cond);
    println!("theta1, theta2  : {:.4}, {:.4}", report.theta1_rad, report.theta2_rad);
    println!("phi             : {:.4}", report.phi_rad);
    for (l, v) in &report.leakage_by_initial_state {
        println!("leakage {l}     : {:.3e}", v);
    }
    println!("leakage_avg     : {:.3e}", report.leakage_avg);
    println!("deficits        : {:?}", report.column_deficits);
    println!("wall            : {:.1} s", t0.elapsed().as_secs_f64());
}

use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_basis_state, PropagationSettings};
use pulsegate_core::hilbert::FockLabel;

fn main() {
    let mut sc = Scenario::aba();
    sc.drive1 = 8.6560;
    sc.drive2 = 7.7475;
    let sched = sc.schedule().unwrap();
    let settings = PropagationSettings {
        rtol: 1e-8,
        atol: 1e-10,
        ..Default::default()
    }
    .uniform_grid(sc.duration, 40);
    let traj = propagate_basis_state(&sc.device, &sched, &FockLabel::new([1, 1, 0]), &settings).unwrap();
    let p110 = traj.population(&FockLabel::new([1, 1, 0])).unwrap();
    let p102 = traj.population(&FockLabel::new([1, 0, 2])).unwrap();
    let p012 = traj.population(&FockLabel::new([0, 1, 2])).unwrap();
    let p021 = traj.population(&FockLabel::new([0, 2, 1])).unwrap();
    println!("{:>8} {:>9} {:>9} {:>9} {:>9}", "t", "P110", "P102", "P012", "P021");
    for (k, &t) in traj.times.iter().enumerate() {
        println!(
            "{:8.1} {:9.5} {:9.5} {:9.5} {:9.5}",
            t, p110[k], p102[k], p012[k], p021[k]
        );
    }
}

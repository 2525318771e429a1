use ndarray::Array2;
use pulsegate_core::calibrate::Scenario;
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::hilbert::FockLabel;
use pulsegate_core::pulse::{DriveSchedule, DriveSpec, Envelope};
use pulsegate_core::C64;

fn run(label: &str, sched: &DriveSchedule, rtol: f64, atol: f64, horizon: f64) {
    let sc = Scenario::aba();
    let dev = &sc.device;
    let mut cols = Array2::<C64>::zeros((dev.dim(), 1));
    cols[(dev.fock_index(&FockLabel::new([1, 0, 0])).unwrap(), 0)] = C64::new(1.0, 0.0);
    let settings = PropagationSettings {
        rtol,
        atol,
        max_step: 0.25,
        output_grid: vec![horizon],
    };
    let t0 = std::time::Instant::now();
    let (_, stats) = propagate_columns(dev, sched, &cols, &settings).unwrap();
    println!(
        "{label:34} rtol={rtol:.0e} atol={atol:.0e}: steps={:7} rej={:5} h_avg={:.3e} wall={:.2}s",
        stats.steps,
        stats.rejected,
        horizon / stats.steps.max(1) as f64,
        t0.elapsed().as_secs_f64()
    );
}

fn main() {
    let sc = Scenario::aba();
    let horizon = 40.0;
    let no_drive = DriveSchedule::new(vec![]);
    let one_weak = DriveSchedule::new(vec![DriveSpec::new(
        "qc", 8.654, 0.0, Envelope::constant(0.0016, horizon)).unwrap()]);
    let one_full = DriveSchedule::new(vec![DriveSpec::new(
        "qc", 8.654, 0.0, Envelope::constant(0.160, horizon)).unwrap()]);
    let two_full = DriveSchedule::new(vec![
        DriveSpec::new("qc", 8.654, 0.0, Envelope::constant(0.160, horizon)).unwrap(),
        DriveSpec::new("qc", 7.744, 0.0, Envelope::constant(0.160, horizon)).unwrap(),
    ]);
    let _ = &sc;
    run("no drive", &no_drive, 1e-10, 1e-12, horizon);
    run("one weak drive (0.1% amp)", &one_weak, 1e-10, 1e-12, horizon);
    run("one full drive", &one_full, 1e-10, 1e-12, horizon);
    run("two full drives", &two_full, 1e-10, 1e-12, horizon);
    run("two full drives", &two_full, 1e-8, 1e-10, horizon);
    run("two full drives", &two_full, 1e-6, 1e-8, horizon);
}

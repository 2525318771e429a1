use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use pulsegate_bench::{aba_device, aba_scenario};
use pulsegate_core::dynamics::{propagate_columns, PropagationSettings};
use pulsegate_core::hilbert::{bare_hamiltonian, FockLabel};
use pulsegate_core::perturbation::{canonical_paths, closed_form_j12, path_sum_j};
use pulsegate_core::pulse::Envelope;
use pulsegate_core::spectrum::{eigensystem, zz_strength};

fn bench_envelope(c: &mut Criterion) {
    let env = Envelope::half_gamma_ramp(0.16, 196.0, 346.0).unwrap();
    c.bench_function("envelope_value", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for k in 0..1000 {
                acc += env.value(black_box(k as f64 * 0.35));
            }
            acc
        })
    });
}

fn bench_hamiltonian(c: &mut Criterion) {
    let dev = aba_device();
    c.bench_function("bare_hamiltonian_64", |b| {
        b.iter(|| bare_hamiltonian(black_box(&dev)).unwrap())
    });
}

fn bench_eigensystem(c: &mut Criterion) {
    let dev = aba_device();
    let h = bare_hamiltonian(&dev).unwrap();
    c.bench_function("eigensystem_64", |b| b.iter(|| eigensystem(black_box(&h)).unwrap()));
}

fn bench_zz(c: &mut Criterion) {
    let dev = aba_device();
    c.bench_function("zz_strength_64", |b| b.iter(|| zz_strength(black_box(&dev)).unwrap()));
}

fn bench_perturbation(c: &mut Criterion) {
    let sc = aba_scenario();
    let ctx = sc.context().unwrap();
    let paths = canonical_paths();
    c.bench_function("path_sum_j", |b| b.iter(|| path_sum_j(black_box(&ctx), &paths).unwrap()));
    c.bench_function("closed_form_j12", |b| {
        b.iter(|| closed_form_j12(black_box(&ctx)).unwrap())
    });
}

fn bench_short_propagation(c: &mut Criterion) {
    let sc = aba_scenario();
    let dev = sc.device.clone();
    let sched = sc.schedule().unwrap();
    let mut cols = Array2::<C64>::zeros((dev.dim(), 1));
    cols[(dev.fock_index(&FockLabel::new([1, 0, 0])).unwrap(), 0)] = C64::new(1.0, 0.0);
    let settings = PropagationSettings {
        rtol: 1e-8,
        atol: 1e-10,
        max_step: 0.25,
        output_grid: vec![10.0],
    };
    c.bench_function("propagate_10ns_dim64", |b| {
        b.iter(|| propagate_columns(black_box(&dev), &sched, &cols, &settings).unwrap())
    });
}

criterion_group!(
    benches,
    bench_envelope,
    bench_hamiltonian,
    bench_eigensystem,
    bench_zz,
    bench_perturbation,
    bench_short_propagation
);
criterion_main!(benches);

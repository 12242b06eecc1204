//! Benchmark bodies for the solver; `benches/solver.rs` wires them into
//! criterion.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, Throughput};
use tsfp_core::harness::{
    reference_solution, run_cell, ReferenceCache, ReferenceResolution, SweepAxis, SweepSpec,
};
use tsfp_core::{
    evolve_from, forward, initial_state, inverse, strang_step, Formulation, Observers, ProblemSpec,
    StepperConfig,
};

const SIZES: [usize; 3] = [128, 1024, 8192];

pub fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for n in SIZES {
        let spec = ProblemSpec::paper_real(2, 1.0, 0.0);
        let grid = spec.grid(n).unwrap();
        let u = initial_state(&spec, &grid).unwrap().u().clone();
        let spectrum = forward(&u);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("forward", n), &u, |b, u| {
            b.iter(|| forward(black_box(u)))
        });
        group.bench_with_input(BenchmarkId::new("inverse", n), &spectrum, |b, s| {
            b.iter(|| inverse(black_box(s)))
        });
    }
    group.finish();
}

/// One step through the nodal composition versus 100 steps of the
/// spectral propagator used by `evolve`.
pub fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for n in SIZES {
        let spec = ProblemSpec::paper_real(2, 0.5, 0.0);
        let grid = spec.grid(n).unwrap();
        let start = initial_state(&spec, &grid).unwrap();
        for formulation in [Formulation::Uv, Formulation::Psi] {
            let config = StepperConfig::new(1e-3).with_formulation(formulation);
            let label = format!("{formulation:?}").to_lowercase();
            group.bench_with_input(
                BenchmarkId::new(format!("nodal-{label}"), n),
                &start,
                |b, s| b.iter(|| strang_step(black_box(s), &config, &spec).unwrap()),
            );
            group.bench_with_input(
                BenchmarkId::new(format!("evolve100-{label}"), n),
                &start,
                |b, s| {
                    b.iter(|| {
                        evolve_from(
                            &spec,
                            black_box(s.clone()),
                            0.1,
                            &config,
                            &Observers::default(),
                        )
                        .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

pub fn sweep_cell(c: &mut Criterion) {
    let spec = SweepSpec::new(
        ProblemSpec::paper_real(2, 1.0, 0.0).with_t0(0.1),
        SweepAxis::Temporal,
        vec![1.0],
        vec![0.01],
        ReferenceResolution::new(PI / 32.0, 1e-3),
    );
    let problem = spec.problem(1.0);
    let reference = reference_solution(
        &problem,
        spec.reference,
        spec.composition,
        spec.formulation,
        &ReferenceCache::new(),
    )
    .unwrap();
    c.bench_function("sweep-cell", |b| {
        b.iter(|| run_cell(&spec, &problem, 0.01, black_box(&reference)).unwrap())
    });
}

use std::f64::consts::PI;

use tsfp_core::harness::{
    read_csv, reference_self_consistency, sweep, write_csv, Consistency, ErrorNorm, ReferenceCache,
    ReferenceResolution, SweepAxis, SweepSpec,
};
use tsfp_core::{
    energy, evolve, forward, inverse, Composition, Observers, ProblemSpec, StepperConfig,
};

fn spatial_study() -> SweepSpec {
    SweepSpec::new(
        ProblemSpec::paper_real(2, 1.0, 0.0).with_t0(0.25),
        SweepAxis::Spatial,
        (0..6).map(|i| 0.5f64.powi(i)).collect(),
        vec![PI / 4.0, PI / 8.0, PI / 16.0, PI / 32.0],
        ReferenceResolution::new(PI / 64.0, 1e-3),
    )
    .with_norm(ErrorNorm::Nodal)
}

#[test]
fn six_by_four_sweep_round_trips_through_csv() {
    let result = sweep(&spatial_study(), &ReferenceCache::new()).unwrap();
    assert!(result.all_ok());

    let mut buf = Vec::new();
    write_csv(&result, &mut buf).unwrap();
    let rows = read_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), 24);

    for (row, cell) in rows.iter().zip(result.cells.iter().flatten()) {
        let report = cell.report.unwrap();
        assert_eq!(row.epsilon, cell.epsilon);
        assert_eq!(row.axis_value, cell.axis_value);
        assert_eq!(row.error_u, Some(report.error_u));
        assert_eq!(row.error_v, Some(report.error_v));
        assert_eq!(row.observed_order, report.observed_order);
        assert_eq!(row.status, "ok");
    }

    // Spectral accuracy: each halving of h gains far more than a constant factor.
    let e: Vec<f64> = result.e_inf.iter().map(|e| e.unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] < w[0] / 10.0), "{e:?}");
}

#[test]
fn reference_cache_reuses_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec::new(
        ProblemSpec::paper_real(2, 0.5, 0.0).with_t0(0.2),
        SweepAxis::Temporal,
        vec![1.0, 0.5],
        vec![0.02, 0.01],
        ReferenceResolution::new(PI / 16.0, 1e-3),
    );

    let first = sweep(&spec, &ReferenceCache::with_dir(dir.path())).unwrap();
    let written = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(written, 4);

    let cache = ReferenceCache::with_dir(dir.path());
    let second = sweep(&spec, &cache).unwrap();
    assert_eq!(cache.len(), 2);
    assert_eq!(first.reference_keys, second.reference_keys);
    for (a, b) in first
        .cells
        .iter()
        .flatten()
        .zip(second.cells.iter().flatten())
    {
        assert_eq!(a.error_u(), b.error_u());
    }
}

#[test]
fn csv_is_identical_across_runs_apart_from_timing() {
    let spec = SweepSpec::new(
        ProblemSpec::paper_complex(3, 0.5, 1.0).with_t0(0.1),
        SweepAxis::Temporal,
        vec![1.0, 0.5],
        vec![0.02, 0.01],
        ReferenceResolution::new(0.25, 1e-3),
    )
    .with_composition(Composition::Vtv);
    let render = || {
        let mut buf = Vec::new();
        write_csv(&sweep(&spec, &ReferenceCache::new()).unwrap(), &mut buf).unwrap();
        String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(render(), render());
}

#[test]
fn refined_reference_agrees_with_temporal_sweep() {
    let spec = SweepSpec::new(
        ProblemSpec::paper_real(2, 1.0, 0.0).with_t0(0.5),
        SweepAxis::Temporal,
        vec![1.0],
        vec![0.1, 0.05],
        ReferenceResolution::new(PI / 16.0, 1e-3),
    );
    let cache = ReferenceCache::new();
    let result = sweep(&spec, &cache).unwrap();
    let verdicts = reference_self_consistency(&result, &cache).unwrap();
    for v in verdicts.iter().flatten() {
        assert!(matches!(v, Consistency::Consistent { .. }), "{v:?}");
    }
}

#[test]
fn transforms_invert_and_energy_is_conserved() {
    let spec = ProblemSpec::paper_real(2, 0.5, 1.0).with_t0(0.5);
    let grid = spec.grid(64).unwrap();
    let config = StepperConfig::new(1e-3);
    let (state, log) = evolve(&spec, &grid, &config, &Observers::energy(50)).unwrap();

    let back = inverse(&forward(state.u()));
    for (a, b) in back.values().iter().zip(state.u().values()) {
        assert!((a - b).norm() < 1e-13);
    }
    let e0 = log.energy[0].energy;
    assert!(((energy(&spec, &state) - e0) / e0).abs() < 1e-5);
}

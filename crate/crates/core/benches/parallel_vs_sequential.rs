//! Energy and gradient evaluation of the 3D plate, sequential against the
//! rayon-backed data-parallel path. Both paths produce bit-identical results;
//! only the wall-clock time should differ.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prestrain_core::field::AnalyticScalar;
use prestrain_core::recovery::{build_recovery, RecoveryInput};
use prestrain_core::tensor::Mat3;
use prestrain_core::{EnergyDensity, Execution, PlanarMatrixField, PlateEnergy, PlateGrid, PrestrainSpec, Rect};

fn setup(n: usize) -> (PlateGrid, PrestrainSpec, RecoveryInput) {
    let grid = PlateGrid::new(Rect::unit_square(), n, n, 4).unwrap();
    let b = PlanarMatrixField::polynomial(&[
        (Mat3::diag([1.0, 0.0, 0.0]), [0, 2]),
        (Mat3::diag([0.0, 1.0, 0.0]), [2, 0]),
    ])
    .unwrap();
    let spec = PrestrainSpec::new(PlanarMatrixField::zero(), b, 3.0, Rect::unit_square()).unwrap();
    let pi = std::f64::consts::PI;
    let inp = RecoveryInput {
        v3: AnalyticScalar::sine_product(1.0, [pi, pi], [0.0, 0.0]),
        spec: spec.clone(),
        density: EnergyDensity::svk(1.0, 1.0).unwrap(),
    };
    (grid, spec, inp)
}

fn bench_energy(c: &mut Criterion) {
    let h = 1.0 / 32.0;
    let mut group = c.benchmark_group("plate_energy");
    group.sample_size(20);
    for n in [32, 64, 128] {
        let (grid, spec, inp) = setup(n);
        let u = build_recovery(&inp, h, &grid).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let energy = PlateEnergy::new(&grid, &spec, inp.density, h)
                .unwrap()
                .with_execution(exec);
            let label = format!("{exec:?}").to_lowercase();
            group.bench_with_input(BenchmarkId::new(format!("value/{label}"), n), &u, |b, u| {
                b.iter(|| black_box(energy.value(u).unwrap()))
            });
            group.bench_with_input(BenchmarkId::new(format!("gradient/{label}"), n), &u, |b, u| {
                b.iter(|| black_box(energy.gradient(u).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_energy);
criterion_main!(benches);

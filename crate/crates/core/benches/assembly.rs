use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;

use dphase_core::galerkin::{self, EigenBasis, Forcing, GalerkinSystem, SolverConfig};
use dphase_core::{par, ExponentData, FieldSpec};

fn unordered() -> ExponentData {
    ExponentData {
        p: FieldSpec::Affine {
            offset: 1.9,
            slope: vec![0.3, 0.0],
            rate: 0.0,
        },
        q: FieldSpec::Affine {
            offset: 2.2,
            slope: vec![-0.3, 0.0],
            rate: 0.0,
        },
        ..ExponentData::constant(2, 0.02, 2.0, 2.0, 0.3, 0.3, 0.5)
    }
}

fn workers() -> Vec<(&'static str, usize)> {
    let pool = std::thread::available_parallelism().map_or(1, |n| n.get());
    vec![("sequential", 1), ("pool", pool)]
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_jacobian");
    for m in [8usize, 16] {
        let basis = EigenBasis::new(2, m).unwrap();
        let sys =
            GalerkinSystem::new(basis.clone(), None, unordered(), 0.01, Forcing::None).unwrap();
        let level = sys.time_level(0.0).unwrap();
        let u = DVector::from_fn(basis.len(), |j, _| 1.0 / (1.0 + j as f64));
        for (name, w) in workers() {
            group.bench_with_input(BenchmarkId::new(name, m), &m, |b, _| {
                par::with_workers(w, || {
                    b.iter(|| {
                        let a = sys.assemble(&u, &level);
                        let j = sys.jacobian(&u, &level);
                        (a.energy, j[(0, 0)])
                    })
                })
            });
        }
    }
    group.finish();
}

fn short_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_20_steps");
    group.sample_size(10);
    let u0 = FieldSpec::Sinusoidal {
        offset: 0.0,
        amplitude: 2.0,
        wavenumbers: vec![1.0, 1.0],
        phases: vec![],
        decay: 0.0,
    };
    let cfg = SolverConfig {
        m_per_dim: 8,
        tau: 1e-3,
        ..Default::default()
    };
    let data = unordered();
    for (name, w) in workers() {
        group.bench_function(name, |b| {
            par::with_workers(w, || {
                b.iter(|| {
                    galerkin::solve(&cfg, &data, &u0, &Forcing::None)
                        .unwrap()
                        .states
                        .len()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, short_solve);
criterion_main!(benches);

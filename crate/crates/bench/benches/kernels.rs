//! Throughput of the numerical kernels: adaptive quadrature, the
//! cylindrical Laplacian, one gradient-flow evaluation and the banded
//! Cholesky factorization behind the semi-implicit step.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hsnum::closed_forms::beta_integral_full;
use hsnum::cylinder_grid::{build_grid, cyl_laplacian};
use hsnum::minimizer::RayleighProblem;
use hsnum::quadrature::{integrate_cylindrical, integrate_radial, CylindricalDomain};

fn extremal_like(nodes: usize) -> hsnum::CylGrid {
    build_grid(3, 2, 20.0, 20.0, nodes, nodes, 2.0)
        .unwrap()
        .map_nodes(|x, y| (1.0 - x / 20.0) * (1.0 - y / 20.0) / ((x + 0.25) * (x + 0.25) + y * y).sqrt())
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("quadrature");
    g.bench_function("radial k=3 s=0.5", |b| {
        b.iter(|| integrate_radial(|r| (1.0 + r * r).powf(-2.0), black_box(3), 0.5, 1e-10).unwrap())
    });
    g.sample_size(10);
    g.bench_function("cylindrical beta (3,2,m=2,s=1)", |b| {
        b.iter(|| {
            let q = integrate_cylindrical(
                |x, y| (1.0 + x * x + y * y).powi(-2),
                3,
                2,
                black_box(1.0),
                CylindricalDomain::whole_space(3, 2),
                1e-10,
            )
            .unwrap();
            assert!((q.value / beta_integral_full(3, 2, 2.0, 1.0).unwrap() - 1.0).abs() < 1e-8);
        })
    });
    g.finish();
}

fn laplacian(c: &mut Criterion) {
    let mut g = c.benchmark_group("cyl_laplacian");
    for nodes in [64, 128, 256] {
        let grid = extremal_like(nodes);
        g.bench_with_input(BenchmarkId::from_parameter(nodes), &grid, |b, grid| {
            b.iter(|| cyl_laplacian(black_box(grid)).unwrap())
        });
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient_flow");
    for nodes in [64, 128] {
        let grid = extremal_like(nodes);
        let prob = RayleighProblem::new(&grid, 1.0).unwrap();
        g.bench_with_input(BenchmarkId::new("force", nodes), &grid.values, |b, u| {
            b.iter(|| prob.force(black_box(u)))
        });
        g.bench_with_input(BenchmarkId::new("rayleigh", nodes), &grid.values, |b, u| {
            b.iter(|| prob.rayleigh(black_box(u)))
        });
    }
    g.finish();
}

fn banded_cholesky(c: &mut Criterion) {
    let mut g = c.benchmark_group("banded_cholesky");
    g.sample_size(10);
    for nodes in [64, 128] {
        let grid = extremal_like(nodes);
        let prob = RayleighProblem::new(&grid, 1.0).unwrap();
        let rhs = prob.free_mass();
        g.bench_function(BenchmarkId::new("factor", nodes), |b| {
            b.iter(|| prob.shifted_operator(black_box(1.0)).cholesky().unwrap())
        });
        let chol = prob.shifted_operator(1.0).cholesky().unwrap();
        g.bench_function(BenchmarkId::new("solve", nodes), |b| b.iter(|| chol.solve(black_box(&rhs))));
    }
    g.finish();
}

criterion_group!(benches, quadrature, laplacian, flow, banded_cholesky);
criterion_main!(benches);

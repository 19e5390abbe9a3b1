use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use codiff::codiff::{dedup, minkowski_sum, DEDUP_TOL};
use codiff::harness::experiments::{linear_rate_config, quadratic_rate_config};
use codiff::problems::{build_max_plus_min, clustering_small, haar_d2, paper_example_2d, MaxPlusMinSpec};
use codiff::subsolvers::{min_norm_point, solve_phi_subproblem, SubsolverConfig};
use codiff::{evaluate, mcd_solve, qrmcd_solve, FeasibleSet, GeneratorSet, McdConfig, OffsetPair};

/// `n` generators on a spiral in `R^3`.
fn spiral(n: usize, phase: f64) -> GeneratorSet {
    let pairs = (0..n)
        .map(|i| {
            let t = i as f64 * 0.37 + phase;
            OffsetPair::new(-(i as f64) / n as f64, vec![t.cos(), t.sin(), (2.0 * t).cos()])
        })
        .collect();
    GeneratorSet::new(pairs).unwrap()
}

fn calculus(c: &mut Criterion) {
    let pe = paper_example_2d();
    c.bench_function("evaluate/paper_example_2d", |b| b.iter(|| evaluate(&pe.expr, black_box(&[0.3, -0.2]))));
    let cl = clustering_small();
    c.bench_function("evaluate/clustering_small", |b| b.iter(|| evaluate(&cl.expr, black_box(&[0.5, 9.5]))));
    let (g1, g2) = (spiral(40, 0.0), spiral(40, 0.5));
    c.bench_function("minkowski_sum/40x40", |b| b.iter(|| minkowski_sum(black_box(&g1), black_box(&g2))));
    let big = GeneratorSet::new(g1.iter().chain(g1.iter()).chain(g2.iter()).cloned().collect()).unwrap();
    c.bench_function("dedup/120", |b| b.iter(|| dedup(black_box(&big), DEDUP_TOL)));
}

fn subsolvers(c: &mut Criterion) {
    let cfg = SubsolverConfig::default();
    for n in [4, 32] {
        let g = spiral(n, 0.1);
        c.bench_function(&format!("min_norm_point/{n}"), |b| b.iter(|| min_norm_point(black_box(&g), &cfg)));
        let x = [0.2, -0.1, 0.4];
        let ball = FeasibleSet::new_ball(vec![0.0; 3], 0.5).unwrap();
        c.bench_function(&format!("phi_subproblem/ball/{n}"), |b| {
            b.iter(|| solve_phi_subproblem(black_box(&g), &ball, &x, &cfg))
        });
    }
}

fn solvers(c: &mut Criterion) {
    let p = build_max_plus_min(&MaxPlusMinSpec::linear_preset(), 0).unwrap();
    let x0 = p.seeded_start(0);
    let default = McdConfig::default();
    c.bench_function("mcd/max_plus_min", |b| b.iter(|| mcd_solve(&p.expr, black_box(&x0), &default)));
    let lin = linear_rate_config();
    c.bench_function("qrmcd/max_plus_min/rate_protocol", |b| {
        b.iter(|| qrmcd_solve(&p.expr, black_box(&x0), &FeasibleSet::WholeSpace, &lin))
    });
    let h = haar_d2();
    let quad = quadratic_rate_config();
    c.bench_function("qrmcd/haar_d2/armijo", |b| {
        b.iter_batched(
            || h.seeded_start(1),
            |x| qrmcd_solve(&h.expr, &x, &FeasibleSet::WholeSpace, &quad),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, calculus, subsolvers, solvers);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sketchbound::bounds::{run_sweep, CheckName, SweepOptions, SweepSpec};
use sketchbound::models::{FamilyKind, RandomMisfitFamily, SketchDistribution};
use sketchbound::posterior::{marginal_from_table, realization_table};
use sketchbound::{hellinger, jackknife, mixed_norm, problems, MixedNormSpec, QuadratureRule, StreamRoot};

fn sketched(n: usize) -> (sketchbound::InverseProblem, RandomMisfitFamily) {
    let p = problems::tp2(problems::unit_line(64, QuadratureRule::GaussLegendre)).unwrap();
    let kind = FamilyKind::SketchedQuadratic {
        sketch: SketchDistribution::Rademacher,
    };
    let f = RandomMisfitFamily::new(p.model().clone(), kind, n, StreamRoot::new(1, "bench")).unwrap();
    (p, f)
}

fn realizations(c: &mut Criterion) {
    let mut g = c.benchmark_group("realization_table");
    for n in [4usize, 64, 256] {
        let (p, f) = sketched(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| realization_table(&f, p.prior(), 200).unwrap())
        });
    }
    g.finish();
}

fn measures(c: &mut Criterion) {
    let (p, f) = sketched(16);
    let table = realization_table(&f, p.prior(), 500).unwrap();
    let marginal = marginal_from_table(&table, p.prior()).unwrap();
    c.bench_function("hellinger_64", |b| {
        b.iter(|| hellinger(black_box(p.posterior()), &marginal.measure, p.prior()).unwrap())
    });
    c.bench_function("marginal_500x64", |b| b.iter(|| marginal_from_table(black_box(&table), p.prior()).unwrap()));
    let err = table.map_indexed(|_, k, x| (x - p.misfit()[k]).abs());
    let spec = MixedNormSpec::new(4.0, 2.0, 500).unwrap();
    c.bench_function("mixed_norm_500x64", |b| {
        b.iter(|| mixed_norm(black_box(&err), |x| x, &spec, p.prior()).unwrap())
    });
    c.bench_function("jackknife_500x64", |b| {
        b.iter(|| jackknife(&[black_box(&err)], |m| m[0].iter().sum::<f64>()).unwrap())
    });
}

fn sweep(c: &mut Criterion) {
    let (p, f) = sketched(1);
    let spec = SweepSpec { ns: vec![4, 16, 64], m: 200 };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("thm1_thm2_3x200", |b| {
        b.iter(|| run_sweep(&p, &f, &spec, &[CheckName::Thm1, CheckName::Thm2], &SweepOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, realizations, measures, sweep);
criterion_main!(benches);

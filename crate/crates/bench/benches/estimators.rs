use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use pocmed_core::uncertainty::bootstrap_ci;
use pocmed_core::verify::reference_query;
use pocmed_core::{identify, BootstrapConfig, CdfModel, Estimand, Method, ScmSpec, Target};

fn point_estimates(c: &mut Criterion) {
    let scm = ScmSpec::reference_bernoulli().compile().unwrap();
    let q = reference_query();
    let mut g = c.benchmark_group("point");
    for n in [1_000usize, 10_000, 100_000] {
        let d = scm.sample_observational(n, 1).unwrap();
        g.bench_with_input(BenchmarkId::new("ecdf+natural_pns", n), &d, |b, d| {
            b.iter(|| {
                let m = CdfModel::for_stratum(d, &[]).unwrap();
                black_box(identify::natural_pns(&m, &q).unwrap())
            })
        });
    }
    g.finish();
}

fn bootstrap(c: &mut Criterion) {
    let scm = ScmSpec::reference_bernoulli().compile().unwrap();
    let d = scm.sample_observational(10_000, 2).unwrap();
    let target = Target::new(reference_query(), &[Estimand::Natural, Estimand::Pn]);
    let cfg = BootstrapConfig { replicates: 200, level: 0.95, seed: 3 };
    let mut g = c.benchmark_group("bootstrap");
    g.sample_size(10);
    g.bench_function("N=10000 B=200", |b| b.iter(|| black_box(bootstrap_ci(&d, &target, &cfg).unwrap())));
    g.finish();
}

fn exact_truth(c: &mut Criterion) {
    let scm = ScmSpec::reference_bernoulli().compile().unwrap();
    let q = reference_query();
    c.bench_function("exact truth", |b| b.iter(|| black_box(scm.truth_pns(&q, Method::Exact).unwrap())));
}

criterion_group!(benches, point_estimates, bootstrap, exact_truth);
criterion_main!(benches);

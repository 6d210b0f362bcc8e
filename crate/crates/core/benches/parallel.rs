use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use walshprod::exact::{exact_expected_m_with, ExactOptions};
use walshprod::family::{all_subsets_of_size, WeightedFamily};
use walshprod::matrix::mc_expected_m_with;
use walshprod::{Execution, ProductSpec};

fn spec(d: usize) -> ProductSpec {
    let n = d * d * d;
    let w = 1.0 / (n as f64).sqrt();
    let singles = WeightedFamily::uniform(all_subsets_of_size(d, &[1]).unwrap(), w).unwrap();
    let pairs = WeightedFamily::uniform(all_subsets_of_size(d, &[2]).unwrap(), w).unwrap();
    ProductSpec::new(n, vec![singles.clone(), pairs, singles]).unwrap()
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for d in [8, 12] {
        let s = spec(d);
        for (name, execution) in MODES {
            let opts = ExactOptions { execution, ..Default::default() };
            g.bench_with_input(BenchmarkId::new(name, d), &s, |b, s| {
                b.iter(|| exact_expected_m_with(s, &opts).unwrap())
            });
        }
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc");
    g.sample_size(10);
    let s = spec(6);
    for (name, execution) in MODES {
        g.bench_function(name, |b| b.iter(|| mc_expected_m_with(&s, 512, 1, execution).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, exact, monte_carlo);
criterion_main!(benches);

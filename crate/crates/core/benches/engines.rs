use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use supercsp::branching::{gw_monte_carlo, run_replicas, BranchingTriplet, ReplicaConfig};
use supercsp::generator::{Domain, GeneratorSpec};
use supercsp::par::Execution;
use supercsp::pde::{maximal_solution, MaximalOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn galton_watson(c: &mut Criterion) {
    let mut g = c.benchmark_group("gw_monte_carlo");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| gw_monte_carlo(&[1, 5, 10, 50], 10_000, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn replicas(c: &mut Criterion) {
    let spec = GeneratorSpec::half_laplacian(1);
    let triplet = BranchingTriplet::critical_binary(0.5);
    let mut g = c.benchmark_group("run_replicas");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = ReplicaConfig { replicas: 100, n: 100, execution: exec, ..ReplicaConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_replicas(&spec, &triplet, cfg).unwrap())
        });
    }
    g.finish();
}

fn maximal(c: &mut Criterion) {
    let spec = GeneratorSpec::half_laplacian(3).with_domain(Domain::Punctured { inner: 0.1 });
    let triplet = BranchingTriplet::critical_binary(1.0);
    let mut g = c.benchmark_group("maximal_solution");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = MaximalOptions {
            radii: vec![5.0, 10.0],
            heights: vec![1e2, 1e3],
            inner_radii: vec![0.1, 0.05],
            tol_b_rel: 1.0,
            execution: exec,
            ..MaximalOptions::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| maximal_solution(&spec, &triplet, opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, galton_watson, replicas, maximal);
criterion_main!(benches);

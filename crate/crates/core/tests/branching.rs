use std::time::Instant;

use supercsp::branching::{
    conditioned_samples, gw_monte_carlo, gw_survival_recursion, run_replicas, step_cloud, BranchingTriplet,
    CloudStepper, OffspringLaw, OffspringMode, ParticleCloud, ReplicaConfig, DEFAULT_K_MAX,
};
use supercsp::generator::{Domain, GeneratorSpec, RadialFunction};
use supercsp::par::Execution;
use supercsp::rng::stream;
use supercsp::stats::{ks_distance, linear_fit, Estimate};
use supercsp::Error;

#[test]
fn recursion_matches_two_over_k() {
    let start = Instant::now();
    let o = gw_survival_recursion(100_000).unwrap();
    let ks = 100_000.0 * o.survival[100_000];
    assert!((1.99..=2.01).contains(&ks), "{ks}");
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(o.survival.windows(2).all(|w| w[1] <= w[0] && w[1] >= 0.0));
}

#[test]
fn recursion_against_direct_extinction_iteration() {
    // independent oracle: iterate e <- 1/2 + e^2/2 directly
    let o = gw_survival_recursion(200).unwrap();
    let mut e = 0.0f64;
    for k in 1..=200 {
        e = 0.5 + 0.5 * e * e;
        assert!(((1.0 - e) - o.survival[k]).abs() < 1e-13);
    }
}

#[test]
fn simulated_trees_match_recursion() {
    let ks = [1, 5, 10, 50];
    let o = gw_survival_recursion(50).unwrap();
    let trees = 100_000;
    let counts = gw_monte_carlo(&ks, trees, 42, Execution::Parallel).unwrap();
    for (k, alive) in counts {
        let e = Estimate::proportion(alive, trees);
        assert!(e.within(o.survival[k], 3.0), "k={k}: {e:?} vs {}", o.survival[k]);
    }
}

#[test]
fn conditioned_sizes_are_near_exponential() {
    let mut xs = conditioned_samples(200, 20_000, 9, Execution::Parallel).unwrap();
    assert_eq!(xs.len(), 20_000);
    let d = ks_distance(&mut xs, |z| 1.0 - (-2.0 * z).exp());
    assert!(d < 0.05, "{d}");
}

// exact extinction probability of the stepped scheme: per step each atom is
// replaced by 0 or 2 atoms with probability pi/2 each
fn stepped_extinction(n: u64, steps: usize, pi: f64) -> f64 {
    let mut s = 0.0f64;
    for _ in 0..steps {
        s = (1.0 - pi) * s + pi * 0.5 * (1.0 + s * s);
    }
    s.powi(n as i32)
}

#[test]
fn extinction_frequency_matches_stepped_oracle() {
    let spec = GeneratorSpec::half_laplacian(1);
    let trip = BranchingTriplet::critical_binary(0.5);
    let n = 100;
    let cfg = ReplicaConfig { replicas: 3000, n, t_end: 1.0, seed: 3, ..Default::default() };
    let stats = run_replicas(&spec, &trip, &cfg).unwrap();
    // default dt = 0.5 / rate, 200 steps
    let exact = stepped_extinction(n, 200, 0.5);
    assert!(stats.extinction.within(exact, 3.0), "{:?} vs {exact}", stats.extinction);
    assert!((exact - (-2.0f64).exp()).abs() < 0.02);
}

#[test]
fn critical_mass_is_a_martingale() {
    let spec = GeneratorSpec::new(2, RadialFunction::constant(1.0));
    let trip = BranchingTriplet::critical_binary(0.5);
    let cfg = ReplicaConfig { replicas: 10_000, n: 20, t_end: 0.5, seed: 8, ..Default::default() };
    let stats = run_replicas(&spec, &trip, &cfg).unwrap();
    assert!(stats.mass.within(1.0, 3.0), "{:?}", stats.mass);
}

#[test]
fn supercritical_drift_grows_mass_at_rate_beta() {
    let spec = GeneratorSpec::half_laplacian(1);
    let trip = BranchingTriplet::new(RadialFunction::constant(1.0), RadialFunction::constant(0.25), 2.0);
    let cfg = ReplicaConfig { replicas: 4000, n: 50, t_end: 0.5, seed: 4, ..Default::default() };
    let stats = run_replicas(&spec, &trip, &cfg).unwrap();
    // stepped mean: (1 + pi * beta/(c n))^steps with pi = 1/2, 50 steps
    let exact = (1.0 + 0.5 * 1.0 / 50.0f64).powi(50);
    assert!(stats.mass.within(exact, 3.0), "{:?} vs {exact}", stats.mass);
}

#[test]
fn deterministic_branching_happens_on_the_lattice() {
    let spec = GeneratorSpec::half_laplacian(1);
    let trip = BranchingTriplet::critical_binary(0.5).with_mode(OffspringMode::BinaryDeterministic);
    let n = 40;
    let stepper = CloudStepper::new(&spec, &trip, n).unwrap();
    let mut cloud = ParticleCloud::point_mass(&[0.0], 1.0, n);
    let mut rng = stream(1, 0);
    let mut epochs = Vec::new();
    for _ in 0..7 {
        epochs.extend(stepper.step(&mut cloud, 0.013, &mut rng).unwrap().epochs);
    }
    assert!(!epochs.is_empty());
    for (k, t) in epochs.iter().enumerate() {
        assert_eq!(*t, (k + 1) as f64 / n as f64);
    }
}

#[test]
fn masses_are_multiples_of_one_over_n() {
    let spec = GeneratorSpec::half_laplacian(3);
    let trip = BranchingTriplet::critical_binary(0.5);
    let mut cloud = ParticleCloud::point_mass(&[0.0; 3], 1.0, 64);
    let mut rng = stream(2, 0);
    for _ in 0..20 {
        cloud = step_cloud(&cloud, &spec, &trip, 1.0 / 128.0, &mut rng).unwrap();
        assert_eq!(cloud.atom_mass(), 1.0 / 64.0);
        assert_eq!(cloud.total_mass() * 64.0, cloud.count() as f64);
    }
}

#[test]
fn oversized_step_is_rejected() {
    let spec = GeneratorSpec::half_laplacian(1);
    let trip = BranchingTriplet::critical_binary(0.5);
    let cloud = ParticleCloud::point_mass(&[0.0], 1.0, 100);
    assert!(step_cloud(&cloud, &spec, &trip, 0.02, &mut stream(0, 0)).is_err());
}

#[test]
fn coarse_resolution_names_the_position() {
    let spec = GeneratorSpec::half_laplacian(1);
    let beta = RadialFunction::expr("-100*r^2").unwrap();
    let trip = BranchingTriplet::new(beta, RadialFunction::constant(0.5), 2.0);
    let cloud = ParticleCloud::point_mass(&[3.0], 0.1, 10);
    match step_cloud(&cloud, &spec, &trip, 0.05, &mut stream(0, 0)) {
        Err(Error::ResolutionTooCoarse { position, .. }) => assert!(position > 2.0 && position < 4.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn census_overflow_is_counted_not_fatal() {
    let spec = GeneratorSpec::half_laplacian(1);
    let trip = BranchingTriplet::new(RadialFunction::constant(10.0), RadialFunction::constant(0.5), 2.0);
    let cfg = ReplicaConfig { replicas: 5, n: 20, t_end: 2.0, census_cap: 100, seed: 1, ..Default::default() };
    let stats = run_replicas(&spec, &trip, &cfg).unwrap();
    assert!(stats.overflows > 0);
}

#[test]
fn zero_replicas_rejected() {
    let spec = GeneratorSpec::half_laplacian(1);
    let trip = BranchingTriplet::critical_binary(0.5);
    let cfg = ReplicaConfig { replicas: 0, ..Default::default() };
    assert!(run_replicas(&spec, &trip, &cfg).is_err());
}

#[test]
fn replica_stats_are_reproducible_across_execution_modes() {
    let spec = GeneratorSpec::half_laplacian(2);
    let trip = BranchingTriplet::critical_binary(0.5);
    let base = ReplicaConfig { replicas: 64, n: 30, t_end: 0.5, seed: 77, ..Default::default() };
    let a = run_replicas(&spec, &trip, &base).unwrap();
    let b = run_replicas(&spec, &trip, &ReplicaConfig { execution: Execution::Sequential, ..base.clone() }).unwrap();
    let c = run_replicas(&spec, &trip, &base).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn faster_diffusion_spreads_the_support_further() {
    let trip = BranchingTriplet::critical_binary(0.5);
    let cfg = ReplicaConfig { replicas: 400, n: 50, t_end: 1.0, seed: 12, ..Default::default() };
    let slow = run_replicas(&GeneratorSpec::new(1, RadialFunction::constant(1.0)), &trip, &cfg).unwrap();
    let fast = run_replicas(&GeneratorSpec::power_law(1, 2.0), &trip, &cfg).unwrap();
    assert!(fast.support[0].q50 > slow.support[0].q50);
}

#[test]
fn punctured_clouds_record_hits() {
    let spec = GeneratorSpec::half_laplacian(3).with_domain(Domain::Punctured { inner: 0.2 });
    let trip = BranchingTriplet::critical_binary(0.5);
    let cfg =
        ReplicaConfig { replicas: 200, n: 10, t_end: 1.0, start: vec![1.5, 0.0, 0.0], seed: 5, ..Default::default() };
    let stats = run_replicas(&spec, &trip, &cfg).unwrap();
    let h = stats.hitting.unwrap();
    assert!(h.mean > 0.0 && h.mean < 1.0, "{h:?}");
}

#[test]
fn stable_laplace_exponent_limit() {
    // c n^p (Φ(1 - λ/n) - (1 - λ/n)) -> α λ^p - β λ
    let (alpha, p, c, n) = (1.0, 1.5, 2.0, 10_000u64);
    let law = OffspringLaw::stable(alpha, 0.0, p, c, n, DEFAULT_K_MAX).unwrap();
    let s = 1.0 - 1.0 / n as f64;
    let v = c * (n as f64).powf(p) * law.pgf_minus_identity(s);
    assert!((v - 1.0).abs() < 0.01, "{v}");
}

#[test]
fn stable_mean_is_one_plus_drift() {
    let (p, c, n) = (1.5, 2.0, 400u64);
    let critical = OffspringLaw::stable(1.0, 0.0, p, c, n, DEFAULT_K_MAX).unwrap();
    // truncation at K_max removes about q K^{1-p} / Γ(2-p) of the mean
    assert!((critical.mean() - 1.0).abs() < 1e-3);
    let beta = 2.0;
    let tilted = OffspringLaw::stable(1.0, beta, p, c, n, DEFAULT_K_MAX).unwrap();
    let shift = beta * (n as f64).powf(1.0 - p) / c;
    assert!((tilted.mean() - critical.mean() - shift).abs() < 1e-12);
    // the law has infinite variance, so the sample is compared through the
    // bounded statistic min(X, K) whose exact mean is sum_{k=1}^{K} P(X >= k)
    let cap = 1000u64;
    let exact: f64 = (1..=cap).map(|k| critical.tail(k)).sum();
    let mut rng = stream(6, 0);
    let xs: Vec<f64> = (0..1_000_000).map(|_| critical.sample(&mut rng).min(cap) as f64).collect();
    let e = Estimate::from_samples(&xs);
    assert!(e.within(exact, 3.0), "{e:?} vs {exact}");
}

#[test]
fn stable_tail_slope() {
    let p = 1.5;
    let law = OffspringLaw::stable(1.0, 0.0, p, 2.0, 1000, DEFAULT_K_MAX).unwrap();
    let mut rng = stream(21, 0);
    let mut xs: Vec<u64> = (0..1_000_000).map(|_| law.sample_tail_conditioned(100, &mut rng)).collect();
    xs.sort_unstable();
    let ks: Vec<f64> = (0..=20).map(|j| 100.0 * 100f64.powf(j as f64 / 20.0)).collect();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for &k in &ks {
        let above = xs.len() - xs.partition_point(|&x| (x as f64) <= k);
        lx.push(k.ln());
        ly.push((above as f64 / xs.len() as f64).ln());
    }
    let (slope, _) = linear_fit(&lx, &ly);
    assert!((slope + p).abs() < 0.1, "{slope}");
}

//! Acceptance checks, run in sequence so that wall-clock limits are
//! meaningful. Prints one line per criterion and fails if any line fails.

use std::time::{Duration, Instant};

use supercsp::branching::{
    conditioned_samples, gw_monte_carlo, gw_survival_recursion, run_replicas, BranchingTriplet, ReplicaConfig,
};
use supercsp::csp::{classify, fixtures};
use supercsp::generator::{
    default_truncations, mean_exit_time, Domain, ExitTimeOptions, GeneratorSpec, RadialFunction,
};
use supercsp::par::Execution;
use supercsp::pde::{
    maximal_solution, search_constant, verify_comparison, ComparisonFunction, MaximalOptions, PdeVerdict, SampleGrid,
};
use supercsp::stats::{ks_distance, Estimate};
use supercsp_cli::compare::builtin_overrides;
use supercsp_cli::config::DualityParams;
use supercsp_cli::experiments::duality;
use supercsp_cli::{compare_engines, CompareConfig};

type Check = Result<String, String>;

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let out = out
        .map(|s| format!("{s}; {:.1} s", took.as_secs_f64()))
        .map_err(|s| format!("{s}; {:.1} s", took.as_secs_f64()));
    if took > limit {
        return Err(format!("over the {} s limit: {}", limit.as_secs(), out.unwrap_or_else(|e| e)));
    }
    out
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn gw_survival() -> Check {
    let k = 100_000;
    let rec = timed(secs(1), || {
        let o = gw_survival_recursion(k).map_err(|e| e.to_string())?;
        let v = k as f64 * o.survival[k];
        ensure((1.99..=2.01).contains(&v), format!("K s_K = {v:.6}"))
    })?;
    let oracle = gw_survival_recursion(50).map_err(|e| e.to_string())?;
    let mc = timed(secs(30), || {
        let trees = 100_000;
        let counts = gw_monte_carlo(&[1, 5, 10, 50], trees, 1, Execution::Parallel).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for (k, alive) in counts {
            let e = Estimate::proportion(alive, trees);
            worst = worst.max((e.mean - oracle.survival[k]).abs() / e.std_err);
        }
        ensure(worst <= 3.0, format!("max |MC - recursion| = {worst:.2} SE"))
    })?;
    Ok(format!("{rec}; {mc}"))
}

fn gw_exponential_limit() -> Check {
    timed(secs(120), || {
        let mut xs = conditioned_samples(200, 100_000, 2, Execution::Parallel).map_err(|e| e.to_string())?;
        let d = ks_distance(&mut xs, |z| 1.0 - (-2.0 * z).exp());
        ensure(d < 0.05, format!("KS distance {d:.4} against Exp(2)"))
    })
}

fn replica_cfg(seed: u64) -> ReplicaConfig {
    ReplicaConfig { replicas: 2000, n: 500, t_end: 1.0, seed, ..ReplicaConfig::default() }
}

fn extinction_law() -> Check {
    timed(secs(300), || {
        let stats =
            run_replicas(&GeneratorSpec::half_laplacian(1), &BranchingTriplet::critical_binary(0.5), &replica_cfg(3))
                .map_err(|e| e.to_string())?;
        let target = (-2.0f64).exp();
        let f = stats.extinction.mean;
        ensure((f - target).abs() <= 0.03, format!("extinction frequency {f:.4}, exp(-2) = {target:.4}"))
    })
}

fn duality_hat() -> Check {
    timed(secs(600), || {
        let d = duality(
            &GeneratorSpec::half_laplacian(1),
            &BranchingTriplet::critical_binary(0.5),
            &DualityParams::default(),
            &replica_cfg(4),
        )
        .map_err(|e| e.to_string())?;
        ensure(
            d.z.abs() <= 3.0,
            format!(
                "MC {:.5} +- {:.5}, exp(-u_f) = {:.5}, z = {:.2}",
                d.monte_carlo.mean, d.monte_carlo.std_err, d.predicted, d.z
            ),
        )
    })
}

fn theorem_p() -> Check {
    let mut parts = Vec::new();
    for (d, want) in [(3, PdeVerdict::Nontrivial), (5, PdeVerdict::Trivial)] {
        parts.push(timed(secs(300), || {
            let spec = GeneratorSpec::half_laplacian(d).with_domain(Domain::Punctured { inner: 0.1 });
            let r = maximal_solution(&spec, &BranchingTriplet::critical_binary(1.0), &MaximalOptions::default())
                .map_err(|e| e.to_string())?;
            ensure(r.verdict == want, format!("d = {d}: {:?} at probe {:.4e}", r.verdict, r.probe()))
        })?);
    }
    Ok(parts.join("; "))
}

fn stationary_w() -> Check {
    let spec = GeneratorSpec::half_laplacian(3);
    let trip = BranchingTriplet::new(RadialFunction::constant(0.0), RadialFunction::constant(1.0), 2.0);
    let cf = ComparisonFunction::StationaryW { kappa: 1.0, p: 2.0, d: 3 };
    let rep = verify_comparison(&cf, &spec, &trip, &SampleGrid::uniform(0.1, 10.0, 1000, 0.0, 1.0, 3))
        .map_err(|e| e.to_string())?;
    ensure(rep.max_abs_residual < 1e-12, format!("max |residual| {:.3e}", rep.max_abs_residual))
}

fn supersolutions() -> Check {
    timed(secs(60), || {
        let spec = GeneratorSpec::new(1, RadialFunction::constant(1.0));
        let trip = BranchingTriplet::critical_binary(1.0);
        let family = |k: f64| {
            [5.0, 10.0, 20.0]
                .iter()
                .map(|&r| {
                    (
                        ComparisonFunction::MRK { radius: r, k, p: 2.0 },
                        SampleGrid::uniform(0.0, 0.99 * r, 200, 0.0, 1.0, 6),
                    )
                })
                .collect::<Vec<_>>()
        };
        let k = search_constant(&family, &spec, &trip, 0.0, 100.0).map_err(|e| e.to_string())?;
        let mut mrk = 0;
        for (cf, grid) in family(k) {
            mrk += verify_comparison(&cf, &spec, &trip, &grid).map_err(|e| e.to_string())?.sign_violations;
        }
        let spec = GeneratorSpec::half_laplacian(3).with_domain(Domain::Punctured { inner: 0.001 });
        let trip =
            BranchingTriplet::new(RadialFunction::expr("-1.5*r^-2").unwrap(), RadialFunction::constant(1.0), 2.0);
        let (radius, eps) = (20.0, 0.01);
        let psi = ComparisonFunction::PsiREps { radius, eps, l: 0.1, gamma: 10.0, p: 2.0 };
        let (lo, hi) = (eps * 1.0001, radius * 0.9999);
        let r = (0..400).map(|i| lo * (hi / lo).powf(i as f64 / 399.0)).collect();
        let psi_v = verify_comparison(&psi, &spec, &trip, &SampleGrid { r, t: vec![0.0, 0.5, 1.0] })
            .map_err(|e| e.to_string())?
            .sign_violations;
        ensure(mrk == 0 && psi_v == 0, format!("K = {k:.4}: M_RK violations {mrk}; psi violations {psi_v}"))
    })
}

fn explosion() -> Check {
    let mut parts = Vec::new();
    let cases = [
        ("m = 3, d = 3", GeneratorSpec::power_law(3, 3.0), true),
        ("m = 2, d = 3", GeneratorSpec::power_law(3, 2.0), false),
        ("Brownian motion", GeneratorSpec::half_laplacian(3), false),
    ];
    for (label, spec, want) in cases {
        parts.push(timed(secs(60), || {
            let r = mean_exit_time(&spec, 0.0, &default_truncations(0.0), &ExitTimeOptions::default())
                .map_err(|e| e.to_string())?;
            let ok = r.explosive == want && (!want || r.converged);
            ensure(ok, format!("{label}: explosive {} converged {} sup g {:.4e}", r.explosive, r.converged, r.sup_g))
        })?);
    }
    Ok(parts.join("; "))
}

fn truth_table() -> Check {
    let fx = fixtures();
    let mut wrong = Vec::new();
    for f in &fx {
        let v = classify(&f.scenario).map_err(|e| e.to_string())?;
        if v.status != f.expected || v.rule != f.rule {
            wrong.push(format!("{} gave {} via {}", f.scenario.name, v.status, v.rule));
        }
    }
    let names: Vec<&str> = fx.iter().map(|f| f.scenario.name.as_str()).collect();
    let flip = names.contains(&"ep3-flip-p1.5") && names.contains(&"ep3-flip-p2");
    ensure(
        fx.len() >= 10 && flip && wrong.is_empty(),
        format!("{} fixtures, p-flip pair {flip}, mismatches {wrong:?}", fx.len()),
    )
}

fn engine_agreement() -> Check {
    timed(secs(1800), || {
        let report = compare_engines(&CompareConfig::default()).map_err(|e| e.to_string())?;
        let bad: Vec<&str> = report.rows.iter().filter(|r| !r.agree).map(|r| r.scenario.as_str()).collect();
        ensure(
            report.disagreements == 0,
            format!("{} fixtures, {} definite pairs, disagreements {bad:?}", report.rows.len(), report.definite_pairs),
        )
    })
}

fn theorem_1() -> Check {
    let opts = builtin_overrides().remove("thm1-gauss").unwrap();
    let spec = GeneratorSpec::new(1, RadialFunction::constant(1.0));
    let trip = |exponent: f64| {
        let alpha = RadialFunction::expr(&format!("exp(-r^{exponent})")).unwrap();
        BranchingTriplet::new(RadialFunction::constant(0.0), alpha, 2.0)
    };
    let mut diag = String::new();
    let out = timed(secs(1200), || {
        let fast = maximal_solution(&spec, &trip(2.5), &opts).map_err(|e| e.to_string())?;
        let gauss = maximal_solution(&spec, &trip(2.0), &opts).map_err(|e| e.to_string())?;
        let vals = |r: &supercsp::pde::MaximalReport| {
            r.radii.iter().map(|s| format!("{:.3e}", s.value)).collect::<Vec<_>>().join(", ")
        };
        let decays = gauss.radii.windows(2).all(|w| w[1].value < w[0].value);
        let ok = fast.verdict == PdeVerdict::Nontrivial
            && fast.probe() > 5e-2
            && gauss.verdict == PdeVerdict::Trivial
            && gauss.probe() < 1e-3
            && decays;
        ensure(
            ok,
            format!(
                "exp(-r^2.5): {:?} [{}]; exp(-r^2): {:?} [{}] at R = 20, 40, 80",
                fast.verdict,
                vals(&fast),
                gauss.verdict,
                vals(&gauss)
            ),
        )
    });
    let default_probe = MaximalOptions { probe_t: 1.0, ..opts.clone() };
    if let Ok(r) = maximal_solution(&spec, &trip(2.0), &default_probe) {
        diag = format!(
            " (diagnostic: exp(-r^2) at the default probe time t = 1 gives {})",
            r.radii.iter().map(|s| format!("{:.3e}", s.value)).collect::<Vec<_>>().join(", ")
        );
    }
    out.map(|s| s + &diag).map_err(|s| s + &diag)
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("Galton-Watson survival", gw_survival),
        ("conditioned exponential limit", gw_exponential_limit),
        ("extinction law", extinction_law),
        ("duality with a hat function", duality_hat),
        ("punctured-domain dichotomy", theorem_p),
        ("stationary W residual", stationary_w),
        ("supersolution signs", supersolutions),
        ("explosion dichotomy", explosion),
        ("classifier truth table", truth_table),
        ("engine agreement", engine_agreement),
        ("Theorem 1 numerical dichotomy", theorem_1),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        match check() {
            Ok(msg) => println!("criterion {id:>2} PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

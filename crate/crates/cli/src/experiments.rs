use serde::Serialize;
use serde_json::{json, Value};
use supercsp::branching::{
    conditioned_samples, gw_monte_carlo, gw_survival_recursion, run_replicas, BranchingTriplet, ReplicaConfig,
};
use supercsp::csp::{classify, ScenarioSpec, Status};
use supercsp::generator::{default_truncations, mean_exit_time, norm, GeneratorSpec};
use supercsp::pde::{
    hitting_probability, maximal_solution, solve_cauchy, verify_comparison, BoundaryCondition, CauchyProblem,
    PdeVerdict, ProbeRow,
};
use supercsp::stats::{ks_distance, Estimate};

use crate::config::{DualityParams, Experiment, ExperimentConfig, GwParams};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Definite,
    Unknown,
}

/// A long-format table written next to `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<Row>,
    pub sweep: Option<Sweep>,
    pub outputs: Value,
    pub outcome: Outcome,
}

struct Rows {
    experiment: String,
    scenario: String,
    rows: Vec<Row>,
}

impl Rows {
    fn new(cfg: &ExperimentConfig) -> Self {
        let scenario = cfg.scenario.as_ref().map(|s| s.name.clone()).unwrap_or_default();
        Rows { experiment: cfg.experiment.as_str().into(), scenario, rows: Vec::new() }
    }

    fn push(&mut self, quantity: &str, parameter: impl Into<String>, value: Option<f64>, text: impl Into<String>) {
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            scenario: self.scenario.clone(),
            quantity: quantity.into(),
            parameter: parameter.into(),
            value,
            text: text.into(),
        });
    }

    fn num(&mut self, quantity: &str, parameter: impl Into<String>, value: f64) {
        self.push(quantity, parameter, Some(value), "");
    }

    fn text(&mut self, quantity: &str, parameter: impl Into<String>, text: impl Into<String>) {
        self.push(quantity, parameter, None, text);
    }

    fn estimate(&mut self, quantity: &str, parameter: impl Into<String> + Clone, e: &Estimate) {
        self.num(&format!("{quantity}_mean"), parameter.clone(), e.mean);
        self.num(&format!("{quantity}_std_err"), parameter, e.std_err);
    }
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Serialize(e.to_string()))
}

fn scenario(cfg: &ExperimentConfig) -> CliResult<&ScenarioSpec> {
    cfg.scenario
        .as_ref()
        .ok_or_else(|| CliError::Invalid { key: "scenario".into(), constraint: "required for this experiment".into() })
}

fn pde_outcome(v: PdeVerdict) -> Outcome {
    if v == PdeVerdict::Unknown {
        Outcome::Unknown
    } else {
        Outcome::Definite
    }
}

fn verdict_name(v: PdeVerdict) -> &'static str {
    match v {
        PdeVerdict::Trivial => "trivial",
        PdeVerdict::Nontrivial => "nontrivial",
        PdeVerdict::Unknown => "unknown",
    }
}

fn probe_sweep(trace: &[ProbeRow]) -> Sweep {
    Sweep {
        header: vec!["inner", "radius", "height", "value", "steps"],
        rows: trace
            .iter()
            .map(|r| {
                vec![
                    r.inner.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(r.radius),
                    fmt_f64(r.height),
                    fmt_f64(r.value),
                    r.steps.to_string(),
                ]
            })
            .collect(),
    }
}

/// Monte Carlo and PDE sides of `E exp(-<f, X(t)>) = exp(-mass u_f(x0, t))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityOutcome {
    pub monte_carlo: Estimate,
    pub u_f: f64,
    pub predicted: f64,
    /// `(mc - predicted) / std_err`.
    pub z: f64,
}

pub fn duality(
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    params: &DualityParams,
    replicas: &ReplicaConfig,
) -> CliResult<DualityOutcome> {
    let cfg = ReplicaConfig { test_function: Some(params.test_function.clone()), ..replicas.clone() };
    let stats = run_replicas(spec, triplet, &cfg)?;
    let mc = stats.laplace.ok_or_else(|| CliError::Serialize("replicas returned no Laplace estimate".into()))?;
    let r0 = if cfg.start.is_empty() { 0.0 } else { norm(&cfg.start) };
    let problem = CauchyProblem::new(params.radius, BoundaryCondition::Zero, cfg.t_end).with_breakpoints(if r0 > 0.0 {
        vec![r0]
    } else {
        vec![]
    });
    let gf = solve_cauchy(spec, triplet, &params.test_function, &problem, &params.solver)?;
    let u_f = gf.interp(gf.t_nodes.len() - 1, r0);
    let predicted = (-cfg.start_mass * u_f).exp();
    Ok(DualityOutcome { monte_carlo: mc, u_f, predicted, z: (mc.mean - predicted) / mc.std_err })
}

/// Survival recursion, Monte Carlo trees and the conditioned sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwOutcome {
    pub k: usize,
    pub k_times_s_k: f64,
    /// `(k, recursion, Monte Carlo)`.
    pub monte_carlo: Vec<(usize, f64, Estimate)>,
    /// KS distance of `Z_n / n | Z_n > 0` from `Exp(2)`.
    pub ks_distance: Option<f64>,
}

pub fn gw(params: &GwParams, seed: u64, exec: supercsp::par::Execution) -> CliResult<GwOutcome> {
    let max_k = params.ks.iter().copied().max().unwrap_or(0).max(params.k);
    let oracle = gw_survival_recursion(max_k)?;
    let counts = if params.ks.is_empty() { Vec::new() } else { gw_monte_carlo(&params.ks, params.trees, seed, exec)? };
    let monte_carlo = counts
        .into_iter()
        .map(|(k, alive)| (k, oracle.survival[k], Estimate::proportion(alive, params.trees)))
        .collect();
    let ks = if params.conditioned_n > 0 {
        let mut xs = conditioned_samples(params.conditioned_n, params.conditioned_samples, seed ^ 0x9e37_79b9, exec)?;
        Some(ks_distance(&mut xs, |z| 1.0 - (-2.0 * z).exp()))
    } else {
        None
    };
    Ok(GwOutcome {
        k: params.k,
        k_times_s_k: params.k as f64 * oracle.survival[params.k],
        monte_carlo,
        ks_distance: ks,
    })
}

/// Copies the top-level seed into every engine section.
pub fn resolve(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut out = cfg.clone();
    out.numerics.replicas.seed = cfg.seed;
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<Report> {
    cfg.validate()?;
    let cfg = &resolve(cfg);
    let mut rows = Rows::new(cfg);
    let n = &cfg.numerics;
    let mut sweep = None;
    let mut outcome = Outcome::Definite;
    let outputs = match cfg.experiment {
        Experiment::Classify => {
            let v = classify(scenario(cfg)?)?;
            rows.text("status", "", v.status.to_string());
            rows.text("rule", "", v.rule.clone());
            for c in &v.certificate {
                rows.push(
                    "certificate",
                    format!(
                        "{:?} {}",
                        c.quantity,
                        serde_json::to_string(&c.relation).unwrap_or_default().trim_matches('"')
                    ),
                    Some(c.value),
                    fmt_f64(c.bound),
                );
            }
            if v.status == Status::Unknown {
                outcome = Outcome::Unknown;
            }
            to_value(&v)?
        }
        Experiment::MaximalSolution => {
            let s = scenario(cfg)?;
            let report = maximal_solution(&s.generator, &s.triplet()?, &n.maximal)?;
            rows.text("verdict", "", verdict_name(report.verdict));
            for r in &report.radii {
                rows.num("probe", format!("R={}", fmt_f64(r.radius)), r.value);
                rows.text("saturated", format!("R={}", fmt_f64(r.radius)), r.saturated.to_string());
            }
            outcome = pde_outcome(report.verdict);
            sweep = Some(probe_sweep(&report.trace));
            json!({ "verdict": report.verdict, "radii": report.radii })
        }
        Experiment::Hitting => {
            let s = scenario(cfg)?;
            let h = &n.hitting;
            let est = hitting_probability(&s.generator, &s.triplet()?, h.r_mu, h.mass, h.t_end, &n.maximal)?;
            rows.num("probability", "", est.probability);
            rows.num("u_max", "", est.u_max);
            rows.text("verdict", "", verdict_name(est.verdict));
            if let Some(r) = &est.report {
                sweep = Some(probe_sweep(&r.trace));
            }
            outcome = pde_outcome(est.verdict);
            json!({ "probability": est.probability, "u_max": est.u_max, "verdict": est.verdict })
        }
        Experiment::ParticleMc => {
            let s = scenario(cfg)?;
            let stats = run_replicas(&s.generator, &s.triplet()?, &n.replicas)?;
            rows.num("replicas", "", stats.replicas as f64);
            rows.num("overflows", "", stats.overflows as f64);
            rows.estimate("extinction", "", &stats.extinction);
            rows.estimate("mass", "", &stats.mass);
            if let Some(l) = &stats.laplace {
                rows.estimate("laplace", "", l);
            }
            if let Some(h) = &stats.hitting {
                rows.estimate("hitting", "", h);
            }
            for q in &stats.support {
                let t = format!("t={}", fmt_f64(q.t));
                rows.num("support_q10", t.clone(), q.q10);
                rows.num("support_q50", t.clone(), q.q50);
                rows.num("support_q90", t, q.q90);
            }
            json!({
                "replicas": stats.replicas,
                "overflows": stats.overflows,
                "extinction": stats.extinction,
                "mass": stats.mass,
                "laplace": stats.laplace,
                "hitting": stats.hitting,
                "support": stats.support,
            })
        }
        Experiment::DualityCheck => {
            let s = scenario(cfg)?;
            let d = duality(&s.generator, &s.triplet()?, &n.duality, &n.replicas)?;
            rows.estimate("laplace", "", &d.monte_carlo);
            rows.num("u_f", "", d.u_f);
            rows.num("predicted", "", d.predicted);
            rows.num("z", "", d.z);
            to_value(&d)?
        }
        Experiment::GwOracle => {
            let g = gw(&n.gw, cfg.seed, n.replicas.execution)?;
            rows.num("k_times_s_k", format!("k={}", g.k), g.k_times_s_k);
            for (k, rec, e) in &g.monte_carlo {
                rows.num("s_k_recursion", format!("k={k}"), *rec);
                rows.estimate("s_k_monte_carlo", format!("k={k}"), e);
            }
            if let Some(d) = g.ks_distance {
                rows.num("ks_distance", format!("n={}", n.gw.conditioned_n), d);
            }
            to_value(&g)?
        }
        Experiment::ResidualCheck => {
            let s = scenario(cfg)?;
            let triplet = s.triplet()?;
            let mut reports = Vec::new();
            for f in &n.residual.functions {
                let r = verify_comparison(f, &s.generator, &triplet, &n.residual.grid)?;
                rows.num("max_abs_residual", r.function.clone(), r.max_abs_residual);
                rows.num("max_rel_residual", r.function.clone(), r.max_rel_residual);
                rows.num("max_residual", r.function.clone(), r.max_residual);
                rows.num("sign_violations", r.function.clone(), r.sign_violations as f64);
                reports.push(r);
            }
            to_value(&reports)?
        }
        Experiment::Explosion => {
            let s = scenario(cfg)?;
            let e = &n.explosion;
            let truncations = e.truncations.clone().unwrap_or_else(|| default_truncations(e.r0));
            let report = mean_exit_time(&s.generator, e.r0, &truncations, &e.options)?;
            rows.text("explosive", "", report.explosive.to_string());
            rows.text("converged", "", report.converged.to_string());
            rows.num("sup_g", "", report.sup_g);
            sweep = Some(Sweep {
                header: vec!["r", "truncation", "g"],
                rows: report.trace.iter().map(|t| vec![fmt_f64(t.r), fmt_f64(t.truncation), fmt_f64(t.g)]).collect(),
            });
            json!({
                "explosive": report.explosive,
                "converged": report.converged,
                "sup_g": report.sup_g,
                "truncation_radii_used": report.truncation_radii_used,
            })
        }
    };
    Ok(Report { rows: rows.rows, sweep, outputs, outcome })
}

use std::collections::BTreeMap;

use serde::Serialize;
use supercsp::branching::run_replicas;
use supercsp::csp::{classify, fixtures, Fixture, Status};
use supercsp::generator::RadialFunction;
use supercsp::pde::{maximal_solution, MaximalOptions, PdeVerdict};

use crate::config::CompareConfig;
use crate::error::CliResult;
use crate::output::fmt_f64;

/// PDE options used for a built-in fixture unless the config overrides them.
///
/// The Theorem 1 pair lives on `R^1` with a decaying `alpha`; the maximal
/// solution there needs large radii, an early probe time and a coarse
/// implicit step.
pub fn builtin_overrides() -> BTreeMap<String, MaximalOptions> {
    let mut o = MaximalOptions::default();
    o.radii = vec![20.0, 40.0, 80.0];
    o.heights = vec![1e2, 1e3];
    o.probe_t = 0.25;
    o.tol_b_rel = 1e-2;
    o.tol_b_abs = 1e-5;
    o.solver.delta = 1.0;
    o.solver.resolution = Some(1.0);
    ["thm1-gauss", "thm1-fast-decay"].into_iter().map(|n| (n.to_string(), o.clone())).collect()
}

pub fn pde_status(v: PdeVerdict) -> Status {
    match v {
        PdeVerdict::Trivial => Status::Holds,
        PdeVerdict::Nontrivial => Status::Fails,
        PdeVerdict::Unknown => Status::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub scenario: String,
    pub expected: Status,
    pub classifier: Status,
    pub rule: String,
    pub pde: Status,
    pub probe: f64,
    /// Median support radius at the final time over the particle replicas.
    pub mc_indicator: Option<f64>,
    pub agree: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub disagreements: usize,
    pub definite_pairs: usize,
}

impl CompareReport {
    pub fn table(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.scenario.clone(),
                    r.classifier.to_string(),
                    r.rule.clone(),
                    r.pde.to_string(),
                    fmt_f64(r.probe),
                    r.mc_indicator.map(fmt_f64).unwrap_or_default(),
                    r.agree.to_string(),
                ]
            })
            .collect()
    }
}

pub const COMPARE_HEADER: [&str; 7] = ["scenario", "classifier", "rule", "pde", "probe", "mc_indicator", "agree"];

/// Fixture list after `builtin` and `only` are applied.
pub fn selected(cfg: &CompareConfig) -> Vec<Fixture> {
    let mut all = if cfg.builtin { fixtures() } else { Vec::new() };
    all.extend(cfg.fixtures.iter().cloned());
    if !cfg.only.is_empty() {
        all.retain(|f| cfg.only.contains(&f.scenario.name));
    }
    all
}

/// Options for one fixture: config override, then built-in, then `maximal`.
pub fn options_for(cfg: &CompareConfig, name: &str) -> MaximalOptions {
    cfg.overrides
        .get(name)
        .cloned()
        .or_else(|| if cfg.builtin { builtin_overrides().remove(name) } else { None })
        .unwrap_or_else(|| cfg.maximal.clone())
}

/// Classifier against maximal solution on every fixture, with an optional
/// particle indicator.
pub fn compare_engines(cfg: &CompareConfig) -> CliResult<CompareReport> {
    let mut rows = Vec::new();
    for f in selected(cfg) {
        let start = std::time::Instant::now();
        let s = &f.scenario;
        let verdict = classify(s)?;
        let triplet = s.triplet()?;
        let report = maximal_solution(&s.generator, &triplet, &options_for(cfg, &s.name))?;
        let pde = pde_status(report.verdict);
        let mc_indicator = match &cfg.particle {
            Some(p) if s.is_full_space() && supports_particles(&triplet) => {
                let mut p = p.clone();
                p.seed = cfg.seed;
                let stats = run_replicas(&s.generator, &triplet, &p)?;
                stats.support.last().map(|q| q.q50)
            }
            _ => None,
        };
        let agree = verdict.status == Status::Unknown || pde == Status::Unknown || verdict.status == pde;
        rows.push(CompareRow {
            scenario: s.name.clone(),
            expected: f.expected,
            classifier: verdict.status,
            rule: verdict.rule,
            pde,
            probe: report.probe(),
            mc_indicator,
            agree,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let disagreements = rows.iter().filter(|r| !r.agree).count();
    let definite_pairs = rows.iter().filter(|r| r.classifier != Status::Unknown && r.pde != Status::Unknown).count();
    Ok(CompareReport { rows, disagreements, definite_pairs })
}

fn supports_particles(t: &supercsp::branching::BranchingTriplet) -> bool {
    let bounded = |f: &RadialFunction| (0..=50).map(|i| f.eval(i as f64)).all(|v| v.is_finite());
    bounded(&t.alpha) && bounded(&t.beta)
}

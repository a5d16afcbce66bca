use serde::{Deserialize, Serialize};

use super::cloud::{CloudStepper, ParticleCloud};
use super::triplet::{BranchingTriplet, OffspringMode};
use crate::error::{precondition, Error, Result};
use crate::generator::{norm, GeneratorSpec, RadialFunction};
use crate::par::{try_map_indexed, Execution};
use crate::rng::stream;
use crate::stats::{quantile, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkedBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplicaConfig {
    pub replicas: usize,
    pub n: u64,
    /// Time step; defaults to `0.5/rate`, or `1/rate` for deterministic
    /// branching.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Starting point of the initial atom; empty means the origin.
    pub start: Vec<f64>,
    pub start_mass: f64,
    pub census_cap: usize,
    /// Times at which the support radius is recorded.
    pub record_times: Vec<f64>,
    pub marked: Option<MarkedBall>,
    /// `f` for the Laplace functional `exp(-<f, X(t_end)>)`.
    pub test_function: Option<RadialFunction>,
    pub escape_radius: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for ReplicaConfig {
    fn default() -> Self {
        ReplicaConfig {
            replicas: 1000,
            n: 500,
            dt: None,
            t_end: 1.0,
            start: Vec::new(),
            start_mass: 1.0,
            census_cap: 10_000_000,
            record_times: Vec::new(),
            marked: None,
            test_function: None,
            escape_radius: 1e6,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub index: usize,
    pub extinct: bool,
    pub extinction_time: Option<f64>,
    pub final_mass: f64,
    /// Support radius at each record time.
    pub support_radius: Vec<f64>,
    /// Some atom entered the marked ball or was absorbed at the inner
    /// boundary.
    pub hit: bool,
    pub laplace: Option<f64>,
    pub overflow: bool,
    pub branch_events: usize,
    pub escaped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportQuantiles {
    pub t: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaStats {
    pub replicas: usize,
    pub overflows: usize,
    pub extinction: Estimate,
    pub mass: Estimate,
    pub laplace: Option<Estimate>,
    pub hitting: Option<Estimate>,
    pub support: Vec<SupportQuantiles>,
    pub outcomes: Vec<ReplicaOutcome>,
}

pub fn run_replicas(spec: &GeneratorSpec, triplet: &BranchingTriplet, cfg: &ReplicaConfig) -> Result<ReplicaStats> {
    precondition(cfg.replicas >= 1, || "replica count must be at least 1".into())?;
    precondition(cfg.t_end > 0.0, || "t_end must be positive".into())?;
    let mut stepper = CloudStepper::new(spec, triplet, cfg.n)?;
    stepper.census_cap = cfg.census_cap;
    stepper.set_escape_radius(cfg.escape_radius);
    let dt = cfg.dt.unwrap_or_else(|| match triplet.offspring_mode {
        OffspringMode::BinaryDeterministic => 1.0 / stepper.rate(),
        _ => 0.5 / stepper.rate(),
    });
    precondition(dt > 0.0, || "dt must be positive".into())?;
    let d = spec.dimension as usize;
    let start = if cfg.start.is_empty() { vec![0.0; d] } else { cfg.start.clone() };
    precondition(start.len() == d, || format!("start has {} coordinates, dimension is {d}", start.len()))?;
    let mut records = cfg.record_times.clone();
    if records.is_empty() {
        records.push(cfg.t_end);
    }
    records.sort_by(f64::total_cmp);
    precondition(records.iter().all(|&t| t > 0.0 && t <= cfg.t_end), || "record times must lie in (0, t_end]".into())?;

    let outcomes = try_map_indexed(cfg.replicas, cfg.execution, |i| run_one(i, &stepper, &start, dt, &records, cfg))?;

    let ok: Vec<&ReplicaOutcome> = outcomes.iter().filter(|o| !o.overflow).collect();
    let valid = ok.len();
    let extinct = ok.iter().filter(|o| o.extinct).count();
    let masses: Vec<f64> = ok.iter().map(|o| o.final_mass).collect();
    let laplace = cfg
        .test_function
        .as_ref()
        .map(|_| Estimate::from_samples(&ok.iter().filter_map(|o| o.laplace).collect::<Vec<_>>()));
    let tracks_hits = cfg.marked.is_some() || spec.domain.inner_radius().is_some();
    let hitting = tracks_hits.then(|| Estimate::proportion(ok.iter().filter(|o| o.hit).count(), valid));
    let support = records
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut xs: Vec<f64> = ok.iter().map(|o| o.support_radius[j]).collect();
            SupportQuantiles {
                t,
                q10: quantile(&mut xs, 0.1),
                q50: quantile(&mut xs, 0.5),
                q90: quantile(&mut xs, 0.9),
            }
        })
        .collect();
    Ok(ReplicaStats {
        replicas: cfg.replicas,
        overflows: cfg.replicas - valid,
        extinction: Estimate::proportion(extinct, valid),
        mass: Estimate::from_samples(&masses),
        laplace,
        hitting,
        support,
        outcomes,
    })
}

fn run_one(
    index: usize,
    stepper: &CloudStepper,
    start: &[f64],
    dt: f64,
    records: &[f64],
    cfg: &ReplicaConfig,
) -> Result<ReplicaOutcome> {
    let mut rng = stream(cfg.seed, index as u64);
    let mut cloud = ParticleCloud::point_mass(start, cfg.start_mass, stepper.n());
    let mut out = ReplicaOutcome {
        index,
        extinct: cloud.is_extinct(),
        extinction_time: cloud.is_extinct().then_some(0.0),
        final_mass: cloud.total_mass(),
        support_radius: Vec::with_capacity(records.len()),
        hit: false,
        laplace: None,
        overflow: false,
        branch_events: 0,
        escaped: 0,
    };
    let in_marked = |c: &ParticleCloud| match &cfg.marked {
        Some(m) => c.atoms().any(|x| {
            let diff: Vec<f64> = x.iter().zip(&m.center).map(|(a, b)| a - b).collect();
            norm(&diff) <= m.radius
        }),
        None => false,
    };
    out.hit = in_marked(&cloud);
    let mut next_record = 0;
    while next_record < records.len() {
        if cloud.is_extinct() {
            out.support_radius.push(0.0);
            next_record += 1;
            continue;
        }
        let target = records[next_record];
        let h = dt.min(target - cloud.clock);
        let h = if target - (cloud.clock + h) < 1e-12 * target { target - cloud.clock } else { h };
        match stepper.step(&mut cloud, h, &mut rng) {
            Ok(ev) => {
                out.branch_events += ev.branch_events;
                out.escaped += ev.escaped;
                if ev.absorbed > 0 {
                    out.hit = true;
                }
            }
            Err(Error::CensusOverflow(_)) => {
                out.overflow = true;
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
        if (target - cloud.clock).abs() <= 1e-12 * target {
            cloud.clock = target;
        }
        if cloud.is_extinct() && !out.extinct {
            out.extinct = true;
            out.extinction_time = Some(cloud.clock);
        }
        if !out.hit && in_marked(&cloud) {
            out.hit = true;
        }
        while next_record < records.len() && cloud.clock >= records[next_record] {
            out.support_radius.push(cloud.support_radius());
            next_record += 1;
        }
    }
    out.final_mass = cloud.total_mass();
    out.laplace = cfg.test_function.as_ref().map(|f| (-cloud.integrate(f)).exp());
    Ok(out)
}

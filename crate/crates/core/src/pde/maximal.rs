use serde::{Deserialize, Serialize};

use super::grid_function::{BoundaryCondition, GridFunction};
use super::solver::{solve_cauchy, CauchyProblem, SolverParams};
use crate::branching::BranchingTriplet;
use crate::error::{precondition, Error, Result};
use crate::generator::{Domain, GeneratorSpec, RadialFunction};
use crate::par::{try_map_indexed, Execution};

/// How the blow-up heights of the sweep are turned into boundary values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeightScaling {
    /// `u = B`.
    Plain,
    /// `u = B (alpha(R))^(-1/(p-1))` outside and
    /// `u = B (alpha(eps) eps^2)^(-1/(p-1))` at an inner radius `eps`.
    #[default]
    Natural,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaximalOptions {
    /// Truncation radii, increasing.
    pub radii: Vec<f64>,
    /// Blow-up heights, increasing.
    pub heights: Vec<f64>,
    /// Inner radii for punctured domains, decreasing.
    pub inner_radii: Vec<f64>,
    pub scaling: HeightScaling,
    pub tol_b_rel: f64,
    pub tol_b_abs: f64,
    /// Probe values below this are trivial.
    pub tol_triv: f64,
    /// Probe values above this, and stable in `R`, are nontrivial.
    pub floor: f64,
    pub stable_rel: f64,
    /// Largest inner-radius extrapolation, relative to the extrapolated
    /// value, that still allows a nontrivial verdict.
    pub extrapolation_rel: f64,
    pub probe_r: f64,
    pub probe_t: f64,
    pub solver: SolverParams,
    pub execution: Execution,
}

impl Default for MaximalOptions {
    fn default() -> Self {
        MaximalOptions {
            radii: vec![10.0, 20.0, 40.0],
            heights: vec![1e2, 1e3, 1e4, 1e5],
            inner_radii: vec![0.1, 0.01, 0.001],
            scaling: HeightScaling::Natural,
            tol_b_rel: 1e-4,
            tol_b_abs: 1e-12,
            tol_triv: 1e-3,
            floor: 5e-2,
            stable_rel: 5e-2,
            extrapolation_rel: 0.25,
            probe_r: 1.0,
            probe_t: 1.0,
            solver: SolverParams::default(),
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdeVerdict {
    Trivial,
    Nontrivial,
    Unknown,
}

/// One solve of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub inner: Option<f64>,
    pub radius: f64,
    pub height: f64,
    pub value: f64,
    pub steps: usize,
}

/// Probe value of one truncation radius after the height and inner-radius
/// limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSummary {
    pub radius: f64,
    pub value: f64,
    /// The height sweep met its tolerance for every inner radius.
    pub saturated: bool,
    /// Saturated probe value per inner radius, before extrapolation.
    pub by_inner: Vec<(f64, f64)>,
    /// Distance between the smallest inner radius value and `value`.
    pub extrapolation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub verdict: PdeVerdict,
    pub radii: Vec<RadiusSummary>,
    pub trace: Vec<ProbeRow>,
    /// Solution of the largest radius, smallest inner radius and last height.
    pub solution: GridFunction,
}

impl MaximalReport {
    /// Probe value at the largest radius.
    pub fn probe(&self) -> f64 {
        self.radii.last().map_or(f64::NAN, |s| s.value)
    }
}

struct Saturated {
    value: f64,
    saturated: bool,
    rows: Vec<ProbeRow>,
    solution: GridFunction,
}

/// Aitken extrapolation of a sequence converging geometrically; falls back
/// to the last term when the differences are not monotone.
pub fn extrapolate(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return values.last().copied().unwrap_or(f64::NAN);
    }
    let (p1, p2, p3) = (values[n - 3], values[n - 2], values[n - 1]);
    let (d1, d2) = (p1 - p2, p2 - p3);
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return p3;
    }
    let rho = d2 / d1;
    (p3 - d2 * rho / (1.0 - rho)).max(0.0)
}

/// The maximal solution with zero initial data, approximated by solutions
/// with large boundary data on truncated domains.
///
/// For each truncation radius (and inner radius on punctured domains) the
/// boundary height is raised until the probe value saturates. The probe is
/// then extrapolated to a vanishing inner radius and followed as the
/// truncation radius grows.
pub fn maximal_solution(
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    opts: &MaximalOptions,
) -> Result<MaximalReport> {
    spec.validate()?;
    precondition(!opts.heights.is_empty(), || "height sweep is empty".into())?;
    precondition(opts.heights.windows(2).all(|w| w[1] > w[0]), || "heights must be increasing".into())?;
    precondition(opts.probe_t > 0.0, || "probe time must be positive".into())?;

    let radii: Vec<f64> = match spec.domain.outer_radius() {
        Some(o) => vec![o],
        None => opts.radii.clone(),
    };
    precondition(!radii.is_empty(), || "radius sweep is empty".into())?;
    precondition(radii.windows(2).all(|w| w[1] > w[0]), || "radii must be increasing".into())?;
    let inners: Vec<Option<f64>> = match spec.domain {
        Domain::Punctured { inner } => {
            if opts.inner_radii.is_empty() {
                vec![Some(inner)]
            } else {
                opts.inner_radii.iter().map(|&e| Some(e)).collect()
            }
        }
        Domain::Annulus { inner, .. } => vec![Some(inner)],
        _ => vec![None],
    };
    precondition(inners.windows(2).all(|w| w[1] < w[0]), || "inner radii must be decreasing".into())?;
    precondition(opts.probe_r < radii[0], || format!("probe radius {} must lie inside {}", opts.probe_r, radii[0]))?;
    if let Some(Some(e)) = inners.first() {
        precondition(opts.probe_r > *e, || format!("probe radius {} must exceed the inner radius {e}", opts.probe_r))?;
    }

    let combos: Vec<(Option<f64>, f64)> = radii.iter().flat_map(|&r| inners.iter().map(move |&e| (e, r))).collect();
    let results = try_map_indexed(combos.len(), opts.execution, |k| {
        let (eps, radius) = combos[k];
        saturate(spec, triplet, opts, eps, radius)
    })?;

    let mut trace = Vec::new();
    let mut summaries = Vec::new();
    let mut solution = None;
    for (ri, &radius) in radii.iter().enumerate() {
        let block = &results[ri * inners.len()..(ri + 1) * inners.len()];
        let values: Vec<f64> = block.iter().map(|s| s.value).collect();
        let value =
            if inners[0].is_some() && inners.len() >= 3 { extrapolate(&values) } else { *values.last().unwrap() };
        summaries.push(RadiusSummary {
            radius,
            value,
            saturated: block.iter().all(|s| s.saturated),
            by_inner: inners.iter().zip(&values).filter_map(|(e, v)| e.map(|e| (e, *v))).collect(),
            extrapolation: (values.last().unwrap() - value).abs(),
        });
    }
    for s in results {
        trace.extend(s.rows);
        solution = Some(s.solution);
    }
    let verdict = decide(&summaries, opts);
    Ok(MaximalReport { verdict, radii: summaries, trace, solution: solution.unwrap() })
}

fn decide(summaries: &[RadiusSummary], opts: &MaximalOptions) -> PdeVerdict {
    let tail = summaries.last().unwrap();
    let last = tail.value;
    if last < opts.tol_triv {
        return PdeVerdict::Trivial;
    }
    if summaries.len() >= 2 && last >= opts.floor && tail.extrapolation <= opts.extrapolation_rel * last {
        let prev = summaries[summaries.len() - 2].value;
        if (prev - last).abs() < opts.stable_rel * last {
            return PdeVerdict::Nontrivial;
        }
    }
    PdeVerdict::Unknown
}

fn boundary(scaling: HeightScaling, height: f64, length: f64) -> BoundaryCondition {
    match scaling {
        HeightScaling::Plain => BoundaryCondition::Value { value: height },
        HeightScaling::Natural => BoundaryCondition::Scaled { value: height, length },
    }
}

fn saturate(
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    opts: &MaximalOptions,
    eps: Option<f64>,
    radius: f64,
) -> Result<Saturated> {
    let local = match (spec.domain, eps) {
        (Domain::Punctured { .. }, Some(e)) => spec.clone().with_domain(Domain::Punctured { inner: e }),
        _ => spec.clone(),
    };
    let zero = RadialFunction::constant(0.0);
    let mut rows: Vec<ProbeRow> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut last = None;
    let mut saturated = false;
    for &height in &opts.heights {
        let mut problem = CauchyProblem::new(radius, boundary(opts.scaling, height, 1.0), opts.probe_t)
            .with_breakpoints(vec![opts.probe_r]);
        if let Some(e) = eps {
            problem = problem.with_inner(boundary(opts.scaling, height, e));
        }
        let gf = solve_cauchy(&local, triplet, &zero, &problem, &opts.solver)?;
        let j = gf.t_nodes.len() - 1;
        let value = gf.interp(j, opts.probe_r);
        rows.push(ProbeRow { inner: eps, radius, height, value, steps: gf.steps });
        last = Some(gf);
        if let Some(p) = prev {
            let tol = opts.tol_b_rel * p.max(value) + opts.tol_b_abs;
            if value < p - tol {
                return Err(Error::MaximumPrinciple(format!(
                    "probe fell from {p} to {value} when the boundary height rose to {height} (R = {radius}, eps = {eps:?})"
                )));
            }
            if value - p <= tol {
                saturated = true;
                break;
            }
        }
        prev = Some(value);
    }
    Ok(Saturated { value: rows.last().unwrap().value, saturated, rows, solution: last.unwrap() })
}

/// Probability that the process started from `mass` at radius `r_mu`
/// charges a neighbourhood of the puncture by time `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub probability: f64,
    pub u_max: f64,
    pub verdict: PdeVerdict,
    pub report: Option<MaximalReport>,
}

/// `1 - exp(-mass * u_max(r_mu, t_end))` on a punctured domain.
pub fn hitting_probability(
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    r_mu: f64,
    mass: f64,
    t_end: f64,
    opts: &MaximalOptions,
) -> Result<HittingEstimate> {
    precondition(spec.dimension >= 2, || "hitting a point needs dimension >= 2".into())?;
    precondition(matches!(spec.domain, Domain::Punctured { .. }), || {
        "hitting a point needs a punctured domain".into()
    })?;
    precondition(r_mu > 0.0, || "the initial atom must sit away from the puncture".into())?;
    precondition(mass >= 0.0 && mass.is_finite(), || format!("mass {mass} must be finite and >= 0"))?;
    if mass == 0.0 {
        return Ok(HittingEstimate { probability: 0.0, u_max: 0.0, verdict: PdeVerdict::Unknown, report: None });
    }
    let opts = MaximalOptions { probe_r: r_mu, probe_t: t_end, ..opts.clone() };
    let report = maximal_solution(spec, triplet, &opts)?;
    let u = report.probe();
    Ok(HittingEstimate { probability: -(-mass * u).exp_m1(), u_max: u, verdict: report.verdict, report: Some(report) })
}

use serde::{Deserialize, Serialize};

use super::grid_function::{BoundaryCondition, GridFunction, Provenance};
use crate::branching::BranchingTriplet;
use crate::error::{precondition, Error, Result};
use crate::generator::{GeneratorSpec, RadialFunction};
use crate::grid::{Inner, RadialGrid, Spacing};
use crate::tridiag::{logaddexp, solve_log};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub spacing: Spacing,
    pub dt_initial: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Target change of `ln u` per step.
    pub delta: f64,
    /// Redo steps whose change of `ln u` exceeds `4 * delta`.
    pub reject: bool,
    /// Constant step; disables adaptivity.
    pub fixed_dt: Option<f64>,
    /// Nodes with `u` below `active_floor * alpha^(-1/(p-1))` do not steer
    /// the step size.
    pub active_floor: f64,
    /// Caps the spacing at `resolution / (1 + |(ln alpha)'| / (p - 1))`.
    pub resolution: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            spacing: Spacing::default(),
            dt_initial: 1e-8,
            dt_max: 0.02,
            dt_min: 1e-14,
            delta: 0.1,
            reject: true,
            fixed_dt: None,
            active_floor: 1e-8,
            resolution: None,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        self.spacing.validate()?;
        precondition(self.dt_min > 0.0 && self.dt_initial >= self.dt_min && self.dt_max >= self.dt_initial, || {
            "need 0 < dt_min <= dt_initial <= dt_max".into()
        })?;
        precondition(self.delta > 0.0, || "delta must be positive".into())?;
        if let Some(dt) = self.fixed_dt {
            precondition(dt > 0.0, || "fixed_dt must be positive".into())?;
        }
        if let Some(c) = self.resolution {
            precondition(c > 0.0, || "resolution must be positive".into())?;
        }
        Ok(())
    }

    /// Spacing and time step divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.spacing.h_origin /= factor;
        out.spacing.growth /= factor;
        out.spacing.h_max /= factor;
        out.fixed_dt = self.fixed_dt.map(|dt| dt / factor);
        out.resolution = self.resolution.map(|c| c / factor);
        out
    }
}

/// Truncation, boundary data and output times of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyProblem {
    /// Outer radius of the computational domain.
    pub radius: f64,
    pub outer: BoundaryCondition,
    /// Used when the domain has an inner radius.
    #[serde(default = "zero_bc")]
    pub inner: BoundaryCondition,
    pub t_end: f64,
    #[serde(default)]
    pub record_times: Vec<f64>,
    /// Radii that must be grid points.
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

fn zero_bc() -> BoundaryCondition {
    BoundaryCondition::Zero
}

impl CauchyProblem {
    pub fn new(radius: f64, outer: BoundaryCondition, t_end: f64) -> Self {
        CauchyProblem {
            radius,
            outer,
            inner: BoundaryCondition::Zero,
            t_end,
            record_times: Vec::new(),
            breakpoints: Vec::new(),
        }
    }

    pub fn with_inner(mut self, inner: BoundaryCondition) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_records(mut self, times: Vec<f64>) -> Self {
        self.record_times = times;
        self
    }

    pub fn with_breakpoints(mut self, radii: Vec<f64>) -> Self {
        self.breakpoints = radii;
        self
    }
}

/// Discretized operator and coefficients on a fixed grid.
struct System {
    grid: RadialGrid,
    lo: Vec<f64>,
    hi: Vec<f64>,
    beta: Vec<f64>,
    ln_alpha: Vec<f64>,
    p: f64,
    ln_left: Option<f64>,
    ln_right: Option<f64>,
}

impl System {
    fn offset(&self) -> usize {
        self.grid.offset()
    }

    fn unknowns(&self) -> std::ops::Range<usize> {
        self.offset()..self.offset() + self.grid.len()
    }

    /// One backward Euler step with one Newton linearization of the
    /// absorption about the current state `u`, `a = alpha u^(p-1)`:
    /// `(1 - tau L + tau p a + tau beta^-) u_new = (1 + tau beta^+ + tau (p-1) a) u`.
    /// The matrix is an M-matrix and the right side is nonnegative, so
    /// nonnegative data stay nonnegative and zero data stay exactly zero.
    fn step(&self, v: &mut [f64], tau: f64, ws: &mut Workspace) {
        let n = self.grid.len();
        let off = self.offset();
        let p1 = self.p - 1.0;
        for k in 0..n {
            let vi = v[off + k];
            let absorb = if vi == f64::NEG_INFINITY { 0.0 } else { (self.ln_alpha[k] + p1 * vi).exp() };
            let b = self.beta[k];
            ws.a[k] = -tau * self.lo[k];
            ws.c[k] = -tau * self.hi[k];
            ws.b[k] = 1.0 + tau * (self.lo[k] + self.hi[k] + self.p * absorb + (-b).max(0.0));
            ws.ld[k] = vi + (tau * (b.max(0.0) + p1 * absorb)).ln_1p();
        }
        if let Some(l) = self.ln_left {
            if self.lo[0] > 0.0 {
                ws.ld[0] = logaddexp(ws.ld[0], (tau * self.lo[0]).ln() + l);
            }
        }
        if let Some(r) = self.ln_right {
            if self.hi[n - 1] > 0.0 {
                ws.ld[n - 1] = logaddexp(ws.ld[n - 1], (tau * self.hi[n - 1]).ln() + r);
            }
        }
        solve_log(&ws.a, &ws.b, &ws.c, &mut ws.ld, &mut ws.scratch);
        v[off..off + n].copy_from_slice(&ws.ld[..n]);
    }

    /// Fills the boundary points of a full row.
    fn close(&self, v: &mut [f64]) {
        let last = v.len() - 1;
        v[last] = self.ln_right.unwrap_or(v[last - 1]);
        if self.offset() == 1 {
            v[0] = self.ln_left.unwrap_or(v[1]);
        }
    }
}

struct Workspace {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    ld: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { a: vec![0.0; n], b: vec![0.0; n], c: vec![0.0; n], ld: vec![0.0; n], scratch: vec![0.0; n] }
    }
}

fn ln_alpha_slope(alpha: &RadialFunction, r: f64) -> f64 {
    let h = 1e-4 * (1.0 + r);
    let lo = (r - h).max(0.0);
    (alpha.eval_ln(r + h) - alpha.eval_ln(lo)) / (r + h - lo)
}

fn build_system(
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    problem: &CauchyProblem,
    params: &SolverParams,
) -> Result<System> {
    let inner = match spec.domain.inner_radius() {
        Some(e) => Inner::Boundary(e),
        None => Inner::Origin,
    };
    if let Some(o) = spec.domain.outer_radius() {
        precondition(problem.radius <= o, || format!("radius {} exceeds the domain radius {o}", problem.radius))?;
    }
    let p = triplet.p;
    let limit = |r: f64| match params.resolution {
        Some(c) => c / (1.0 + ln_alpha_slope(&triplet.alpha, r).abs() / (p - 1.0)),
        None => f64::INFINITY,
    };
    let grid = RadialGrid::build(spec.dimension, inner, problem.radius, &params.spacing, &problem.breakpoints, &limit)?;
    precondition(!grid.is_empty(), || "grid has no interior nodes".into())?;
    let st = grid.stencil(&|r| spec.a(r), &|r| spec.b(r));
    let (mut lo, mut hi) = (st.lo, st.hi);
    let nodes = grid.nodes();
    let beta: Vec<f64> = nodes.iter().map(|&r| triplet.beta(r)).collect();
    let ln_alpha: Vec<f64> = nodes.iter().map(|&r| triplet.alpha.eval_ln(r)).collect();
    if let Some((k, _)) = beta.iter().enumerate().find(|(_, b)| !b.is_finite()) {
        return Err(Error::Coefficient(format!("beta({}) is not finite", nodes[k])));
    }
    if let Some((k, _)) = ln_alpha.iter().enumerate().find(|(_, a)| !a.is_finite()) {
        return Err(Error::Coefficient(format!("alpha({}) is not positive and finite", nodes[k])));
    }
    if lo.iter().chain(&hi).any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Coefficient("diffusion is not positive on the grid".into()));
    }
    let outer_r = grid.outer();
    let ln_right = problem.outer.ln_value(triplet.alpha.eval_ln(outer_r), p);
    let n = hi.len();
    if ln_right.is_none() {
        hi[n - 1] = 0.0;
    }
    let ln_left = match inner {
        Inner::Boundary(e) => {
            let l = problem.inner.ln_value(triplet.alpha.eval_ln(e), p);
            if l.is_none() {
                lo[0] = 0.0;
            }
            l
        }
        Inner::Origin => None,
    };
    Ok(System { grid, lo, hi, beta, ln_alpha, p, ln_left, ln_right })
}

/// Solves `u_t = Lu + beta u - alpha u^p`, `u(0) = f` on the radial domain
/// of `spec` truncated at `problem.radius`.
///
/// Steps are linearly implicit and adaptive in the change of `ln u`; see
/// [`SolverParams`].
pub fn solve_cauchy(
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    f: &RadialFunction,
    problem: &CauchyProblem,
    params: &SolverParams,
) -> Result<GridFunction> {
    spec.validate()?;
    precondition(triplet.p > 1.0 && triplet.p <= 2.0, || format!("p = {} is outside (1, 2]", triplet.p))?;
    params.validate()?;
    problem.outer.validate()?;
    problem.inner.validate()?;
    precondition(problem.t_end > 0.0, || "t_end must be positive".into())?;
    let sys = build_system(spec, triplet, problem, params)?;

    let mut records: Vec<f64> = problem.record_times.iter().copied().filter(|&t| t > 0.0).collect();
    precondition(records.iter().all(|&t| t <= problem.t_end), || "record times must not exceed t_end".into())?;
    records.push(problem.t_end);
    records.sort_by(f64::total_cmp);
    records.dedup();

    let points = sys.grid.points().to_vec();
    let mut v = vec![f64::NEG_INFINITY; points.len()];
    let mut ln_sup_f = f64::NEG_INFINITY;
    for i in sys.unknowns() {
        let fi = f.eval(points[i]);
        precondition(fi >= 0.0 && fi.is_finite(), || {
            format!("initial data f({}) = {fi} is not finite and >= 0", points[i])
        })?;
        v[i] = fi.ln();
        ln_sup_f = ln_sup_f.max(v[i]);
    }
    sys.close(&mut v);

    let ln_bound0 = [ln_sup_f, sys.ln_left.unwrap_or(f64::NEG_INFINITY), sys.ln_right.unwrap_or(f64::NEG_INFINITY)]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let beta_plus = sys.beta.iter().copied().fold(0.0, f64::max);
    let slack = 1e-9 * ln_bound0.abs().max(1.0);

    let mut t_nodes = vec![0.0];
    let mut log_values = v.clone();
    let ln_floor: Vec<f64> = {
        let base = params.active_floor.ln();
        let mut out = vec![f64::INFINITY; points.len()];
        for (k, i) in sys.unknowns().enumerate() {
            out[i] = base - sys.ln_alpha[k] / (sys.p - 1.0);
        }
        out
    };
    let mut ws = Workspace::new(sys.grid.len());
    let mut trial = v.clone();
    let mut t = 0.0;
    let mut dt = params.fixed_dt.unwrap_or(params.dt_initial);
    let mut steps = 0;

    for &target in &records {
        while t < target {
            let mut h = dt.min(target - t);
            if target - (t + h) <= 1e-12 * target {
                h = target - t;
            }
            let truncated = h < dt;
            trial.copy_from_slice(&v);
            sys.step(&mut trial, h, &mut ws);
            let change = sys
                .unknowns()
                .filter(|&i| v[i] > ln_floor[i] && trial[i] > ln_floor[i])
                .map(|i| (trial[i] - v[i]).abs())
                .fold(0.0, f64::max);
            if params.fixed_dt.is_none() && params.reject && change > 4.0 * params.delta {
                if h <= params.dt_min {
                    return Err(Error::StepSize(format!("step size fell below {} at t = {t}", params.dt_min)));
                }
                dt = (0.5 * h).max(params.dt_min);
                continue;
            }
            std::mem::swap(&mut v, &mut trial);
            t = if h == target - t { target } else { t + h };
            steps += 1;

            let bound = ln_bound0 + t * beta_plus + slack;
            if let Some(i) = sys.unknowns().find(|&i| v[i] > bound || v[i].is_nan()) {
                return Err(Error::StepSize(format!(
                    "instability at r = {}, t = {t}: ln u = {} exceeds the bound {bound}",
                    points[i], v[i]
                )));
            }
            if params.fixed_dt.is_none() {
                let factor = if change > 0.0 { (params.delta / change).clamp(0.5, 1.25) } else { 1.25 };
                let base = if truncated { dt } else { h };
                dt = (base * factor).clamp(params.dt_min, params.dt_max);
            }
        }
        sys.close(&mut v);
        t_nodes.push(target);
        log_values.extend_from_slice(&v);
    }

    Ok(GridFunction {
        r_nodes: points,
        t_nodes,
        log_values,
        outer: problem.outer,
        inner: spec.domain.inner_radius().map(|_| problem.inner),
        clipped: 0,
        steps,
        metadata: Some(Provenance { spec: spec.clone(), triplet: triplet.clone() }),
    })
}

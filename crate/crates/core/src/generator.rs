//! The diffusion operator `L = A(r)Δ + b(r)∂_r` on radial domains.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::expr::{Expr, Var};
use crate::grid::{Inner, RadialGrid, Spacing};
use crate::tridiag;

/// A scalar function of the radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadialFunction {
    /// `scale * (1 + r)^exponent`
    PowerLaw {
        scale: f64,
        exponent: f64,
    },
    /// Piecewise linear through `(r, values)`, flat outside the table.
    Tabulated {
        r: Vec<f64>,
        values: Vec<f64>,
    },
    Expr {
        expr: Expr,
    },
    /// `height * max(0, 1 - r/width)`
    Hat {
        height: f64,
        width: f64,
    },
}

impl RadialFunction {
    pub fn constant(c: f64) -> Self {
        RadialFunction::PowerLaw { scale: c, exponent: 0.0 }
    }

    pub fn power_law(scale: f64, exponent: f64) -> Self {
        RadialFunction::PowerLaw { scale, exponent }
    }

    pub fn expr(src: &str) -> Result<Self> {
        Ok(RadialFunction::Expr { expr: Expr::parse(src)? })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialFunction::PowerLaw { scale, exponent } => {
                if *exponent == 0.0 {
                    *scale
                } else {
                    scale * (1.0 + r).powf(*exponent)
                }
            }
            RadialFunction::Tabulated { r: xs, values } => {
                if r <= xs[0] {
                    return values[0];
                }
                let n = xs.len();
                if r >= xs[n - 1] {
                    return values[n - 1];
                }
                let j = xs.partition_point(|&x| x <= r);
                let w = (r - xs[j - 1]) / (xs[j] - xs[j - 1]);
                values[j - 1] + w * (values[j] - values[j - 1])
            }
            RadialFunction::Expr { expr } => expr.at(r),
            RadialFunction::Hat { height, width } => height * (1.0 - r / width).max(0.0),
        }
    }

    pub fn eval_ln(&self, r: f64) -> f64 {
        match self {
            RadialFunction::PowerLaw { scale, exponent } => scale.ln() + exponent * r.ln_1p(),
            RadialFunction::Expr { expr } => expr.eval_ln(r, 0.0),
            t => t.eval(r).ln(),
        }
    }

    /// Power-law exponent, when the function is stored in that form.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            RadialFunction::PowerLaw { exponent, .. } => Some(*exponent),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            RadialFunction::PowerLaw { exponent, .. } => *exponent == 0.0,
            RadialFunction::Tabulated { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
            RadialFunction::Expr { expr } => !expr.depends_on(Var::R),
            RadialFunction::Hat { height, .. } => *height == 0.0,
        }
    }

    pub fn to_expr(&self) -> Option<Expr> {
        match self {
            RadialFunction::PowerLaw { scale, exponent } => {
                Some(Expr::c(*scale).mul(Expr::c(1.0).add(Expr::r()).powf(*exponent)))
            }
            RadialFunction::Expr { expr } => Some(expr.clone()),
            RadialFunction::Tabulated { .. } | RadialFunction::Hat { .. } => None,
        }
    }

    fn validate_table(&self) -> Result<()> {
        if let RadialFunction::Tabulated { r, values } = self {
            precondition(!r.is_empty() && r.len() == values.len(), || {
                "tabulated function needs equal, nonempty r and values".into()
            })?;
            precondition(r.windows(2).all(|w| w[1] > w[0]), || "tabulated radii must be strictly increasing".into())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Full,
    Punctured { inner: f64 },
    Ball { outer: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Domain {
    pub fn inner_radius(&self) -> Option<f64> {
        match self {
            Domain::Punctured { inner } | Domain::Annulus { inner, .. } => Some(*inner),
            _ => None,
        }
    }

    pub fn outer_radius(&self) -> Option<f64> {
        match self {
            Domain::Ball { outer } | Domain::Annulus { outer, .. } => Some(*outer),
            _ => None,
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        self.inner_radius().is_none_or(|e| r > e) && self.outer_radius().is_none_or(|o| r < o)
    }

    fn inner_grid(&self) -> Inner {
        match self.inner_radius() {
            Some(e) => Inner::Boundary(e),
            None => Inner::Origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub dimension: u32,
    pub diffusion: RadialFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<RadialFunction>,
    #[serde(default = "full")]
    pub domain: Domain,
}

fn full() -> Domain {
    Domain::Full
}

impl GeneratorSpec {
    pub fn new(dimension: u32, diffusion: RadialFunction) -> Self {
        GeneratorSpec { dimension, diffusion, drift: None, domain: Domain::Full }
    }

    /// `A(r) = (1 + r)^m`.
    pub fn power_law(dimension: u32, m: f64) -> Self {
        Self::new(dimension, RadialFunction::power_law(1.0, m))
    }

    /// `½Δ`.
    pub fn half_laplacian(dimension: u32) -> Self {
        Self::new(dimension, RadialFunction::constant(0.5))
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_drift(mut self, drift: RadialFunction) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn a(&self, r: f64) -> f64 {
        self.diffusion.eval(r)
    }

    pub fn b(&self, r: f64) -> f64 {
        self.drift.as_ref().map_or(0.0, |b| b.eval(r))
    }

    pub fn validate(&self) -> Result<()> {
        precondition(self.dimension >= 1, || "dimension must be at least 1".into())?;
        self.diffusion.validate_table()?;
        if let Some(b) = &self.drift {
            b.validate_table()?;
        }
        let (lo, hi) = match self.domain {
            Domain::Full => (0.0, 1e3),
            Domain::Punctured { inner } => {
                precondition(self.dimension >= 2, || "punctured domains require dimension >= 2".into())?;
                precondition(inner > 0.0, || "inner radius must be positive".into())?;
                (inner, inner.max(1.0) * 1e3)
            }
            Domain::Ball { outer } => {
                precondition(outer > 0.0, || "ball radius must be positive".into())?;
                (0.0, outer)
            }
            Domain::Annulus { inner, outer } => {
                precondition(inner > 0.0 && outer > inner, || "annulus needs 0 < inner < outer".into())?;
                (inner, outer)
            }
        };
        if let RadialFunction::PowerLaw { scale, .. } = self.diffusion {
            if scale <= 0.0 {
                return Err(Error::Coefficient(format!("A = {scale}(1+r)^m is not positive")));
            }
            return Ok(());
        }
        for k in 0..=256 {
            let r = lo + (hi - lo) * k as f64 / 256.0;
            let a = self.a(r);
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Coefficient(format!("A({r}) = {a} is not positive")));
            }
        }
        Ok(())
    }
}

/// Radial coefficients `p`, `q` with `Lu = p u'' + q u'` on radial functions.
#[derive(Debug, Clone)]
pub struct Radial {
    spec: GeneratorSpec,
    /// `q` has a `1/r` singularity at a grid point (`d >= 2` and the domain
    /// contains the origin).
    pub singular_origin: bool,
}

impl Radial {
    pub fn p(&self, r: f64) -> f64 {
        self.spec.a(r)
    }

    pub fn q(&self, r: f64) -> f64 {
        let d = self.spec.dimension as f64;
        let geometric = if self.spec.dimension == 1 { 0.0 } else { self.spec.a(r) * (d - 1.0) / r };
        geometric + self.spec.b(r)
    }

    /// Closed forms of `(p, q)`, when the coefficients have them.
    pub fn exprs(&self) -> Option<(Expr, Expr)> {
        let p = self.spec.diffusion.to_expr()?;
        let d = self.spec.dimension as f64;
        let mut q = p.clone().mul(Expr::c(d - 1.0)).div(Expr::r());
        if let Some(b) = &self.spec.drift {
            q = q.add(b.to_expr()?);
        }
        Some((p, q))
    }
}

pub fn radialize(spec: &GeneratorSpec) -> Result<Radial> {
    spec.validate()?;
    Ok(Radial { singular_origin: spec.dimension >= 2 && spec.domain.inner_radius().is_none(), spec: spec.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExitTimeOptions {
    /// Convergence tolerance on successive `g_R(r0)`.
    pub tol_g: f64,
    /// Number of consecutive small differences required.
    pub consecutive: usize,
    pub spacing: Spacing,
}

impl Default for ExitTimeOptions {
    fn default() -> Self {
        ExitTimeOptions {
            tol_g: 1e-3,
            consecutive: 2,
            spacing: Spacing { h_origin: 0.01, growth: 0.02, h_max: 1e12, h_min: 1e-12 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeRow {
    pub r: f64,
    pub truncation: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionReport {
    pub explosive: bool,
    /// Samples of `g` on the last truncation used.
    pub mean_exit_time_at: Vec<(f64, f64)>,
    pub sup_g: f64,
    pub converged: bool,
    pub truncation_radii_used: Vec<f64>,
    /// `g_R(r0)` for every truncation solved.
    pub trace: Vec<ExitTimeRow>,
}

/// Truncations `10*max(1, r0) * 2^k` up to `1e8`.
pub fn default_truncations(r0: f64) -> Vec<f64> {
    let mut out = vec![10.0 * r0.max(1.0)];
    while *out.last().unwrap() < 1e8 {
        out.push(out.last().unwrap() * 2.0);
    }
    out
}

/// Solves `Lg = -1` with `g = 0` on the outer boundary of each truncated
/// domain and watches `g_R(r0)` as `R` grows. The limit is the expected
/// explosion time; a finite limit means the diffusion explodes.
pub fn mean_exit_time(
    spec: &GeneratorSpec,
    r0: f64,
    truncations: &[f64],
    opts: &ExitTimeOptions,
) -> Result<ExplosionReport> {
    let rad = radialize(spec)?;
    precondition(!truncations.is_empty(), || "no truncation radii".into())?;
    precondition(truncations.windows(2).all(|w| w[1] > w[0]), || "truncations must be strictly increasing".into())?;
    precondition(spec.domain.contains(r0) || (r0 == 0.0 && spec.domain.inner_radius().is_none()), || {
        format!("r0 = {r0} is outside the domain")
    })?;
    precondition(r0 < truncations[0], || {
        format!("r0 = {r0} must lie inside the smallest truncation {}", truncations[0])
    })?;
    opts.spacing.validate()?;

    let mut radii: Vec<f64> = match spec.domain.outer_radius() {
        Some(o) => {
            let mut v: Vec<f64> = truncations.iter().copied().filter(|&r| r < o).collect();
            v.push(o);
            v
        }
        None => truncations.to_vec(),
    };
    radii.dedup();
    let mut breaks = radii.clone();
    if r0 > 0.0 {
        breaks.push(r0);
    }
    let outer = *radii.last().unwrap();
    let full =
        RadialGrid::build(spec.dimension, spec.domain.inner_grid(), outer, &opts.spacing, &breaks, &|_| f64::INFINITY)?;

    let mut trace = Vec::new();
    let mut used = Vec::new();
    let mut last: Option<(RadialGrid, Vec<f64>)> = None;
    let mut prev = None;
    let mut small_run = 0;
    let mut converged = false;
    for &big_r in &radii {
        let grid = full.prefix(big_r).ok_or_else(|| Error::Consistency(format!("{big_r} not on grid")))?;
        let g = solve_exit_time(&rad, &grid)?;
        let v = grid.interp(&g, r0);
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Coefficient(format!("g_R({r0}) = {v} at R = {big_r}")));
        }
        trace.push(ExitTimeRow { r: r0, truncation: big_r, g: v });
        used.push(big_r);
        if let Some(p) = prev {
            if v < p * (1.0 - 1e-9) - 1e-12 {
                return Err(Error::Consistency(format!("g_R({r0}) decreased from {p} to {v} at R = {big_r}")));
            }
            if v - p < opts.tol_g {
                small_run += 1;
            } else {
                small_run = 0;
            }
        }
        prev = Some(v);
        last = Some((grid, g));
        if small_run >= opts.consecutive {
            converged = true;
            break;
        }
    }
    let bounded = spec.domain.outer_radius().is_some();
    let explosive = converged || bounded;
    let (grid, g) = last.unwrap();
    let sup = g.iter().copied().fold(0.0, f64::max);
    let mut samples = vec![(r0, grid.interp(&g, r0))];
    let lo = grid.points()[0].max(1e-2);
    let hi = grid.outer();
    for k in 0..=16 {
        let r = lo * (hi / lo).powf(k as f64 / 16.0);
        samples.push((r, grid.interp(&g, r)));
    }
    Ok(ExplosionReport {
        explosive,
        mean_exit_time_at: samples,
        sup_g: if explosive { sup } else { f64::INFINITY },
        converged: converged || bounded,
        truncation_radii_used: used,
        trace,
    })
}

/// `g` on all grid points with zero Dirichlet data.
fn solve_exit_time(rad: &Radial, grid: &RadialGrid) -> Result<Vec<f64>> {
    let st = grid.stencil(&|r| rad.spec.a(r), &|r| rad.spec.b(r));
    let n = grid.len();
    let a: Vec<f64> = st.lo.iter().map(|l| -l).collect();
    let c: Vec<f64> = st.hi.iter().map(|h| -h).collect();
    let b: Vec<f64> = st.lo.iter().zip(&st.hi).map(|(l, h)| l + h).collect();
    if b.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Coefficient("non-positive diffusion on the grid".into()));
    }
    let mut x = vec![1.0; n];
    let mut scratch = vec![0.0; n];
    tridiag::solve(&a, &b, &c, &mut x, &mut scratch);
    let mut g = vec![0.0; grid.points().len()];
    g[grid.offset()..grid.offset() + n].copy_from_slice(&x);
    Ok(g)
}

/// One diffusion step in Cartesian coordinates, with the adaptive
/// substepping used by both paths and particle clouds.
#[derive(Debug, Clone)]
pub struct DiffusionKernel {
    spec: GeneratorSpec,
    constant_a: Option<f64>,
    pub escape_radius: f64,
    /// Discrete monitoring of the boundaries is corrected with the Brownian
    /// bridge crossing probability.
    pub bridge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Motion {
    Inside,
    /// Reached the inner boundary.
    Absorbed,
    /// Left the outer boundary of a bounded domain.
    Exited,
    /// Radius beyond the escape radius, or the step size underflowed.
    Escaped,
}

impl DiffusionKernel {
    pub fn new(spec: &GeneratorSpec) -> Result<Self> {
        spec.validate()?;
        Ok(DiffusionKernel {
            constant_a: spec.diffusion.is_constant().then(|| spec.a(0.0)),
            spec: spec.clone(),
            escape_radius: 1e6,
            bridge: true,
        })
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension as usize
    }

    fn a(&self, r: f64) -> f64 {
        self.constant_a.unwrap_or_else(|| self.spec.a(r))
    }

    /// Advances `x` by `dt`. Returns the motion outcome and the time actually
    /// spent, which is less than `dt` when the path stopped early.
    pub fn advance<R: Rng + ?Sized>(&self, x: &mut [f64], dt: f64, rng: &mut R) -> (Motion, f64) {
        let mut t = 0.0;
        let drift_free = self.spec.drift.is_none();
        if drift_free && self.constant_a.is_some() && self.spec.domain == Domain::Full {
            let s = (2.0 * self.a(0.0) * dt).sqrt();
            for xi in x.iter_mut() {
                *xi += s * rng.sample::<f64, _>(StandardNormal);
            }
            return (Motion::Inside, dt);
        }
        let inner = self.spec.domain.inner_radius();
        let outer = self.spec.domain.outer_radius();
        while t < dt {
            let r = norm(x);
            let a = self.a(r);
            let h = (dt * (r * r).max(1.0) / a).min(dt).min(dt - t);
            if t + h == t {
                return (Motion::Escaped, t);
            }
            let s = (2.0 * a * h).sqrt();
            let b = if drift_free { 0.0 } else { self.spec.b(r) };
            let radial = if r > 0.0 { b * h / r } else { 0.0 };
            let before = r;
            for xi in x.iter_mut() {
                *xi += radial * *xi + s * rng.sample::<f64, _>(StandardNormal);
            }
            t += h;
            let after = norm(x);
            if after > self.escape_radius {
                return (Motion::Escaped, t);
            }
            if let Some(e) = inner {
                if after <= e || (self.bridge && crossed(before - e, after - e, a, h, rng)) {
                    return (Motion::Absorbed, t);
                }
            }
            if let Some(o) = outer {
                if after >= o || (self.bridge && crossed(o - before, o - after, a, h, rng)) {
                    return (Motion::Exited, t);
                }
            }
        }
        (Motion::Inside, t)
    }
}

fn crossed<R: Rng + ?Sized>(d0: f64, d1: f64, a: f64, h: f64, rng: &mut R) -> bool {
    let p = (-d0 * d1 / (a * h)).exp();
    rng.random::<f64>() < p
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathOptions {
    pub dt: f64,
    pub t_end: f64,
    pub escape_radius: f64,
    /// Record `(t, |x|)` every this many steps; 0 records nothing.
    pub record_every: usize,
    pub bridge: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { dt: 1e-3, t_end: 1.0, escape_radius: 1e6, record_every: 0, bridge: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub motion: Motion,
    /// Time of absorption, exit or escape.
    pub stopped_at: Option<f64>,
    pub final_position: Vec<f64>,
    pub path: Vec<(f64, f64)>,
}

pub fn simulate_path<R: Rng + ?Sized>(
    spec: &GeneratorSpec,
    x0: &[f64],
    opts: &PathOptions,
    rng: &mut R,
) -> Result<PathOutcome> {
    precondition(opts.dt > 0.0, || format!("dt must be positive, got {}", opts.dt))?;
    precondition(opts.t_end >= 0.0, || "t_end must be nonnegative".into())?;
    precondition(x0.len() == spec.dimension as usize, || {
        format!("x0 has {} coordinates, dimension is {}", x0.len(), spec.dimension)
    })?;
    let r0 = norm(x0);
    precondition(spec.domain.contains(r0) || (r0 == 0.0 && spec.domain.inner_radius().is_none()), || {
        format!("x0 at radius {r0} is outside the domain")
    })?;
    let mut kernel = DiffusionKernel::new(spec)?;
    kernel.escape_radius = opts.escape_radius;
    kernel.bridge = opts.bridge;
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut path = Vec::new();
    if opts.record_every > 0 {
        path.push((0.0, r0));
    }
    let mut step = 0usize;
    while t < opts.t_end {
        let h = opts.dt.min(opts.t_end - t);
        let (motion, spent) = kernel.advance(&mut x, h, rng);
        t += spent;
        step += 1;
        if opts.record_every > 0 && (step % opts.record_every == 0 || motion != Motion::Inside) {
            path.push((t, norm(&x)));
        }
        if motion != Motion::Inside {
            return Ok(PathOutcome { motion, stopped_at: Some(t), final_position: x, path });
        }
        if spent < h {
            return Ok(PathOutcome { motion: Motion::Escaped, stopped_at: Some(t), final_position: x, path });
        }
    }
    Ok(PathOutcome { motion: Motion::Inside, stopped_at: None, final_position: x, path })
}

/// The radial operator rewritten on the line through `z = 1/r - r`, as
/// `½a(z) f'' + b(z) f'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGenerator {
    pub source: GeneratorSpec,
}

impl LineGenerator {
    pub fn z_of_r(r: f64) -> f64 {
        1.0 / r - r
    }

    pub fn r_of_z(z: f64) -> f64 {
        let s = (z * z + 4.0).sqrt();
        if z > 0.0 {
            2.0 / (s + z)
        } else {
            0.5 * (s - z)
        }
    }

    pub fn a(&self, z: f64) -> f64 {
        let r = Self::r_of_z(z);
        let dphi = -1.0 / (r * r) - 1.0;
        2.0 * self.source.a(r) * dphi * dphi
    }

    pub fn b(&self, z: f64) -> f64 {
        let r = Self::r_of_z(z);
        let dphi = -1.0 / (r * r) - 1.0;
        let ddphi = 2.0 / (r * r * r);
        let d = self.source.dimension as f64;
        let q = self.source.a(r) * (d - 1.0) / r + self.source.b(r);
        self.source.a(r) * ddphi + q * dphi
    }
}

pub fn change_of_variables(spec: &GeneratorSpec) -> Result<LineGenerator> {
    spec.validate()?;
    if spec.domain.outer_radius().is_some() {
        return Err(Error::Domain("the map needs a radial operator on all of (0, inf)".into()));
    }
    Ok(LineGenerator { source: spec.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn radial_laplacian_coefficients() {
        let r = radialize(&GeneratorSpec::new(1, RadialFunction::constant(1.0))).unwrap();
        assert_eq!((r.p(0.7), r.q(0.7)), (1.0, 0.0));
        assert!(!r.singular_origin);
        let r = radialize(&GeneratorSpec::new(3, RadialFunction::constant(1.0))).unwrap();
        assert_eq!(r.p(2.0), 1.0);
        assert!((r.q(2.0) - 1.0).abs() < 1e-15);
        assert!(r.singular_origin);
    }

    #[test]
    fn power_law_exponent_is_stored_exactly() {
        let s = GeneratorSpec::power_law(3, 2.5);
        assert_eq!(s.diffusion.exponent(), Some(2.5));
    }

    #[test]
    fn validation() {
        assert!(GeneratorSpec::power_law(0, 1.0).validate().is_err());
        let s = GeneratorSpec::power_law(1, 1.0).with_domain(Domain::Punctured { inner: 0.1 });
        assert!(s.validate().is_err());
        let s = GeneratorSpec::new(2, RadialFunction::expr("1 - r").unwrap());
        assert!(matches!(s.validate(), Err(Error::Coefficient(_))));
    }

    #[test]
    fn zero_dt_is_rejected() {
        let s = GeneratorSpec::new(1, RadialFunction::constant(1.0));
        let opts = PathOptions { dt: 0.0, ..Default::default() };
        assert!(simulate_path(&s, &[0.0], &opts, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn change_of_variables_fixed_point_and_inverse() {
        assert_eq!(LineGenerator::z_of_r(1.0), 0.0);
        for z in [-1e6, -3.0, 0.0, 0.5, 40.0, 1e6] {
            let r = LineGenerator::r_of_z(z);
            assert!((LineGenerator::z_of_r(r) - z).abs() <= 1e-9 * (1.0 + z.abs()));
        }
    }
}

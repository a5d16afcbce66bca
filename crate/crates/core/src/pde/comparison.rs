use serde::{Deserialize, Serialize};

use crate::branching::BranchingTriplet;
use crate::csp::beta0;
use crate::error::{precondition, Error, Result};
use crate::expr::{Expr, Var};
use crate::generator::{radialize, GeneratorSpec};

/// Explicit functions used as barriers for the semilinear equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ComparisonFunction {
    /// `(1+r)^a (R-r)^(-a) exp(K(t+1))`, `a = 2/(p-1)`, on the ball `r < R`.
    MRK { radius: f64, k: f64, p: f64 },
    /// `((r-eps)(R-r))^(-a) (1+r)^a (1 + eps^l R^a / r^l) exp(gamma(t+1))`
    /// on the annulus `eps < r < R`.
    PsiREps { radius: f64, eps: f64, l: f64, gamma: f64, p: f64 },
    /// `kappa^(1/(p-1)) r^(-2/(p-1))`, stationary for `½Δ` with
    /// `beta = (beta0 + kappa)/r^2`.
    StationaryW { kappa: f64, p: f64, d: u32 },
}

fn bad(name: &'static str, constraint: impl Into<String>) -> Error {
    Error::Parameter { name, constraint: constraint.into() }
}

impl ComparisonFunction {
    pub fn name(&self) -> &'static str {
        match self {
            ComparisonFunction::MRK { .. } => "M_RK",
            ComparisonFunction::PsiREps { .. } => "psi_R_eps",
            ComparisonFunction::StationaryW { .. } => "stationary_W",
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            ComparisonFunction::MRK { p, .. }
            | ComparisonFunction::PsiREps { p, .. }
            | ComparisonFunction::StationaryW { p, .. } => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 1.0 && p <= 2.0) {
            return Err(bad("p", format!("p = {p} must lie in (1, 2]")));
        }
        match *self {
            ComparisonFunction::MRK { radius, k, .. } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(bad("R", format!("R = {radius} must be positive")));
                }
                if !k.is_finite() {
                    return Err(bad("K", "K must be finite"));
                }
            }
            ComparisonFunction::PsiREps { radius, eps, l, gamma, .. } => {
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(bad("eps", format!("eps = {eps} must lie in (0, 1)")));
                }
                if !(radius > 1.0 && radius.is_finite()) {
                    return Err(bad("R", format!("R = {radius} must exceed 1")));
                }
                if !(l > 0.0 && l <= 1.0) {
                    return Err(bad("l", format!("l = {l} must lie in (0, 1]")));
                }
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(bad("gamma", format!("gamma = {gamma} must be positive")));
                }
            }
            ComparisonFunction::StationaryW { kappa, d, .. } => {
                let b0 = beta0(d, p).map_err(|e| bad("d", e.to_string()))?;
                if b0 >= 0.0 {
                    return Err(bad("d", format!("d = {d} must be below the critical dimension 2p/(p-1)")));
                }
                if !(kappa > 0.0 && kappa <= -b0) {
                    return Err(bad("kappa", format!("kappa = {kappa} must lie in (0, {}]", -b0)));
                }
            }
        }
        Ok(())
    }

    /// Open radial interval on which the function is finite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ComparisonFunction::MRK { radius, .. } => (f64::NEG_INFINITY, radius),
            ComparisonFunction::PsiREps { radius, eps, .. } => (eps, radius),
            ComparisonFunction::StationaryW { .. } => (0.0, f64::INFINITY),
        }
    }

    pub fn expr(&self) -> Result<Expr> {
        self.validate()?;
        let a = 2.0 / (self.p() - 1.0);
        let one_plus_r = Expr::c(1.0).add(Expr::r());
        Ok(match *self {
            ComparisonFunction::MRK { radius, k, .. } => one_plus_r
                .powf(a)
                .mul(Expr::c(radius).sub(Expr::r()).powf(-a))
                .mul(Expr::c(k).mul(Expr::t().add(Expr::c(1.0))).exp()),
            ComparisonFunction::PsiREps { radius, eps, l, gamma, .. } => {
                let gap = Expr::r().sub(Expr::c(eps)).mul(Expr::c(radius).sub(Expr::r()));
                let corr = Expr::c(1.0).add(Expr::c(eps.powf(l) * radius.powf(a)).mul(Expr::r().powf(-l)));
                gap.powf(-a)
                    .mul(one_plus_r.powf(a))
                    .mul(corr)
                    .mul(Expr::c(gamma).mul(Expr::t().add(Expr::c(1.0))).exp())
            }
            ComparisonFunction::StationaryW { kappa, .. } => {
                Expr::c(kappa.powf(1.0 / (self.p() - 1.0))).mul(Expr::r().powf(-a))
            }
        })
    }
}

/// Tensor grid of sample points `(r, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleGrid {
    pub r: Vec<f64>,
    pub t: Vec<f64>,
}

impl SampleGrid {
    /// `nr` evenly spaced radii on `[r_lo, r_hi]` and `nt` times on
    /// `[t_lo, t_hi]`.
    pub fn uniform(r_lo: f64, r_hi: f64, nr: usize, t_lo: f64, t_hi: f64, nt: usize) -> Self {
        let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
            if n <= 1 {
                return vec![a];
            }
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        SampleGrid { r: lin(r_lo, r_hi, nr), t: lin(t_lo, t_hi, nt) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub function: String,
    pub parameters: ComparisonFunction,
    /// `max |F(phi)|` with `F(phi) = L phi + beta phi - alpha phi^p - phi_t`.
    pub max_abs_residual: f64,
    /// `max |F(phi)| / (sum of the absolute values of its terms)`.
    pub max_rel_residual: f64,
    /// Largest signed residual.
    pub max_residual: f64,
    /// Samples with `F(phi)` positive beyond roundoff.
    pub sign_violations: usize,
    pub samples: usize,
    pub worst_at: (f64, f64),
}

/// Evaluates `L phi + beta phi - alpha phi^p - phi_t` in closed form at
/// every sample point.
///
/// Derivatives are symbolic. When the whole residual is a generalized
/// polynomial in `r` it is collected first, so exact algebraic identities
/// give exact zeros.
pub fn verify_comparison(
    cf: &ComparisonFunction,
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    grid: &SampleGrid,
) -> Result<ResidualReport> {
    let phi = cf.expr()?;
    let rad = radialize(spec)?;
    let (pc, qc) =
        rad.exprs().ok_or_else(|| Error::Coefficient("generator coefficients have no closed form".into()))?;
    let beta = triplet.beta.to_expr().ok_or_else(|| Error::Coefficient("beta has no closed form".into()))?;
    let alpha = triplet.alpha.to_expr().ok_or_else(|| Error::Coefficient("alpha has no closed form".into()))?;
    let p = cf.p();
    precondition(triplet.p == p, || format!("triplet p = {} differs from the function's p = {p}", triplet.p))?;

    let (lo, hi) = cf.support();
    let margin = |x: f64| 1e-9 * x.abs().max(1.0);
    precondition(!grid.r.is_empty() && !grid.t.is_empty(), || "sample grid is empty".into())?;
    for &r in &grid.r {
        let above = lo == f64::NEG_INFINITY || r > lo + margin(lo);
        let below = hi == f64::INFINITY || r < hi - margin(hi);
        precondition(r >= 0.0 && above && below, || {
            format!("sample radius {r} is not inside ({lo}, {hi}) by a margin")
        })?;
        precondition(r > 0.0 || spec.dimension == 1, || format!("sample radius {r} hits the singular origin"))?;
    }

    let d1 = phi.derivative(Var::R);
    let d2 = d1.derivative(Var::R);
    let dt = phi.derivative(Var::T);
    let terms = [pc.mul(d2), qc.mul(d1), beta.mul(phi.clone()), alpha.mul(phi.clone().powf(p)).neg(), dt.neg()];
    let total = terms.iter().cloned().reduce(|a, b| a.add(b)).unwrap();
    let collected = total.monomials();

    let mut report = ResidualReport {
        function: cf.name().to_string(),
        parameters: cf.clone(),
        max_abs_residual: 0.0,
        max_rel_residual: 0.0,
        max_residual: f64::NEG_INFINITY,
        sign_violations: 0,
        samples: 0,
        worst_at: (f64::NAN, f64::NAN),
    };
    for &t in &grid.t {
        for &r in &grid.r {
            let parts: Vec<f64> = terms.iter().map(|e| e.eval(r, t)).collect();
            let scale: f64 = parts.iter().map(|x| x.abs()).sum();
            let res: f64 = match &collected {
                Some(m) => m.iter().map(|&(c, e)| if c == 0.0 { 0.0 } else { c * r.powf(e) }).sum(),
                None => parts.iter().sum(),
            };
            if !res.is_finite() {
                return Err(Error::Consistency(format!("residual is not finite at r = {r}, t = {t}")));
            }
            report.samples += 1;
            if res.abs() > report.max_abs_residual {
                report.max_abs_residual = res.abs();
                report.worst_at = (r, t);
            }
            if scale > 0.0 {
                report.max_rel_residual = report.max_rel_residual.max(res.abs() / scale);
            }
            report.max_residual = report.max_residual.max(res);
            if res > 1e-12 * scale {
                report.sign_violations += 1;
            }
        }
    }
    Ok(report)
}

/// Smallest constant (to bisection accuracy on `[lower, upper]`) for which every
/// `(function, grid)` pair built by `make` has no sign violations, times
/// 1.05.
pub fn search_constant(
    make: &dyn Fn(f64) -> Vec<(ComparisonFunction, SampleGrid)>,
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    lower: f64,
    upper: f64,
) -> Result<f64> {
    precondition(lower < upper, || "search interval is empty".into())?;
    let ok = |k: f64| -> Result<bool> {
        for (cf, grid) in make(k) {
            if verify_comparison(&cf, spec, triplet, &grid)?.sign_violations > 0 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if !ok(upper)? {
        return Err(Error::Consistency(format!("sign violations remain at the search bound {upper}")));
    }
    if ok(lower)? {
        return Ok(lower);
    }
    let (mut lo, mut hi) = (lower, upper);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    Ok(1.05 * hi)
}

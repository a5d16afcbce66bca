use super::scenario::{AlphaProfile, BetaProfile, ScenarioSpec};
use crate::branching::BranchingTriplet;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::generator::{GeneratorSpec, RadialFunction};

fn sample_radii(spec: &GeneratorSpec) -> Vec<f64> {
    let lo = spec.domain.inner_radius().unwrap_or(0.0);
    let hi = spec.domain.outer_radius().unwrap_or(1e6);
    let mut out: Vec<f64> = (0..=400)
        .map(|i| {
            let s = i as f64 / 400.0;
            if lo > 0.0 {
                lo * (hi / lo).powf(s)
            } else {
                (s * (hi + 1.0).ln()).exp() - 1.0
            }
        })
        .filter(|&r| spec.domain.contains(r))
        .collect();
    if lo == 0.0 && spec.dimension == 1 {
        out.push(0.0);
    }
    out
}

fn closed(f: &RadialFunction, what: &str) -> Result<Expr> {
    f.to_expr().ok_or_else(|| Error::Coefficient(format!("{what} has no closed form")))
}

/// The transformed branching triplet `(beta + Lh/h, alpha h^(p-1))` and the
/// generator `L + 2A (h'/h) d/dr` of the `h`-transformed process.
///
/// `h` must be positive on the domain; a sign change or zero is a domain
/// error.
pub fn h_transform(
    spec: &GeneratorSpec,
    triplet: &BranchingTriplet,
    h: &Expr,
) -> Result<(GeneratorSpec, BranchingTriplet)> {
    spec.validate()?;
    if h.depends_on(Var::T) {
        return Err(Error::Domain("h must not depend on t".into()));
    }
    for r in sample_radii(spec) {
        let v = h.at(r);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("h = {v} at r = {r}; h must be positive")));
        }
    }
    let p = triplet.p;
    if !h.depends_on(Var::R) {
        let c = h.at(1.0);
        let alpha = match &triplet.alpha {
            RadialFunction::PowerLaw { scale, exponent } => {
                RadialFunction::PowerLaw { scale: scale * c.powf(p - 1.0), exponent: *exponent }
            }
            other => RadialFunction::Expr { expr: Expr::c(c.powf(p - 1.0)).mul(closed(other, "alpha")?) },
        };
        return Ok((spec.clone(), BranchingTriplet { alpha, ..triplet.clone() }));
    }

    let a = closed(&spec.diffusion, "the diffusion coefficient")?;
    let b = spec.drift.as_ref().map(|f| closed(f, "the drift")).transpose()?;
    let d1 = h.derivative(Var::R);
    let d2 = d1.derivative(Var::R);
    let mut first_order = b.clone().unwrap_or(Expr::c(0.0));
    if spec.dimension > 1 {
        first_order = first_order.add(a.clone().mul(Expr::c(spec.dimension as f64 - 1.0)).div(Expr::r()));
    }
    let lh = a.clone().mul(d2).add(first_order.mul(d1.clone()));
    let extra_drift = Expr::c(2.0).mul(a).mul(d1).div(h.clone());
    let drift = match b {
        Some(b) => b.add(extra_drift),
        None => extra_drift,
    };
    let beta = closed(&triplet.beta, "beta")?.add(lh.div(h.clone()));
    let alpha = closed(&triplet.alpha, "alpha")?.mul(h.clone().powf(p - 1.0));
    let new_spec = GeneratorSpec { drift: Some(RadialFunction::Expr { expr: drift }), ..spec.clone() };
    let new_triplet = BranchingTriplet {
        beta: RadialFunction::Expr { expr: beta },
        alpha: RadialFunction::Expr { expr: alpha },
        ..triplet.clone()
    };
    Ok((new_spec, new_triplet))
}

/// [`h_transform`] at the level of scenarios. A constant `h` keeps the
/// profile families; otherwise the profiles become opaque expressions.
pub fn h_transform_scenario(s: &ScenarioSpec, h: &Expr) -> Result<ScenarioSpec> {
    let (generator, triplet) = h_transform(&s.generator, &s.triplet()?, h)?;
    let mut out = s.clone();
    if !h.depends_on(Var::R) {
        out.alpha = s.alpha.scaled(h.at(1.0).powf(s.p - 1.0));
        return Ok(out);
    }
    let expr_of = |f: &RadialFunction| closed(f, "coefficient");
    out.generator = generator;
    out.alpha = AlphaProfile::Expr { expr: expr_of(&triplet.alpha)? };
    out.beta = BetaProfile::Expr { expr: expr_of(&triplet.beta)? };
    Ok(out)
}

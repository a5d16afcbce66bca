use std::cell::OnceCell;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::scenario::{AlphaProfile, BetaProfile, ScenarioSpec};
use super::{beta0, critical_dimension};
use crate::error::{Error, Result};
use crate::generator::{default_truncations, mean_exit_time, ExitTimeOptions, ExplosionReport, RadialFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "holds",
            Status::Fails => "fails",
            Status::Unknown => "unknown",
        })
    }
}

/// Scalar read off a scenario. Indicators are 1 or 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Dimension,
    P,
    /// Exponent of a power-law diffusion coefficient.
    M,
    FullSpace,
    Punctured,
    DriftPresent,
    /// Exponent of a power-law drift.
    DriftExponent,
    InfAlpha,
    SupAlpha,
    /// `s` with `alpha = C (1 + r)^s`.
    AlphaPowerExponent,
    /// `k` with `alpha = C exp(-c r^k)`.
    AlphaDecayExponent,
    InfBeta,
    SupBeta,
    /// Smallest `e` with `beta >= -C (1 + r)^e`.
    BetaLowerExponent,
    /// `inf r^2 beta / (2A)` over `r > 0`, for constant `A`.
    InfR2BetaHalfLaplacian,
    /// `limsup r^2 beta / (2A)` as `r -> 0`, for constant `A`.
    SingularBetaHalfLaplacian,
    /// Lower bound for `inf beta / alpha`.
    InfBetaOverAlpha,
    Explosive,
    /// `sup_x E_x tau_infinity`; infinite unless the exit time converged.
    SupExitTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn test(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// `quantity relation bound`, with the value seen when the rule fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub quantity: Quantity,
    pub relation: Relation,
    pub bound: f64,
    pub value: f64,
}

impl Inequality {
    /// Recomputes the quantity for `s` and tests the relation.
    pub fn holds(&self, s: &ScenarioSpec) -> Result<bool> {
        Ok(Facts::new(s).get(self.quantity)?.is_some_and(|v| self.relation.test(v, self.bound)))
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {} {} ({})", self.quantity, self.relation.symbol(), self.bound, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub rule: String,
    pub certificate: Vec<Inequality>,
    /// For comparison verdicts, the comparator scenario and its verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<Box<(ScenarioSpec, Verdict)>>,
}

impl Verdict {
    pub fn unknown() -> Self {
        Verdict { status: Status::Unknown, rule: String::new(), certificate: Vec::new(), via: None }
    }

    /// Every certificate inequality holds, recursively through comparators.
    pub fn is_sound_for(&self, s: &ScenarioSpec) -> Result<bool> {
        for c in &self.certificate {
            if !c.holds(s)? {
                return Ok(false);
            }
        }
        match &self.via {
            Some(b) => b.1.is_sound_for(&b.0),
            None => Ok(true),
        }
    }
}

/// Lazily computed quantities of one scenario.
struct Facts<'a> {
    s: &'a ScenarioSpec,
    explosion: OnceCell<ExplosionReport>,
}

impl<'a> Facts<'a> {
    fn new(s: &'a ScenarioSpec) -> Self {
        Facts { s, explosion: OnceCell::new() }
    }

    fn explosion(&self) -> Result<&ExplosionReport> {
        if let Some(e) = self.explosion.get() {
            return Ok(e);
        }
        let report = mean_exit_time(&self.s.generator, 0.0, &default_truncations(0.0), &ExitTimeOptions::default())?;
        Ok(self.explosion.get_or_init(|| report))
    }

    fn constant_a(&self) -> Option<f64> {
        match (self.s.m(), self.s.diffusion_scale()) {
            (Some(m), Some(a)) if m == 0.0 && self.s.generator.drift.is_none() => Some(a),
            _ => None,
        }
    }

    fn get(&self, q: Quantity) -> Result<Option<f64>> {
        let s = self.s;
        let ind = |b: bool| Some(if b { 1.0 } else { 0.0 });
        Ok(match q {
            Quantity::Dimension => Some(s.dimension() as f64),
            Quantity::P => Some(s.p),
            Quantity::M => s.m(),
            Quantity::FullSpace => ind(s.is_full_space()),
            Quantity::Punctured => ind(s.is_punctured()),
            Quantity::DriftPresent => ind(s.generator.drift.is_some()),
            Quantity::DriftExponent => match &s.generator.drift {
                None => Some(f64::NEG_INFINITY),
                Some(RadialFunction::PowerLaw { scale, exponent }) => {
                    Some(if *scale == 0.0 { f64::NEG_INFINITY } else { *exponent })
                }
                Some(_) => None,
            },
            Quantity::InfAlpha => s.alpha.inf(),
            Quantity::SupAlpha => s.alpha.sup(),
            Quantity::AlphaPowerExponent => s.alpha.power_exponent(),
            Quantity::AlphaDecayExponent => s.alpha.decay_exponent(),
            Quantity::InfBeta => s.beta.inf(),
            Quantity::SupBeta => s.beta.sup(),
            Quantity::BetaLowerExponent => s.beta.lower_exponent(),
            Quantity::InfR2BetaHalfLaplacian => self.constant_a().zip(s.beta.inf_r2()).map(|(a, v)| v / (2.0 * a)),
            Quantity::SingularBetaHalfLaplacian => {
                self.constant_a().zip(s.beta.singular_strength()).map(|(a, v)| v / (2.0 * a))
            }
            Quantity::InfBetaOverAlpha => inf_ratio(&s.beta, &s.alpha),
            Quantity::Explosive => {
                if !s.is_full_space() {
                    None
                } else {
                    ind(self.explosion()?.explosive)
                }
            }
            Quantity::SupExitTime => {
                if !s.is_full_space() {
                    None
                } else {
                    let e = self.explosion()?;
                    Some(if e.explosive && e.converged { e.sup_g } else { f64::INFINITY })
                }
            }
        })
    }

    fn require(&self, q: Quantity, rel: Relation, bound: f64) -> Result<Option<Inequality>> {
        Ok(self.get(q)?.filter(|&v| rel.test(v, bound)).map(|value| Inequality {
            quantity: q,
            relation: rel,
            bound,
            value,
        }))
    }

    /// All conditions, or `None` at the first that fails. Conditions are
    /// evaluated in order, so expensive ones go last.
    fn all(&self, conds: &[(Quantity, Relation, f64)]) -> Result<Option<Vec<Inequality>>> {
        let mut out = Vec::with_capacity(conds.len());
        for &(q, rel, b) in conds {
            match self.require(q, rel, b)? {
                Some(i) => out.push(i),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }
}

/// `beta = c (1 + r)^e` with `c > 0`.
fn positive_power(beta: &BetaProfile) -> Option<(f64, f64)> {
    match *beta {
        BetaProfile::Constant { value } if value > 0.0 => Some((value, 0.0)),
        BetaProfile::PowerLowerBound { scale, exponent } if scale < 0.0 => Some((-scale, exponent)),
        _ => None,
    }
}

fn inf_ratio(beta: &BetaProfile, alpha: &AlphaProfile) -> Option<f64> {
    let power = match *alpha {
        AlphaProfile::Constant { value } => Some((value, 0.0)),
        AlphaProfile::Power { scale, exponent } => Some((scale, exponent)),
        _ => None,
    };
    if let (Some((cb, eb)), Some((ca, ea))) = (positive_power(beta), power) {
        return Some(if eb >= ea { cb / ca } else { 0.0 });
    }
    let (ib, ia, sa) = (beta.inf()?, alpha.inf()?, alpha.sup()?);
    Some(if ib > 0.0 {
        ib / sa
    } else if ib == 0.0 {
        0.0
    } else if ia > 0.0 {
        ib / ia
    } else {
        f64::NEG_INFINITY
    })
}

use Quantity as Q;
use Relation as R;

type Rule = fn(&Facts) -> Result<Option<Verdict>>;

fn fire(status: Status, rule: &str, certificate: Option<Vec<Inequality>>) -> Option<Verdict> {
    certificate.map(|certificate| Verdict { status, rule: rule.to_string(), certificate, via: None })
}

fn first(options: Vec<Option<Verdict>>) -> Option<Verdict> {
    options.into_iter().flatten().next()
}

fn ep2(f: &Facts) -> Result<Option<Verdict>> {
    let c = f.all(&[
        (Q::FullSpace, R::Eq, 1.0),
        (Q::M, R::Le, 2.0),
        (Q::DriftExponent, R::Le, 1.0),
        (Q::InfAlpha, R::Gt, 0.0),
    ])?;
    Ok(fire(Status::Holds, "Theorem EP2(2)", c))
}

fn theorem1(f: &Facts) -> Result<Option<Verdict>> {
    let base = [(Q::FullSpace, R::Eq, 1.0), (Q::DriftPresent, R::Eq, 0.0), (Q::M, R::Ge, 0.0), (Q::M, R::Le, 2.0)];
    let Some(head) = f.all(&base)? else { return Ok(None) };
    let m = head[2].value;
    let with = |extra: &[(Quantity, Relation, f64)]| -> Result<Option<Vec<Inequality>>> {
        Ok(f.all(extra)?.map(|tail| head.iter().cloned().chain(tail).collect()))
    };
    let holds = first(vec![
        fire(Status::Holds, "Theorem 1(1)", with(&[(Q::InfAlpha, R::Gt, 0.0)])?),
        fire(Status::Holds, "Theorem 1(1)", with(&[(Q::AlphaDecayExponent, R::Le, 2.0 - m)])?),
        fire(
            Status::Holds,
            "Theorem 1(1)",
            with(&[(Q::M, R::Lt, 2.0), (Q::AlphaPowerExponent, R::Gt, f64::NEG_INFINITY)])?,
        ),
    ]);
    if holds.is_some() {
        return Ok(holds);
    }
    let Some(k) = f.get(Q::AlphaDecayExponent)? else { return Ok(None) };
    Ok(fire(
        Status::Fails,
        "Theorem 1(2)",
        with(&[(Q::AlphaDecayExponent, R::Gt, 2.0 - m), (Q::BetaLowerExponent, R::Lt, 2.0 * k - 2.0 + m)])?,
    ))
}

fn ep3(f: &Facts) -> Result<Option<Verdict>> {
    let base = [(Q::FullSpace, R::Eq, 1.0), (Q::DriftPresent, R::Eq, 0.0)];
    let Some(head) = f.all(&base)? else { return Ok(None) };
    let p = f.s.p;
    let with = |extra: &[(Quantity, Relation, f64)]| -> Result<Option<Vec<Inequality>>> {
        Ok(f.all(extra)?.map(|tail| head.iter().cloned().chain(tail).collect()))
    };
    Ok(first(vec![
        fire(
            Status::Fails,
            "Theorem EP3(1)",
            with(&[
                (Q::Dimension, R::Ge, 2.0),
                (Q::M, R::Gt, 2.0),
                (Q::SupAlpha, R::Lt, f64::INFINITY),
                (Q::InfBeta, R::Ge, 0.0),
            ])?,
        ),
        fire(
            Status::Fails,
            "Theorem EP3(2)",
            with(&[
                (Q::Dimension, R::Eq, 1.0),
                (Q::M, R::Gt, 1.0 + p),
                (Q::SupAlpha, R::Lt, f64::INFINITY),
                (Q::InfBeta, R::Ge, 0.0),
            ])?,
        ),
        fire(
            Status::Holds,
            "Theorem EP3(3)",
            with(&[
                (Q::Dimension, R::Eq, 1.0),
                (Q::M, R::Le, 1.0 + p),
                (Q::InfAlpha, R::Gt, 0.0),
                (Q::SupBeta, R::Le, 0.0),
            ])?,
        ),
    ]))
}

fn proposition1(f: &Facts) -> Result<Option<Verdict>> {
    let Some(m) = f.s.m() else { return Ok(None) };
    let c = f.all(&[
        (Q::FullSpace, R::Eq, 1.0),
        (Q::DriftPresent, R::Eq, 0.0),
        (Q::AlphaPowerExponent, R::Eq, m - 2.0),
        (Q::InfBeta, R::Ge, 0.0),
        (Q::SupBeta, R::Le, 0.0),
    ])?;
    Ok(fire(Status::Holds, "Proposition 1", c))
}

fn punctured_base(f: &Facts) -> Result<Option<Vec<Inequality>>> {
    let Some(a) = f.s.alpha.inf() else { return Ok(None) };
    f.all(&[
        (Q::Punctured, R::Eq, 1.0),
        (Q::Dimension, R::Ge, 2.0),
        (Q::DriftPresent, R::Eq, 0.0),
        (Q::M, R::Eq, 0.0),
        (Q::InfAlpha, R::Ge, a),
        (Q::SupAlpha, R::Le, a),
        (Q::InfAlpha, R::Gt, 0.0),
    ])
}

fn theorem_p(f: &Facts) -> Result<Option<Verdict>> {
    let Some(head) = punctured_base(f)? else { return Ok(None) };
    let Some(zero) = f.all(&[(Q::InfBeta, R::Ge, 0.0), (Q::SupBeta, R::Le, 0.0)])? else { return Ok(None) };
    let crit = critical_dimension(f.s.p)?;
    let head: Vec<Inequality> = head.into_iter().chain(zero).collect();
    let with = |extra: &[(Quantity, Relation, f64)]| -> Result<Option<Vec<Inequality>>> {
        Ok(f.all(extra)?.map(|tail| head.iter().cloned().chain(tail).collect()))
    };
    Ok(first(vec![
        fire(Status::Fails, "Theorem P(1)", with(&[(Q::Dimension, R::Lt, crit)])?),
        fire(Status::Holds, "Theorem P(2)", with(&[(Q::Dimension, R::Ge, crit)])?),
    ]))
}

fn theorem3(f: &Facts) -> Result<Option<Verdict>> {
    let Some(head) = punctured_base(f)? else { return Ok(None) };
    let crit = critical_dimension(f.s.p)?;
    if (f.s.dimension() as f64) >= crit {
        return Ok(None);
    }
    let b0 = beta0(f.s.dimension(), f.s.p)?;
    let with = |extra: &[(Quantity, Relation, f64)]| -> Result<Option<Vec<Inequality>>> {
        Ok(f.all(extra)?.map(|tail| head.iter().cloned().chain(tail).collect()))
    };
    Ok(first(vec![
        fire(
            Status::Fails,
            "Theorem 3(1)",
            with(&[
                (Q::Dimension, R::Lt, crit),
                (Q::InfR2BetaHalfLaplacian, R::Gt, b0),
                (Q::SupBeta, R::Lt, f64::INFINITY),
            ])?,
        ),
        fire(
            Status::Holds,
            "Theorem 3(2)",
            with(&[(Q::Dimension, R::Lt, crit), (Q::SingularBetaHalfLaplacian, R::Lt, b0)])?,
        ),
    ]))
}

fn ep4(f: &Facts) -> Result<Option<Verdict>> {
    if !f.s.is_full_space() {
        return Ok(None);
    }
    let special =
        f.all(&[(Q::SupAlpha, R::Lt, f64::INFINITY), (Q::InfBeta, R::Gt, 0.0), (Q::Explosive, R::Eq, 1.0)])?;
    if special.is_some() {
        return Ok(fire(Status::Fails, "Theorem EP4 (inf beta > 0)", special));
    }
    let c = f.all(&[(Q::InfBetaOverAlpha, R::Gt, 0.0), (Q::Explosive, R::Eq, 1.0)])?;
    Ok(fire(Status::Fails, "Theorem EP4", c))
}

fn theorem2(f: &Facts) -> Result<Option<Verdict>> {
    if !f.s.is_full_space() {
        return Ok(None);
    }
    let Some(pre) = f.all(&[(Q::SupAlpha, R::Lt, f64::INFINITY), (Q::InfBeta, R::Gt, f64::NEG_INFINITY)])? else {
        return Ok(None);
    };
    let Some(g) = f.all(&[(Q::Explosive, R::Eq, 1.0), (Q::SupExitTime, R::Lt, f64::INFINITY)])? else {
        return Ok(None);
    };
    let bound = -1.0 / g[1].value;
    let c = f.all(&[(Q::InfBeta, R::Gt, bound)])?;
    Ok(fire(Status::Fails, "Theorem 2", c.map(|tail| pre.into_iter().chain(g).chain(tail).collect())))
}

/// Rules in the order they are tried.
const RULES: [(&str, Rule); 8] = [
    ("Theorem EP2", ep2),
    ("Theorem 1", theorem1),
    ("Theorem EP3", ep3),
    ("Proposition 1", proposition1),
    ("Theorem P", theorem_p),
    ("Theorem 3", theorem3),
    ("Theorem EP4", ep4),
    ("Theorem 2", theorem2),
];

/// Every direct rule that fires, in rule order.
pub fn direct_verdicts(s: &ScenarioSpec) -> Result<Vec<Verdict>> {
    s.validate()?;
    let facts = Facts::new(s);
    let mut out = Vec::new();
    for (_, rule) in RULES {
        if let Some(v) = rule(&facts)? {
            out.push(v);
        }
    }
    Ok(out)
}

fn agree(verdicts: &[Verdict], s: &ScenarioSpec) -> Result<()> {
    if let Some(a) = verdicts.first() {
        if let Some(b) = verdicts.iter().find(|v| v.status != a.status) {
            return Err(Error::Consistency(format!(
                "{} gives {} but {} gives {} for scenario '{}'",
                a.rule, a.status, b.rule, b.status, s.name
            )));
        }
    }
    Ok(())
}

/// The first direct rule that fires; otherwise a verdict through the
/// comparison result; otherwise Unknown.
///
/// Rule order: EP2, Theorem 1, EP3, Proposition 1, Theorem P, Theorem 3,
/// EP4, Theorem 2, then comparison. All direct rules are evaluated and must
/// agree.
pub fn classify(s: &ScenarioSpec) -> Result<Verdict> {
    let direct = direct_verdicts(s)?;
    agree(&direct, s)?;
    if let Some(v) = direct.into_iter().next() {
        return Ok(v);
    }
    let closure = comparison(s)?;
    agree(&closure, s)?;
    Ok(closure.into_iter().next().unwrap_or_else(Verdict::unknown))
}

fn beta_constant(v: f64) -> BetaProfile {
    BetaProfile::Constant { value: v }
}

/// Comparators `(beta', alpha')` with `beta' >= beta` and `alpha' <= alpha`.
fn larger_solution_candidates(s: &ScenarioSpec) -> (Vec<(BetaProfile, Inequality)>, Vec<(AlphaProfile, Inequality)>) {
    let mut betas = Vec::new();
    if let Some(sb) = s.beta.sup().filter(|v| v.is_finite()) {
        let ineq = Inequality { quantity: Q::SupBeta, relation: R::Le, bound: sb, value: sb };
        betas.push((beta_constant(sb), ineq.clone()));
        if sb < 0.0 {
            betas.push((beta_constant(0.0), Inequality { bound: 0.0, ..ineq }));
        }
    }
    let mut alphas = Vec::new();
    if let Some(ia) = s.alpha.inf().filter(|&v| v > 0.0) {
        alphas.push((
            AlphaProfile::Constant { value: ia },
            Inequality { quantity: Q::InfAlpha, relation: R::Ge, bound: ia, value: ia },
        ));
    }
    if let (Some(m), Some(e)) = (s.m(), s.alpha.power_exponent()) {
        let target = m - 2.0;
        let scale = match s.alpha {
            AlphaProfile::Constant { value } => value,
            AlphaProfile::Power { scale, .. } => scale,
            _ => f64::NAN,
        };
        if e >= target && e != target && scale > 0.0 {
            let ineq = Inequality { quantity: Q::AlphaPowerExponent, relation: R::Ge, bound: target, value: e };
            alphas.push((AlphaProfile::Power { scale, exponent: target }, ineq));
        }
    }
    (betas, alphas)
}

/// Comparators `(beta', alpha')` with `beta' <= beta` and `alpha' >= alpha`.
fn smaller_solution_candidates(s: &ScenarioSpec) -> (Vec<(BetaProfile, Inequality)>, Vec<(AlphaProfile, Inequality)>) {
    let mut betas = Vec::new();
    if let Some(ib) = s.beta.inf().filter(|v| v.is_finite()) {
        let ineq = Inequality { quantity: Q::InfBeta, relation: R::Ge, bound: ib, value: ib };
        betas.push((beta_constant(ib), ineq.clone()));
        if ib > 0.0 {
            betas.push((beta_constant(0.0), Inequality { bound: 0.0, ..ineq }));
        }
    }
    let mut alphas = Vec::new();
    if let Some(sa) = s.alpha.sup().filter(|v| v.is_finite()) {
        alphas.push((
            AlphaProfile::Constant { value: sa },
            Inequality { quantity: Q::SupAlpha, relation: R::Le, bound: sa, value: sa },
        ));
    }
    (betas, alphas)
}

/// Verdicts reached by applying a direct rule to a comparator scenario.
fn comparison(s: &ScenarioSpec) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for (target, (betas, alphas)) in
        [(Status::Holds, larger_solution_candidates(s)), (Status::Fails, smaller_solution_candidates(s))]
    {
        let betas: Vec<(BetaProfile, Option<Inequality>)> =
            std::iter::once((s.beta.clone(), None)).chain(betas.into_iter().map(|(b, i)| (b, Some(i)))).collect();
        let alphas: Vec<(AlphaProfile, Option<Inequality>)> =
            std::iter::once((s.alpha.clone(), None)).chain(alphas.into_iter().map(|(a, i)| (a, Some(i)))).collect();
        'search: for (b, bi) in &betas {
            for (a, ai) in &alphas {
                if bi.is_none() && ai.is_none() {
                    continue;
                }
                let mut other = s.clone();
                other.beta = b.clone();
                other.alpha = a.clone();
                if other.validate().is_err() {
                    continue;
                }
                let found = direct_verdicts(&other)?;
                if let Some(v) = found.into_iter().find(|v| v.status == target) {
                    out.push(Verdict {
                        status: target,
                        rule: format!("Comparison result with {}", v.rule),
                        certificate: bi.iter().chain(ai.iter()).cloned().collect(),
                        via: Some(Box::new((other, v))),
                    });
                    break 'search;
                }
            }
        }
    }
    Ok(out)
}

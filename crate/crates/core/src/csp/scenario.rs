use serde::{Deserialize, Serialize};

use crate::branching::BranchingTriplet;
use crate::error::{precondition, Error, Result};
use crate::expr::Expr;
use crate::generator::{Domain, GeneratorSpec, RadialFunction};

/// `alpha(r)` from a family whose asymptotics the classifier can read off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaProfile {
    Constant {
        value: f64,
    },
    /// `scale * (1 + r)^exponent`
    Power {
        scale: f64,
        exponent: f64,
    },
    /// `scale * exp(-rate * r^exponent)`
    ExpDecay {
        scale: f64,
        rate: f64,
        exponent: f64,
    },
    /// Opaque to the rules.
    Expr {
        expr: Expr,
    },
}

/// `beta(r)` from a family whose asymptotics the classifier can read off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BetaProfile {
    Constant {
        value: f64,
    },
    /// `-scale * (1 + r)^exponent`
    PowerLowerBound {
        scale: f64,
        exponent: f64,
    },
    /// `coefficient / r^2`
    Singular {
        coefficient: f64,
    },
    /// Opaque to the rules.
    Expr {
        expr: Expr,
    },
}

impl AlphaProfile {
    pub fn to_function(&self) -> Result<RadialFunction> {
        Ok(match self {
            AlphaProfile::Constant { value } => RadialFunction::constant(*value),
            AlphaProfile::Power { scale, exponent } => RadialFunction::power_law(*scale, *exponent),
            AlphaProfile::ExpDecay { scale, rate, exponent } => {
                RadialFunction::Expr { expr: Expr::c(*scale).mul(Expr::c(-rate).mul(Expr::r().powf(*exponent)).exp()) }
            }
            AlphaProfile::Expr { expr } => RadialFunction::Expr { expr: expr.clone() },
        })
    }

    pub fn inf(&self) -> Option<f64> {
        match *self {
            AlphaProfile::Constant { value } => Some(value),
            AlphaProfile::Power { scale, exponent } => Some(if exponent >= 0.0 { scale } else { 0.0 }),
            AlphaProfile::ExpDecay { scale, rate, exponent } => {
                Some(if rate > 0.0 && exponent > 0.0 { 0.0 } else { scale * (-rate).exp().min(1.0) })
            }
            AlphaProfile::Expr { .. } => None,
        }
    }

    pub fn sup(&self) -> Option<f64> {
        match *self {
            AlphaProfile::Constant { value } => Some(value),
            AlphaProfile::Power { scale, exponent } => Some(if exponent > 0.0 { f64::INFINITY } else { scale }),
            AlphaProfile::ExpDecay { scale, rate, .. } => Some(if rate >= 0.0 { scale } else { f64::INFINITY }),
            AlphaProfile::Expr { .. } => None,
        }
    }

    /// Exponent `s` with `alpha` comparable to `(1 + r)^s`.
    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            AlphaProfile::Constant { .. } => Some(0.0),
            AlphaProfile::Power { exponent, .. } => Some(exponent),
            _ => None,
        }
    }

    /// Exponent `k` of `exp(-rate r^k)`.
    pub fn decay_exponent(&self) -> Option<f64> {
        match *self {
            AlphaProfile::ExpDecay { rate, exponent, .. } if rate > 0.0 => Some(exponent),
            _ => None,
        }
    }

    pub fn scaled(&self, c: f64) -> AlphaProfile {
        match self {
            AlphaProfile::Constant { value } => AlphaProfile::Constant { value: c * value },
            AlphaProfile::Power { scale, exponent } => AlphaProfile::Power { scale: c * scale, exponent: *exponent },
            AlphaProfile::ExpDecay { scale, rate, exponent } => {
                AlphaProfile::ExpDecay { scale: c * scale, rate: *rate, exponent: *exponent }
            }
            AlphaProfile::Expr { expr } => AlphaProfile::Expr { expr: Expr::c(c).mul(expr.clone()) },
        }
    }
}

impl BetaProfile {
    pub fn to_function(&self) -> Result<RadialFunction> {
        Ok(match self {
            BetaProfile::Constant { value } => RadialFunction::constant(*value),
            BetaProfile::PowerLowerBound { scale, exponent } => RadialFunction::power_law(-scale, *exponent),
            BetaProfile::Singular { coefficient } => {
                RadialFunction::Expr { expr: Expr::c(*coefficient).mul(Expr::r().powf(-2.0)) }
            }
            BetaProfile::Expr { expr } => RadialFunction::Expr { expr: expr.clone() },
        })
    }

    pub fn inf(&self) -> Option<f64> {
        match *self {
            BetaProfile::Constant { value } => Some(value),
            BetaProfile::PowerLowerBound { scale, exponent } => Some(if scale <= 0.0 {
                if exponent < 0.0 {
                    0.0
                } else {
                    -scale
                }
            } else if exponent <= 0.0 {
                -scale
            } else {
                f64::NEG_INFINITY
            }),
            BetaProfile::Singular { coefficient } => Some(if coefficient < 0.0 { f64::NEG_INFINITY } else { 0.0 }),
            BetaProfile::Expr { .. } => None,
        }
    }

    pub fn sup(&self) -> Option<f64> {
        match *self {
            BetaProfile::Constant { value } => Some(value),
            BetaProfile::PowerLowerBound { scale, exponent } => Some(if scale <= 0.0 {
                if exponent > 0.0 && scale < 0.0 {
                    f64::INFINITY
                } else {
                    -scale
                }
            } else if exponent < 0.0 {
                0.0
            } else {
                -scale
            }),
            BetaProfile::Singular { coefficient } => Some(if coefficient > 0.0 { f64::INFINITY } else { 0.0 }),
            BetaProfile::Expr { .. } => None,
        }
    }

    /// Smallest `e` with `beta >= -C (1 + r)^e` for some `C`; `-inf` when
    /// `beta >= 0`.
    pub fn lower_exponent(&self) -> Option<f64> {
        let inf = self.inf()?;
        if inf >= 0.0 {
            return Some(f64::NEG_INFINITY);
        }
        match *self {
            BetaProfile::Constant { .. } => Some(0.0),
            BetaProfile::PowerLowerBound { exponent, .. } => Some(exponent),
            BetaProfile::Singular { .. } => Some(f64::INFINITY),
            BetaProfile::Expr { .. } => None,
        }
    }

    /// `inf over r > 0 of r^2 beta(r)`.
    pub fn inf_r2(&self) -> Option<f64> {
        match *self {
            BetaProfile::Singular { coefficient } => Some(coefficient),
            BetaProfile::PowerLowerBound { scale, exponent } if scale > 0.0 && exponent <= -2.0 => {
                if exponent == -2.0 {
                    return Some(-scale);
                }
                let r = 2.0 / (-exponent - 2.0);
                Some(-scale * r * r * (1.0 + r).powf(exponent))
            }
            _ => Some(if self.inf()? >= 0.0 { 0.0 } else { f64::NEG_INFINITY }),
        }
    }

    /// `limsup as r -> 0 of r^2 beta(r)`.
    pub fn singular_strength(&self) -> Option<f64> {
        match *self {
            BetaProfile::Singular { coefficient } => Some(coefficient),
            BetaProfile::Expr { .. } => None,
            _ => Some(0.0),
        }
    }
}

/// A superprocess described by its generator and branching profiles.
///
/// The dimension lives in the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub generator: GeneratorSpec,
    pub alpha: AlphaProfile,
    pub beta: BetaProfile,
    pub p: f64,
}

impl ScenarioSpec {
    pub fn new(generator: GeneratorSpec, alpha: AlphaProfile, beta: BetaProfile, p: f64) -> Self {
        ScenarioSpec { name: String::new(), generator, alpha, beta, p }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dimension(&self) -> u32 {
        self.generator.dimension
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        precondition(self.p > 1.0 && self.p <= 2.0, || format!("p = {} is outside (1, 2]", self.p))?;
        match self.alpha {
            AlphaProfile::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                return Err(Error::Coefficient(format!("alpha = {value} must be positive")))
            }
            AlphaProfile::Power { scale, .. } | AlphaProfile::ExpDecay { scale, .. } if !(scale > 0.0) => {
                return Err(Error::Coefficient(format!("alpha scale {scale} must be positive")))
            }
            AlphaProfile::ExpDecay { rate, exponent, .. } if !(rate > 0.0 && exponent >= 0.0) => {
                return Err(Error::Coefficient("exp-decay alpha needs rate > 0 and exponent >= 0".into()))
            }
            _ => {}
        }
        if let Some(s) = self.beta.sup() {
            precondition(s < f64::INFINITY, || "beta must be bounded above".into())?;
        }
        if let BetaProfile::Singular { .. } = self.beta {
            precondition(self.generator.domain.inner_radius().is_some(), || {
                "a singular beta needs a domain that excludes the origin".into()
            })?;
        }
        Ok(())
    }

    pub fn triplet(&self) -> Result<BranchingTriplet> {
        Ok(BranchingTriplet::new(self.beta.to_function()?, self.alpha.to_function()?, self.p))
    }

    /// Exponent `m` of a power-law diffusion coefficient.
    pub fn m(&self) -> Option<f64> {
        self.generator.diffusion.exponent()
    }

    /// Scale of a power-law diffusion coefficient.
    pub fn diffusion_scale(&self) -> Option<f64> {
        match self.generator.diffusion {
            RadialFunction::PowerLaw { scale, .. } => Some(scale),
            _ => None,
        }
    }

    pub fn is_full_space(&self) -> bool {
        self.generator.domain == Domain::Full
    }

    pub fn is_punctured(&self) -> bool {
        matches!(self.generator.domain, Domain::Punctured { .. })
    }
}

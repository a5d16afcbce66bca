use serde::{Deserialize, Serialize};

use super::rules::Status;
use super::scenario::{AlphaProfile, BetaProfile, ScenarioSpec};
use crate::generator::{Domain, GeneratorSpec, RadialFunction};

/// A scenario with the verdict and rule it is expected to receive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub scenario: ScenarioSpec,
    pub expected: Status,
    pub rule: String,
}

fn constant(v: f64) -> AlphaProfile {
    AlphaProfile::Constant { value: v }
}

fn zero_beta() -> BetaProfile {
    BetaProfile::Constant { value: 0.0 }
}

fn fixture(
    name: &str,
    generator: GeneratorSpec,
    alpha: AlphaProfile,
    beta: BetaProfile,
    p: f64,
    expected: Status,
    rule: &str,
) -> Fixture {
    Fixture { scenario: ScenarioSpec::new(generator, alpha, beta, p).named(name), expected, rule: rule.to_string() }
}

fn punctured(d: u32) -> GeneratorSpec {
    GeneratorSpec::half_laplacian(d).with_domain(Domain::Punctured { inner: 0.1 })
}

fn quadratic_drift() -> GeneratorSpec {
    GeneratorSpec::new(1, RadialFunction::constant(1.0)).with_drift(RadialFunction::power_law(1.0, 2.0))
}

/// Scenarios covering every rule, each pinned to its citation.
pub fn fixtures() -> Vec<Fixture> {
    use Status::{Fails, Holds};
    vec![
        fixture(
            "ep2-m0-d3",
            GeneratorSpec::power_law(3, 0.0),
            constant(1.0),
            zero_beta(),
            2.0,
            Holds,
            "Theorem EP2(2)",
        ),
        fixture(
            "ep3-m3-d2",
            GeneratorSpec::power_law(2, 3.0),
            constant(1.0),
            zero_beta(),
            2.0,
            Fails,
            "Theorem EP3(1)",
        ),
        fixture(
            "ep3-flip-p1.5",
            GeneratorSpec::power_law(1, 2.8),
            constant(1.0),
            zero_beta(),
            1.5,
            Fails,
            "Theorem EP3(2)",
        ),
        fixture(
            "ep3-flip-p2",
            GeneratorSpec::power_law(1, 2.8),
            constant(1.0),
            zero_beta(),
            2.0,
            Holds,
            "Theorem EP3(3)",
        ),
        fixture(
            "thm1-gauss",
            GeneratorSpec::power_law(1, 0.0),
            AlphaProfile::ExpDecay { scale: 1.0, rate: 1.0, exponent: 2.0 },
            zero_beta(),
            2.0,
            Holds,
            "Theorem 1(1)",
        ),
        fixture(
            "thm1-fast-decay",
            GeneratorSpec::power_law(1, 0.0),
            AlphaProfile::ExpDecay { scale: 1.0, rate: 1.0, exponent: 2.5 },
            zero_beta(),
            2.0,
            Fails,
            "Theorem 1(2)",
        ),
        fixture(
            "prop1-m3-d3",
            GeneratorSpec::power_law(3, 3.0),
            AlphaProfile::Power { scale: 1.0, exponent: 1.0 },
            zero_beta(),
            2.0,
            Holds,
            "Proposition 1",
        ),
        fixture("punctured-d3", punctured(3), constant(1.0), zero_beta(), 2.0, Fails, "Theorem P(1)"),
        fixture("punctured-d5", punctured(5), constant(1.0), zero_beta(), 2.0, Holds, "Theorem P(2)"),
        fixture(
            "thm3-mild-sink",
            punctured(3),
            constant(1.0),
            BetaProfile::Singular { coefficient: -0.5 },
            2.0,
            Fails,
            "Theorem 3(1)",
        ),
        fixture(
            "thm3-strong-sink",
            punctured(3),
            constant(1.0),
            BetaProfile::Singular { coefficient: -1.5 },
            2.0,
            Holds,
            "Theorem 3(2)",
        ),
        fixture(
            "ep4-drift-supercritical",
            quadratic_drift(),
            constant(1.0),
            BetaProfile::Constant { value: 1.0 },
            2.0,
            Fails,
            "Theorem EP4 (inf beta > 0)",
        ),
        fixture("thm2-drift-critical", quadratic_drift(), constant(1.0), zero_beta(), 2.0, Fails, "Theorem 2"),
        fixture(
            "comparison-prop1-subcritical",
            GeneratorSpec::power_law(3, 3.0),
            AlphaProfile::Power { scale: 1.0, exponent: 1.0 },
            BetaProfile::Constant { value: -1.0 },
            2.0,
            Holds,
            "Comparison result with Proposition 1",
        ),
    ]
}

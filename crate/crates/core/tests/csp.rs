use proptest::prelude::*;
use supercsp::branching::BranchingTriplet;
use supercsp::csp::*;
use supercsp::generator::{Domain, GeneratorSpec, RadialFunction};
use supercsp::pde::{maximal_solution, MaximalOptions, PdeVerdict};
use supercsp::{Error, Expr, Var};

fn scenario(gen: GeneratorSpec, alpha: AlphaProfile, beta: BetaProfile, p: f64) -> ScenarioSpec {
    ScenarioSpec::new(gen, alpha, beta, p)
}

fn one() -> AlphaProfile {
    AlphaProfile::Constant { value: 1.0 }
}

fn zero() -> BetaProfile {
    BetaProfile::Constant { value: 0.0 }
}

#[test]
fn critical_dimension_and_beta0() {
    assert_eq!(critical_dimension(2.0).unwrap(), 4.0);
    assert_eq!(critical_dimension(1.5).unwrap(), 6.0);
    assert_eq!(beta0(3, 2.0).unwrap(), -1.0);
    // (5 * 0.5 - 3) / 0.25
    assert_eq!(beta0(5, 1.5).unwrap(), -2.0);
    assert!(matches!(critical_dimension(1.0), Err(Error::Domain(_))));
    assert!(matches!(beta0(3, 0.5), Err(Error::Domain(_))));
    assert!(matches!(beta0(1, 2.0), Err(Error::Domain(_))));
}

#[test]
fn worked_examples() {
    let cases = [
        (scenario(GeneratorSpec::power_law(3, 0.0), one(), zero(), 2.0), Status::Holds, "Theorem EP2(2)"),
        (scenario(GeneratorSpec::power_law(2, 3.0), one(), zero(), 2.0), Status::Fails, "Theorem EP3(1)"),
        (scenario(GeneratorSpec::power_law(1, 2.8), one(), zero(), 1.5), Status::Fails, "Theorem EP3(2)"),
        (scenario(GeneratorSpec::power_law(1, 2.8), one(), zero(), 2.0), Status::Holds, "Theorem EP3(3)"),
        (
            scenario(
                GeneratorSpec::half_laplacian(3).with_domain(Domain::Punctured { inner: 0.1 }),
                one(),
                zero(),
                2.0,
            ),
            Status::Fails,
            "Theorem P(1)",
        ),
        (
            scenario(GeneratorSpec::power_law(3, 3.0), AlphaProfile::Power { scale: 1.0, exponent: 1.0 }, zero(), 2.0),
            Status::Holds,
            "Proposition 1",
        ),
    ];
    for (s, status, rule) in cases {
        let v = classify(&s).unwrap();
        assert_eq!((v.status, v.rule.as_str()), (status, rule), "{s:?}");
    }
}

#[test]
fn fixtures_reproduce_their_verdicts() {
    let all = fixtures();
    assert!(all.len() >= 10);
    for f in &all {
        let v = classify(&f.scenario).unwrap();
        assert_eq!(v.status, f.expected, "{}", f.scenario.name);
        assert_eq!(v.rule, f.rule, "{}", f.scenario.name);
        assert!(v.is_sound_for(&f.scenario).unwrap(), "{}", f.scenario.name);
    }
}

#[test]
fn fixture_set_contains_a_p_flip() {
    let all = fixtures();
    let flip = all.iter().any(|a| {
        all.iter().any(|b| {
            let mut same = b.scenario.clone();
            same.p = a.scenario.p;
            same.name = a.scenario.name.clone();
            a.scenario.p != b.scenario.p && same == a.scenario && a.expected != b.expected
        })
    });
    assert!(flip);
}

#[test]
fn opaque_profiles_are_unknown() {
    let s = scenario(
        GeneratorSpec::power_law(2, 1.0),
        AlphaProfile::Expr { expr: Expr::parse("2 + r").unwrap() },
        BetaProfile::Expr { expr: Expr::parse("0.5").unwrap() },
        2.0,
    );
    let v = classify(&s).unwrap();
    assert_eq!(v.status, Status::Unknown);
    assert!(v.rule.is_empty() && v.certificate.is_empty());
}

#[test]
fn theorem1_refuses_outside_its_window() {
    let fast = AlphaProfile::ExpDecay { scale: 1.0, rate: 1.0, exponent: 3.0 };
    let s = scenario(GeneratorSpec::power_law(1, -0.5), fast.clone(), zero(), 2.0);
    assert_eq!(classify(&s).unwrap().status, Status::Unknown);
    let s = scenario(GeneratorSpec::power_law(1, 1.0), fast, zero(), 2.0);
    assert_eq!(classify(&s).unwrap().rule, "Theorem 1(2)");
}

#[test]
fn theorem1_part2_needs_the_beta_bound() {
    // m = 0, k = 2.5: beta may decay no faster than -(1+r)^e with e < 3.
    let alpha = AlphaProfile::ExpDecay { scale: 1.0, rate: 1.0, exponent: 2.5 };
    let ok = scenario(
        GeneratorSpec::power_law(1, 0.0),
        alpha.clone(),
        BetaProfile::PowerLowerBound { scale: 1.0, exponent: 2.9 },
        2.0,
    );
    assert_eq!(classify(&ok).unwrap().rule, "Theorem 1(2)");
    let bad = scenario(
        GeneratorSpec::power_law(1, 0.0),
        alpha,
        BetaProfile::PowerLowerBound { scale: 1.0, exponent: 3.0 },
        2.0,
    );
    assert_eq!(classify(&bad).unwrap().status, Status::Unknown);
}

#[test]
fn theorem3_uses_the_half_laplacian_normalization() {
    // A = 1 doubles the operator, so the threshold on c is 2 * beta0 = -2.
    let gen = GeneratorSpec::power_law(3, 0.0).with_domain(Domain::Punctured { inner: 0.1 });
    let s = |c: f64| scenario(gen.clone(), one(), BetaProfile::Singular { coefficient: c }, 2.0);
    assert_eq!(classify(&s(-1.5)).unwrap().rule, "Theorem 3(1)");
    assert_eq!(classify(&s(-2.5)).unwrap().rule, "Theorem 3(2)");
}

#[test]
fn ep4_general_ratio_form() {
    let gen = GeneratorSpec::new(1, RadialFunction::constant(1.0)).with_drift(RadialFunction::power_law(1.0, 2.0));
    let s = scenario(
        gen,
        AlphaProfile::Power { scale: 1.0, exponent: -1.0 },
        BetaProfile::PowerLowerBound { scale: -2.0, exponent: -1.0 },
        2.0,
    );
    let direct = direct_verdicts(&s).unwrap();
    assert!(direct.iter().any(|v| v.rule == "Theorem EP4"), "{direct:?}");
}

#[test]
fn non_explosive_diffusions_do_not_trigger_explosion_rules() {
    let s = scenario(
        GeneratorSpec::power_law(3, 1.0),
        AlphaProfile::ExpDecay { scale: 1.0, rate: 1.0, exponent: 4.0 },
        BetaProfile::Constant { value: 1.0 },
        2.0,
    );
    assert!(direct_verdicts(&s).unwrap().iter().all(|v| !v.rule.starts_with("Theorem EP4") && v.rule != "Theorem 2"));
}

#[test]
fn invalid_scenarios_are_refused() {
    let s = scenario(GeneratorSpec::power_law(2, 0.0), one(), zero(), 2.5);
    assert!(classify(&s).is_err());
    let s = scenario(GeneratorSpec::power_law(2, 0.0), one(), BetaProfile::Singular { coefficient: -1.0 }, 2.0);
    assert!(classify(&s).is_err());
    let s = scenario(
        GeneratorSpec::power_law(2, 0.0),
        AlphaProfile::ExpDecay { scale: 1.0, rate: 0.0, exponent: 1.0 },
        zero(),
        2.0,
    );
    assert!(classify(&s).is_err());
}

#[test]
fn constant_h_scales_alpha_only() {
    let spec = GeneratorSpec::power_law(3, 1.0);
    let triplet = BranchingTriplet::new(RadialFunction::constant(0.3), RadialFunction::power_law(1.5, -1.0), 2.0);
    let (spec2, trip2) = h_transform(&spec, &triplet, &Expr::c(2.0)).unwrap();
    assert_eq!(spec2, spec);
    assert_eq!(trip2.beta, triplet.beta);
    for r in [0.0, 0.5, 3.0, 40.0] {
        assert_eq!(trip2.alpha(r), 2.0 * triplet.alpha(r));
    }
}

/// `L f = A f'' + ((d-1) A / r + b) f'` evaluated from closed forms.
fn apply_l(spec: &GeneratorSpec, f: &Expr, r: f64) -> f64 {
    let d1 = f.derivative(Var::R);
    let d2 = d1.derivative(Var::R);
    let a = spec.a(r);
    let geo = if spec.dimension > 1 { a * (spec.dimension as f64 - 1.0) / r } else { 0.0 };
    a * d2.at(r) + (geo + spec.b(r)) * d1.at(r)
}

#[test]
fn h_transform_matches_the_conjugated_operator() {
    // L^h f = (1/h) L(f h) = L0^h f + (Lh/h) f, checked pointwise.
    let spec = GeneratorSpec::power_law(3, 1.5).with_drift(RadialFunction::power_law(0.3, 1.0));
    let triplet = BranchingTriplet::new(RadialFunction::constant(0.2), RadialFunction::constant(1.0), 1.5);
    let h = Expr::parse("1 + r^2").unwrap();
    let (spec_h, trip_h) = h_transform(&spec, &triplet, &h).unwrap();
    let f = Expr::parse("exp(-r) * (2 + r)").unwrap();
    let fh = f.clone().mul(h.clone());
    for r in [0.2, 0.7, 1.0, 2.5, 8.0] {
        let lhs = apply_l(&spec, &fh, r) / h.at(r);
        let lh_over_h = trip_h.beta(r) - triplet.beta(r);
        let rhs = apply_l(&spec_h, &f, r) + lh_over_h * f.at(r);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "r = {r}: {lhs} vs {rhs}");
        let expected_alpha = triplet.alpha(r) * h.at(r).powf(0.5);
        assert!((trip_h.alpha(r) - expected_alpha).abs() <= 1e-14 * expected_alpha);
    }
}

#[test]
fn exit_time_transform_adds_one_over_h() {
    // d = 1, L = d^2/dx^2 on |x| < 1: g = (1 - r^2)/2, M = 1/2.
    let delta = 0.1;
    let spec = GeneratorSpec::new(1, RadialFunction::constant(1.0)).with_domain(Domain::Ball { outer: 1.0 });
    let triplet = BranchingTriplet::new(RadialFunction::constant(-1.0), RadialFunction::constant(1.0), 2.0);
    let h = Expr::c(0.5 + delta).sub(Expr::parse("(1 - r^2) / 2").unwrap());
    let (_, trip) = h_transform(&spec, &triplet, &h).unwrap();
    for r in [0.0, 0.3, 0.6, 0.99] {
        let expected = -1.0 + 1.0 / h.at(r);
        assert!((trip.beta(r) - expected).abs() < 1e-12);
        assert!(trip.beta(r) >= -1.0 + 1.0 / (0.5 + delta) - 1e-12);
    }

    // d = 3, L = ½Δ on |x| < 1: g = (1 - r^2)/3.
    let spec = GeneratorSpec::half_laplacian(3).with_domain(Domain::Ball { outer: 1.0 });
    let h = Expr::c(1.0 / 3.0 + delta).sub(Expr::parse("(1 - r^2) / 3").unwrap());
    let (_, trip) = h_transform(&spec, &triplet, &h).unwrap();
    for r in [0.1, 0.5, 0.9] {
        assert!((trip.beta(r) - (-1.0 + 1.0 / h.at(r))).abs() < 1e-12);
    }
}

#[test]
fn vanishing_h_is_a_domain_error() {
    let spec = GeneratorSpec::power_law(2, 0.0);
    let triplet = BranchingTriplet::critical_binary(1.0);
    for h in ["1 - r", "r", "0"] {
        let h = Expr::parse(h).unwrap();
        assert!(matches!(h_transform(&spec, &triplet, &h), Err(Error::Domain(_))));
    }
    let h = Expr::parse("1 + t").unwrap();
    assert!(matches!(h_transform(&spec, &triplet, &h), Err(Error::Domain(_))));
}

#[test]
fn verdicts_are_invariant_under_h_transforms() {
    let all = fixtures();
    let mut compared = 0;
    for f in all.iter().take(8) {
        let v = classify(&f.scenario).unwrap();
        for h in ["2", "0.5", "1 + r^2", "exp(-r/(1+r))"] {
            let h = Expr::parse(h).unwrap();
            let t = h_transform_scenario(&f.scenario, &h).unwrap();
            let w = classify(&t).unwrap();
            if v.status != Status::Unknown && w.status != Status::Unknown {
                assert_eq!(v.status, w.status, "{} with h = {h}", f.scenario.name);
                compared += 1;
            }
        }
    }
    assert!(compared >= 16);
}

fn alpha_strategy() -> impl Strategy<Value = AlphaProfile> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|value| AlphaProfile::Constant { value }),
        (0.1f64..5.0, -3.0f64..3.0).prop_map(|(scale, exponent)| AlphaProfile::Power { scale, exponent }),
        (0.1f64..5.0, 0.1f64..3.0, 0.5f64..4.0).prop_map(|(scale, rate, exponent)| AlphaProfile::ExpDecay {
            scale,
            rate,
            exponent
        }),
    ]
}

fn beta_strategy() -> impl Strategy<Value = BetaProfile> {
    prop_oneof![
        (-2.0f64..2.0).prop_map(|value| BetaProfile::Constant { value }),
        (0.0f64..2.0, -3.0f64..4.0).prop_map(|(scale, exponent)| BetaProfile::PowerLowerBound { scale, exponent }),
    ]
}

fn scenario_strategy() -> impl Strategy<Value = ScenarioSpec> {
    let full = (1u32..=4, -1.0f64..4.0).prop_map(|(d, m)| GeneratorSpec::power_law(d, (m * 4.0).round() / 4.0));
    let punct = (2u32..=6).prop_map(|d| GeneratorSpec::half_laplacian(d).with_domain(Domain::Punctured { inner: 0.1 }));
    let gen = prop_oneof![3 => full, 1 => punct];
    (gen, alpha_strategy(), beta_strategy(), prop_oneof![Just(2.0), Just(1.5), 1.1f64..2.0])
        .prop_map(|(g, a, b, p)| ScenarioSpec::new(g, a, b, p))
}

/// `beta - shift`, within the same family.
fn lower_beta(b: &BetaProfile, shift: f64) -> BetaProfile {
    match *b {
        BetaProfile::Constant { value } => BetaProfile::Constant { value: value - shift },
        BetaProfile::PowerLowerBound { scale, exponent } => {
            BetaProfile::PowerLowerBound { scale: scale + shift, exponent }
        }
        BetaProfile::Singular { coefficient } => BetaProfile::Singular { coefficient: coefficient - shift },
        ref other => other.clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn certificates_are_sound(s in scenario_strategy()) {
        let v = classify(&s).unwrap();
        if v.status != Status::Unknown {
            prop_assert!(!v.rule.is_empty());
            prop_assert!(v.is_sound_for(&s).unwrap(), "{v:?}");
        }
    }

    #[test]
    fn comparison_is_monotone(s in scenario_strategy(), shift in 0.0f64..1.0, scale in 1.0f64..3.0) {
        // s' has smaller beta and larger alpha, so its solutions are smaller.
        let mut smaller = s.clone();
        smaller.beta = lower_beta(&s.beta, shift);
        smaller.alpha = s.alpha.scaled(scale);
        let (v, w) = (classify(&s).unwrap(), classify(&smaller).unwrap());
        if v.status == Status::Holds {
            prop_assert_ne!(w.status, Status::Fails, "{:?} vs {:?}", v, w);
        }
        if w.status == Status::Fails {
            prop_assert_ne!(v.status, Status::Holds, "{:?} vs {:?}", v, w);
        }
    }
}

#[test]
fn classifier_and_pde_agree_on_punctured_pair_and_full_space() {
    let opts = MaximalOptions::default();
    for name in ["ep2-m0-d3", "punctured-d3", "punctured-d5", "thm3-mild-sink", "thm3-strong-sink"] {
        let f = fixtures().into_iter().find(|f| f.scenario.name == name).unwrap();
        let v = classify(&f.scenario).unwrap();
        let report = maximal_solution(&f.scenario.generator, &f.scenario.triplet().unwrap(), &opts).unwrap();
        let pde = match report.verdict {
            PdeVerdict::Trivial => Status::Holds,
            PdeVerdict::Nontrivial => Status::Fails,
            PdeVerdict::Unknown => Status::Unknown,
        };
        if name.starts_with("thm3") {
            assert!(pde == Status::Unknown || pde == v.status, "{name}: probe {}", report.probe());
        } else {
            assert_eq!(pde, v.status, "{name}: probe {}", report.probe());
        }
    }
}

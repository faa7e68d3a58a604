use super::*;
use crate::fields::BiVar;

fn fq(q: u64) -> FqSpec {
    FqSpec::from_order(q).unwrap()
}

fn curve(q: u64) -> SchemeModel {
    SchemeModel::curve(&fq(q))
}

fn surface(q: u64) -> SchemeModel {
    SchemeModel::local_surface(&fq(q))
}

fn div(model: &SchemeModel, text: &str) -> DivisorData {
    DivisorData::parse(model, text).unwrap()
}

fn job(model: &SchemeModel, text: &str, n: u64, bound: u32) -> ClassGroupJob {
    ClassGroupJob::new(div(model, text), n, bound).unwrap()
}

#[test]
fn rational_functions_parse_and_print() {
    let f3 = fq(3);
    let f = RationalFn::parse(&f3, "(t^2+1)/(t-1)").unwrap();
    assert_eq!(f.to_string(), "(t^2+1)/(t+2)");
    assert_eq!(RationalFn::parse(&f3, "t+5").unwrap().to_string(), "t+2");
    assert_eq!(RationalFn::parse(&f3, "0").unwrap_err().code(), "ZERO_ELEMENT");
    assert_eq!(RationalFn::parse(&f3, "1/0").unwrap_err().code(), "DIVISION_BY_ZERO");
}

/// t maps to its uniformizer classes at 0 and infinity and nothing else;
/// constants away from the divisor map to zero.
#[test]
fn q_map_on_the_line_matches_hand_images() {
    let model = curve(3);
    let d = div(&model, "[0] + [inf]");
    let f3 = fq(3);

    let image = q_map_image(&d, &QMapInput::CurveElement(RationalFn::parse(&f3, "t").unwrap())).unwrap();
    assert_eq!(image.support().len(), 2);
    assert_eq!(image.support()[0].0.to_string(), "(inf, eta)");
    assert_eq!(image.support()[1].0.to_string(), "(t, eta)");

    let one = q_map_image(&d, &QMapInput::CurveElement(RationalFn::parse(&f3, "1").unwrap())).unwrap();
    assert!(one.is_zero());

    // t - 1 is a unit at both divisor places and vanishes at the point t = 1
    let image = q_map_image(&d, &QMapInput::CurveElement(RationalFn::parse(&f3, "t-1").unwrap())).unwrap();
    assert_eq!(image.support().len(), 3);
    let (chain, component) = &image.support()[2];
    assert_eq!(chain.to_string(), "(t+2)");
    assert!(matches!(component, IdeleComponent::Ord(1)));
    // at t = 0 the residue is -1, a pure unit class
    let (chain, component) = &image.support()[1];
    assert_eq!(chain.to_string(), "(t, eta)");
    let IdeleComponent::Sum(sum) = component else { panic!("expected a symbol") };
    assert_eq!(crate::milnor::tame_coordinates(sum, 2).unwrap(), vec![0, 1]);
}

/// C(P^1/F_3, 0)/2 = Z/2 and C(P^1/F_3, [0]+[inf])/2 = (Z/2)^2, with the
/// doubled divisor giving the same group as its reduction.
#[test]
fn class_groups_on_the_line_match_hand_computations() {
    let model = curve(3);
    let empty = class_group(&job(&model, "0", 2, 3)).unwrap();
    assert_eq!(empty.factors(), vec![2]);
    assert!(empty.certificate().stable);

    let two = class_group(&job(&model, "[0] + [inf]", 2, 3)).unwrap();
    assert_eq!(two.factors(), vec![2, 2]);

    let doubled = class_group(&job(&model, "2[0] + [inf]", 2, 3)).unwrap();
    assert_eq!(doubled.factors(), two.factors());
    assert!(doubled.slots().len() > two.slots().len());
    assert!(doubled.group().is_isomorphic(two.group()).unwrap());
}

/// Points of degree d land on d times the class of a rational point.
#[test]
fn point_classes_respect_the_degree_map() {
    let model = curve(2);
    let result = class_group(&job(&model, "0", 3, 2)).unwrap();
    let f2 = fq(2);
    let inf = result
        .slots()
        .iter()
        .position(|s| matches!(s, IdeleSlot::Point(p) if p.to_string() == "inf"))
        .unwrap();
    for h in PolyFq::monic_irreducibles(&f2, 2) {
        let deg = h.degree().unwrap() as i64;
        let place = crate::chains::CurvePlace::Finite(h);
        let idx = result
            .slots()
            .iter()
            .position(|s| *s == IdeleSlot::Point(SchemePoint::Place(place.clone())))
            .unwrap();
        let lhs = result.express(&[(idx, 1)]);
        let rhs = result.express(&[(inf, deg)]);
        assert_eq!(lhs, rhs);
    }
}

/// Principal functions express to zero in the class group: the image of the
/// q-map on global functions lands in the relation lattice.
#[test]
fn principal_ideles_vanish_in_the_class_group() {
    let model = curve(3);
    let d = div(&model, "[0] + [inf]");
    let result = class_group(&ClassGroupJob::new(d.clone(), 2, 3).unwrap()).unwrap();
    let f3 = fq(3);
    for text in ["t", "t-1", "t^2+1", "(t+1)/(t+2)", "2*t^2+t", "(t^2+t+2)/(t^3+2*t+1)"] {
        let f = RationalFn::parse(&f3, text).unwrap();
        let image = q_map_image(&d, &QMapInput::CurveElement(f)).unwrap();
        let coords = result.express_idele(&image).unwrap();
        assert!(coords.iter().all(|&c| c == 0), "nonzero class for {text}: {coords:?}");
    }
    // a single point is not principal here
    let lonely = IdeleElement::new(
        d.clone(),
        vec![(
            ChainRecord::new(
                &model,
                vec![SchemePoint::Place(crate::chains::CurvePlace::parse(&f3, "t+1").unwrap())],
                ChainKind::ParshinOnPair,
                &d,
            )
            .unwrap(),
            IdeleComponent::Ord(1),
        )],
    );
    let coords = result.express_idele(&lonely).unwrap();
    assert!(coords.iter().any(|&c| c != 0));
}

#[test]
fn ray_class_oracle_agrees_with_hand_values_and_pipeline() {
    let model = curve(3);
    let oracle = ray_class_oracle(&div(&model, "[0] + [inf]"), 2).unwrap();
    assert_eq!(oracle.invariant_factors().factors_u64().unwrap(), vec![2, 2]);

    let trivial = ray_class_oracle(&div(&curve(2), "0"), 3).unwrap();
    assert_eq!(trivial.invariant_factors().factors_u64().unwrap(), vec![3]);

    for (q, dtext, n) in [
        (5u64, "2[0]", 4u64),
        (2, "[0] + [inf]", 3),
        (3, "[t^2+1]", 4),
        (2, "3[inf]", 3),
    ] {
        let model = curve(q);
        let d = div(&model, dtext);
        let oracle = ray_class_oracle(&d, n).unwrap();
        let pipeline = class_group(&ClassGroupJob::new(d, n, 4).unwrap()).unwrap();
        assert!(
            pipeline.group().is_isomorphic(&oracle).unwrap(),
            "q={q} D={dtext} n={n}: pipeline {:?} oracle {:?}",
            pipeline.factors(),
            oracle.invariant_factors().factors_u64()
        );
    }
}

#[test]
fn transition_maps_are_surjective() {
    let model = curve(3);
    let fine = class_group(&job(&model, "2[0] + [inf]", 2, 3)).unwrap();
    for coarse_text in ["[0]", "[0] + [inf]", "0"] {
        let coarse = class_group(&job(&model, coarse_text, 2, 3)).unwrap();
        let map = transition_map(&fine, &coarse).unwrap();
        assert!(map.cokernel().is_trivial(), "not surjective onto {coarse_text}");
    }
    // mismatched moduli are refused
    let other = class_group(&job(&model, "[0]", 4, 3)).unwrap();
    assert_eq!(transition_map(&fine, &other).unwrap_err().code(), "MIXED_MODULUS");
    // non-dividing divisors are refused
    let disjoint = class_group(&job(&model, "[1]", 2, 3)).unwrap();
    assert_eq!(transition_map(&fine, &disjoint).unwrap_err().code(), "INVALID_JOB");
}

#[test]
fn truncation_failure_surfaces_as_not_stabilized() {
    let model = curve(3);
    let err = class_group(&job(&model, "0", 2, 1)).unwrap_err();
    assert_eq!(err.code(), "NOT_STABILIZED");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn modulus_levels_match_multiplicities() {
    let model = curve(3);
    let spec = ModulusSubgroupSpec::new(&div(&model, "2[0] + [inf]")).unwrap();
    let levels: Vec<(String, u64)> = spec
        .levels()
        .iter()
        .map(|(c, l)| (c.to_string(), *l))
        .collect();
    assert_eq!(levels, vec![("(inf, eta)".to_string(), 1), ("(t, eta)".to_string(), 2)]);

    let smodel = surface(3);
    let spec = ModulusSubgroupSpec::new(&div(&smodel, "3[s] + [t]")).unwrap();
    let levels: Vec<(String, u64)> = spec
        .levels()
        .iter()
        .map(|(c, l)| (c.to_string(), *l))
        .collect();
    assert_eq!(
        levels,
        vec![("(m, (s), eta)".to_string(), 3), ("(m, (t), eta)".to_string(), 1)]
    );
}

#[test]
fn class_group_jobs_roundtrip_through_json() {
    let text = r#"{"scheme":{"kind":"p1","q":3},"divisor":"2[0] + [inf]","n":2,"degree_bound":3}"#;
    let job: ClassGroupJob = serde_json::from_str(text).unwrap();
    assert_eq!(job.divisor().to_string(), "[inf] + 2[t]");
    assert_eq!(job.n(), 2);
    let encoded = serde_json::to_string(&job).unwrap();
    let back: ClassGroupJob = serde_json::from_str(&encoded).unwrap();
    assert_eq!(back.divisor(), job.divisor());
    assert_eq!(back.degree_bound(), job.degree_bound());

    // invalid jobs are rejected up front
    let model = curve(3);
    assert!(ClassGroupJob::new(div(&model, "[0]"), 1, 3).is_err());
    assert_eq!(
        ClassGroupJob::new(div(&model, "[0]"), 3, 3).unwrap_err().code(),
        "WILD_COEFFICIENTS"
    );
    assert!(ClassGroupJob::new(div(&model, "[0]"), 2, 0).is_err());
}

#[test]
fn surface_class_groups_are_stable_and_reduction_invariant() {
    let model = surface(3);
    let both = class_group(&job(&model, "[s] + [t]", 2, 2)).unwrap();
    assert!(both.certificate().stable);
    let doubled = class_group(&job(&model, "2[s] + [t]", 2, 2)).unwrap();
    assert_eq!(both.factors(), doubled.factors());
    assert!(!both.factors().is_empty());

    // determinism: recomputation gives identical output
    let again = class_group(&job(&model, "[s] + [t]", 2, 2)).unwrap();
    assert_eq!(again.factors(), both.factors());
    let labels: Vec<String> = both.surviving_slots().iter().map(|s| s.label()).collect();
    let labels_again: Vec<String> = again.surviving_slots().iter().map(|s| s.label()).collect();
    assert_eq!(labels, labels_again);
}

#[test]
fn surface_transitions_push_words_onto_residue_classes() {
    let model = surface(3);
    let fine = class_group(&job(&model, "[s] + [t]", 2, 2)).unwrap();
    let coarse = class_group(&job(&model, "[s]", 2, 2)).unwrap();
    let map = transition_map(&fine, &coarse).unwrap();
    assert!(map.cokernel().is_trivial());
}

#[test]
fn surface_q_map_splits_into_diagonal_and_residue_parts() {
    let model = surface(3);
    let f3 = fq(3);
    let s = BiLaurentElement::var(&f3, BiVar::S);
    let t = BiLaurentElement::var(&f3, BiVar::T);

    let d = div(&model, "[t]");
    let image = q_map_image(&d, &QMapInput::SurfaceSymbol(s.clone(), t.clone())).unwrap();
    assert_eq!(image.support().len(), 2);
    assert_eq!(image.support()[0].0.to_string(), "(m, (t), eta)");
    assert_eq!(image.support()[1].0.to_string(), "(m, (s))");

    // {c, c} has no residue along either axis: only the diagonal part stays
    let c = BiLaurentElement::from_scalar_elem(&f3.from_scalar(2)).unwrap();
    let image = q_map_image(&d, &QMapInput::SurfaceSymbol(c.clone(), c.clone())).unwrap();
    assert_eq!(image.support().len(), 1);
    assert_eq!(image.support()[0].0.to_string(), "(m, (t), eta)");

    // divisor along a graph prime: the diagonal component is the exact
    // substituted pair
    let dg = div(&model, "[t-s^2]");
    let image = q_map_image(&dg, &QMapInput::SurfaceSymbol(s, t)).unwrap();
    assert_eq!(image.support().len(), 3);
    assert!(image.support()[0].0.to_string().contains("eta"));
}

#[test]
fn surface_class_group_covers_graph_primes() {
    let model = surface(3);
    let result = class_group(&job(&model, "[t-s^2]", 2, 2)).unwrap();
    assert!(result.certificate().stable);
    // the away-axis K_1 slots are present and killed
    assert!(result.slots().iter().any(|s| matches!(s, IdeleSlot::UPi(_))));
    assert!(result
        .surviving_slots()
        .iter()
        .all(|s| !matches!(s, IdeleSlot::UPi(_) | IdeleSlot::UGamma(_))));
}

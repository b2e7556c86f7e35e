mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use seqc_core::validate::check_mutex_schedulability;
use seqc_core::{validate, FindingCode, Program, RobotClassDsl};
use seqc_testkit::{mutex_violations_brute, GenParams};

fn static_pairs(p: &Program, dsl: &RobotClassDsl) -> BTreeSet<(String, String)> {
    check_mutex_schedulability(p, dsl)
        .into_iter()
        .map(|f| {
            assert_eq!(f.code, FindingCode::MutexViolation);
            (f.subjects[0].clone(), f.subjects[1].clone())
        })
        .collect()
}

fn mutex_heavy() -> GenParams {
    GenParams {
        mutex_probability: 0.5,
        ..GenParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn static_check_agrees_with_schedule_enumeration(seed in any::<u64>()) {
        let (dsl, p) = common::generated(seed, &mutex_heavy());
        prop_assert_eq!(static_pairs(&p, &dsl), mutex_violations_brute(&p, &dsl));
    }

    #[test]
    fn adding_an_edge_never_adds_a_violation(seed in any::<u64>(), pick in any::<(usize, usize)>()) {
        let (dsl, p) = common::generated(seed, &mutex_heavy());
        let order: Vec<String> = p.dependency_graph().unwrap().topological_order().into_iter().map(String::from).collect();
        prop_assume!(order.len() >= 2);
        let i = pick.0 % order.len();
        let j = pick.1 % order.len();
        prop_assume!(i != j);
        let (from, to) = (order[i.min(j)].clone(), order[i.max(j)].clone());
        let target = p.action(&to).unwrap().clone().after(from).unwrap();
        let q = p.to_builder().replace_action(target).build().unwrap();
        let before = static_pairs(&p, &dsl);
        let after = static_pairs(&q, &dsl);
        prop_assert!(after.is_subset(&before), "{:?} not within {:?}", after, before);
    }

    #[test]
    fn single_resource_never_violates(seed in any::<u64>()) {
        let params = GenParams { max_resources: 1, ..mutex_heavy() };
        let (dsl, p) = common::generated(seed, &params);
        prop_assert!(static_pairs(&p, &dsl).is_empty());
    }

    #[test]
    fn validation_is_deterministic(seed in any::<u64>()) {
        let (dsl, p) = common::generated(seed, &mutex_heavy());
        prop_assert_eq!(validate(&p, &dsl), validate(&p.clone(), &dsl));
        let report = validate(&p, &dsl);
        prop_assert_eq!(report.ok(), report.errors().next().is_none());
    }
}

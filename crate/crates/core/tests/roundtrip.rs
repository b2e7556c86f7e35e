mod common;

use proptest::prelude::*;
use seqc_core::{load_dsl, load_program, save_dsl, save_program};
use seqc_testkit::GenParams;

const DSLS: &[&str] = &["manipulator", "service_robot", "vacuum", "nxt", "generic"];

const PROGRAMS: &[(&str, &str)] = &[
    ("fork_join", "generic"),
    ("fork_join_serial", "generic"),
    ("empty", "generic"),
    ("grasp", "service_robot"),
    ("grasp_parallel", "service_robot"),
    ("vacuum_parallel", "vacuum"),
    ("vacuum_ordered", "vacuum"),
    ("nxt_braitenberg", "nxt"),
];

#[test]
fn dsl_fixtures_survive_save_and_load() {
    for name in DSLS {
        let dsl = common::dsl(&format!("dsl/{name}.xml"));
        let saved = save_dsl(&dsl);
        assert_eq!(load_dsl(&saved).unwrap(), dsl, "{name}");
        assert_eq!(
            save_dsl(&load_dsl(&saved).unwrap()),
            saved,
            "{name}: save is not stable"
        );
    }
}

#[test]
fn program_fixtures_survive_save_and_load() {
    for (name, dsl_name) in PROGRAMS {
        let dsl = common::dsl(&format!("dsl/{dsl_name}.xml"));
        let p = common::program(&format!("programs/{name}.xml"), &dsl);
        let saved = save_program(&p);
        assert_eq!(load_program(&saved, &dsl).unwrap(), p, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let (dsl, p) = common::generated(seed, &GenParams::default());
        let dsl2 = load_dsl(&save_dsl(&dsl)).unwrap();
        prop_assert_eq!(&dsl2, &dsl);
        prop_assert_eq!(load_program(&save_program(&p), &dsl2).unwrap(), p);
    }
}

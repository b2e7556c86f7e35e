#![allow(dead_code)]

use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::SeedableRng;
use seqc_core::{load_dsl, load_program, Program, RobotClassDsl};
use seqc_testkit::{random_dsl, random_program, GenParams};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn dsl(rel: &str) -> RobotClassDsl {
    load_dsl(&read(rel)).unwrap()
}

pub fn program(rel: &str, dsl: &RobotClassDsl) -> Program {
    load_program(&read(rel), dsl).unwrap()
}

pub fn generated(seed: u64, params: &GenParams) -> (RobotClassDsl, Program) {
    let mut rng = StdRng::seed_from_u64(seed);
    let dsl = random_dsl(&mut rng, params);
    let program = random_program(&mut rng, &dsl, params);
    (dsl, program)
}

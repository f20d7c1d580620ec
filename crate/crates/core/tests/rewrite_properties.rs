//! Simplifier soundness over random well-formed programs.

use cubeql_core::fixtures::asylum_cube;
use cubeql_core::instance::CubeInstance;
use cubeql_core::random::{random_program, GenConfig};
use cubeql_core::soundness::check_program;
use cubeql_core::ssb::generate_ssb_toy;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::LazyLock;

static SSB: LazyLock<CubeInstance> = LazyLock::new(|| generate_ssb_toy(10_000, 42));
static ASYLUM: LazyLock<CubeInstance> = LazyLock::new(|| asylum_cube(true));

fn check(cube: &CubeInstance, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tp = random_program(cube, &GenConfig::default(), &mut rng);
    let out = check_program(cube, &tp, &mut rng);
    prop_assert!(out.failures.is_empty(), "{}\n{:?}", tp.program, out.failures);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rewrites_are_sound_on_the_ssb_toy(seed in any::<u64>()) {
        check(&SSB, seed)?;
    }

    #[test]
    fn rewrites_are_sound_on_the_asylum_cube(seed in any::<u64>()) {
        check(&ASYLUM, seed)?;
    }
}

/// Every check must actually get exercised on the generated corpus, and the
/// simplifier must have something to do on a good share of it.
#[test]
fn corpus_exercises_every_check() {
    use cubeql_core::soundness::Check;
    use std::collections::BTreeMap;
    let mut ran: BTreeMap<Check, usize> = BTreeMap::new();
    let mut shrunk = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let tp = random_program(&SSB, &GenConfig::default(), &mut rng);
        let s = cubeql_core::simplify::simplify(&tp, &SSB.schema).unwrap();
        if s.program.len() < tp.len() {
            shrunk += 1;
        }
        let out = check_program(&SSB, &tp, &mut rng);
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        for c in out.ran {
            *ran.entry(c).or_default() += 1;
        }
    }
    for c in Check::ALL {
        assert!(ran.get(&c).copied().unwrap_or(0) >= 20, "{c:?} ran {:?} times", ran.get(&c));
    }
    assert!(shrunk >= 30, "only {shrunk} programs simplified");
}

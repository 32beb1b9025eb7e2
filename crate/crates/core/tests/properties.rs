mod common;

use proptest::prelude::*;

use common::check_run;
use x10clocks_core::counter::lockstep_compare;
use x10clocks_core::explore::{explore, ExploreConfig};
use x10clocks_core::runtime::{run_observed, RandomPolicy, SchedulerPolicy};
use x10clocks_core::statecheck::typecheck_state;
use x10clocks_core::testgen::{generate, GenConfig};
use x10clocks_core::{check_program, format, load, parse, Verdict};

fn small() -> GenConfig {
    GenConfig {
        max_depth: 3,
        max_statements: 8,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_programs_are_well_typed(seed in any::<u64>()) {
        let e = generate(seed, GenConfig::default());
        prop_assert!(check_program(&e).is_ok(), "{}", format(&e));
        let back = parse(&format(&e)).unwrap();
        prop_assert!(check_program(&back).is_ok());
    }

    #[test]
    fn well_typed_runs_finish_and_keep_invariants(prog in any::<u64>(), sched in any::<u64>()) {
        let e = generate(prog, GenConfig::default());
        let r = check_run(&e, sched, 10_000).map_err(TestCaseError::fail)?;
        prop_assert!(matches!(r.verdict, Verdict::Finished(_)), "{}: {}", r.verdict, format(&e));
    }

    #[test]
    fn typability_is_preserved(prog in any::<u64>(), sched in any::<u64>()) {
        let e = generate(prog, GenConfig::default());
        let mut policy = RandomPolicy::new(sched);
        let mut check = |s: &x10clocks_core::State| typecheck_state(s).map_err(|x| x.to_string());
        if let Err(f) = run_observed(load(&e), &mut policy, 10_000, &mut check) {
            return Err(TestCaseError::fail(format!("{}\n{}\n{}", f.message, f.state, format(&e))));
        }
    }

    #[test]
    fn counters_agree_with_sets(prog in any::<u64>(), sched in any::<u64>()) {
        let e = generate(prog, GenConfig::default());
        let r = lockstep_compare(&e, SchedulerPolicy::Random(sched), 10_000);
        prop_assert!(r.agrees(), "{:?}\n{}", r.divergence, format(&e));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn small_programs_explore_clean(prog in any::<u64>()) {
        let e = generate(prog, small());
        let cfg = ExploreConfig { max_states: 20_000, ..ExploreConfig::default() };
        let r = explore(&e, cfg);
        prop_assert!(r.errors.is_empty(), "{}\n{}", r, format(&e));
        prop_assert!(r.deadlocks.is_empty(), "{}\n{}", r, format(&e));
        prop_assert_eq!(r.digest_collisions, 0);
    }
}

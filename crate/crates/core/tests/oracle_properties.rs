mod common;

use common::{random_case, rel_close, solve_case};
use edrelax::casekit::{build_counterexample_case, Target};
use edrelax::oracle::{
    compare, enumerate, enumerate_patterns, pattern_count, CompareTolerances, OracleOptions,
    PatternAssignment,
};
use edrelax::relaxation::verify_exactness;
use edrelax::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relaxation_bounds_the_oracle(seed in 0u64..100_000) {
        let target = Target::ALL[(seed % 5) as usize];
        let case = random_case(seed, target);
        let relaxed = solve_case(&case);
        let oracle = enumerate(&case, &OracleOptions::default()).unwrap();
        prop_assert_eq!(u128::from(oracle.patterns_enumerated), pattern_count(&case));
        prop_assert!(relaxed.objective <= oracle.best_objective + 1e-6 * oracle.best_objective.abs().max(1.0));

        let cmp = compare(&relaxed, &oracle, &CompareTolerances::default()).unwrap();
        let exact = verify_exactness(&relaxed, 1e-7).exact;
        prop_assert_eq!(cmp.exact, exact && cmp.relative_gap <= 1e-6);
        if exact {
            prop_assert!(cmp.relative_gap <= 1e-6, "exact dispatch with gap {}", cmp.relative_gap);
        }
    }

    #[test]
    fn own_pattern_reproduces_exact_dispatch(seed in 0u64..100_000) {
        let case = random_case(seed, Target::SatisfyC);
        let relaxed = solve_case(&case);
        prop_assume!(verify_exactness(&relaxed, 1e-7).exact);
        let own = PatternAssignment::from_solution(&relaxed);
        let oracle = enumerate_patterns(&case, &[own.bits], &OracleOptions::default()).unwrap();
        prop_assert!(rel_close(oracle.best_objective, relaxed.objective, 1e-6));
    }

    #[test]
    fn adding_patterns_never_raises_the_best(seed in 0u64..100_000, keep in prop::collection::vec(any::<bool>(), 64)) {
        let case = random_case(seed, Target::Unconstrained);
        let count = pattern_count(&case) as u64;
        let subset: Vec<u64> = (0..count).filter(|&p| keep[(p % 64) as usize]).collect();
        let mut superset = subset.clone();
        superset.extend((0..count).filter(|&p| !keep[(p % 64) as usize]).take(3));
        superset.sort_unstable();
        let options = OracleOptions::default();
        let big = enumerate_patterns(&case, &superset, &options).unwrap();
        match enumerate_patterns(&case, &subset, &options) {
            Ok(small) => prop_assert!(big.best_objective <= small.best_objective + 1e-9 * small.best_objective.abs().max(1.0)),
            Err(Error::AllPatternsInfeasible) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

#[test]
fn counterexample_has_a_positive_gap() {
    let case = build_counterexample_case();
    let relaxed = solve_case(&case);
    let oracle = enumerate(&case, &OracleOptions::default()).unwrap();
    let cmp = compare(&relaxed, &oracle, &CompareTolerances::default()).unwrap();
    assert!(cmp.gap > 0.0);
    assert!(!cmp.exact);
    let w = cmp.witness.unwrap();
    assert!(w.p_ch > 0.0 && w.p_dc > 0.0);
}

#[test]
fn budget_is_enforced_before_solving() {
    let case = build_counterexample_case();
    let options = OracleOptions {
        limit: 15,
        ..OracleOptions::default()
    };
    match enumerate(&case, &options) {
        Err(Error::BudgetExceeded { patterns, limit }) => {
            assert_eq!(patterns, 16);
            assert_eq!(limit, 15);
        }
        other => panic!("expected budget error, got {other:?}"),
    }
}

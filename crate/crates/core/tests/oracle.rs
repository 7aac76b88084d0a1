//! Cross-check of the two decision routes: the monotonicity verdict must
//! coincide with the existence of a coordination-free model found by
//! exhaustive search, seed by seed.

use coordcrit_core::oracle::run_oracle_case;

#[test]
fn monotonicity_equals_search_existence_over_500_seeds() {
    let mut monotone = 0usize;
    let mut non_monotone = 0usize;
    for seed in 0..500u64 {
        let run = run_oracle_case(seed).unwrap();
        assert!(
            run.agree(),
            "seed {seed}: monotone={} but search existence={}",
            run.monotone,
            run.exists
        );
        if run.monotone {
            monotone += 1;
        } else {
            non_monotone += 1;
        }
    }
    // The sample must exercise both sides of the equivalence.
    assert!(monotone >= 50, "only {monotone} monotone cases");
    assert!(non_monotone >= 50, "only {non_monotone} non-monotone cases");
}

#[test]
fn search_example_is_coordination_free_when_it_exists() {
    use coordcrit_core::implementation::is_coordination_free;
    for seed in 0..40u64 {
        let case = coordcrit_core::oracle::random_table_case(seed).unwrap();
        let run = run_oracle_case(seed).unwrap();
        if let Some(model) = &run.search.example {
            let report = is_coordination_free(model, &case.spec, &case.scenario).unwrap();
            assert!(
                report.coordination_free(),
                "seed {seed}: search returned a model that fails the check"
            );
        }
    }
}

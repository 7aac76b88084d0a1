//! Random table-driven specifications for cross-checking the monotonicity
//! verdict against exhaustive implementation search.
//!
//! Generated specifications assign each domain outcome to at most one
//! history, so obs sets are pairwise disjoint across histories. On that
//! class the two checks must agree exactly: an outcome admitted only at one
//! history can neither be re-exposed elsewhere nor silently dropped by
//! shrinking the realizable set, which removes the degenerate freedom that
//! shared outcomes would give the search. Disagreements on arbitrary
//! user-supplied specifications are surfaced by the search report instead.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::history::{enumerate_prefixes, Event, EventKind, EventUniverse, Scenario};
use crate::implementation::{exhaustive_impl_search, SearchReport};
use crate::outcome::{domain_from_relation, Outcome};
use crate::spec::{check_future_monotonicity, ObsTable, Specification, Verdict};
use crate::Result;

/// A generated specification/scenario pair.
pub struct OracleCase {
    pub spec: Specification,
    pub scenario: Scenario,
}

/// One generated case, both verdicts, and whether they agree.
pub struct OracleRun {
    pub seed: u64,
    pub monotone: bool,
    pub exists: bool,
    pub verdict: Verdict,
    pub search: SearchReport,
}

impl OracleRun {
    pub fn agree(&self) -> bool {
        self.monotone == self.exists
    }
}

/// Builds the random table specification for a seed.
pub fn random_table_case(seed: u64) -> Result<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Universe: two events. Inputs stay causally minimal so input prefixes
    // sit below their admissible cones.
    let k1 = if rng.gen_bool(0.4) {
        EventKind::Input
    } else {
        EventKind::Internal
    };
    let k2 = if rng.gen_bool(0.4) {
        EventKind::Input
    } else {
        EventKind::Internal
    };
    let edge_allowed = k2 == EventKind::Internal || k1 == EventKind::Input;
    let chain = edge_allowed && rng.gen_bool(0.5);
    let events = vec![
        Event::new("e1", k1, "p", "step"),
        Event::new("e2", k2, "q", "step"),
    ];
    let edges: Vec<(&str, &str)> = if chain { vec![("e1", "e2")] } else { vec![] };
    let universe = EventUniverse::new(events, &edges, &[])?;
    let scenario = Scenario::from_universe(&format!("oracle-{seed}"), Arc::clone(&universe))?;

    // Domain: 2..=4 outcomes under a random partial order.
    let n = rng.gen_range(2..=4usize);
    let elements: Vec<Outcome> = (0..n as u64).map(Outcome::Num).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.5) {
                pairs.push((Outcome::Num(i as u64), Outcome::Num(j as u64)));
            }
        }
    }
    // Edges run low-to-high only, so the closure is antisymmetric.
    let domain = domain_from_relation(elements, &pairs)?;

    // Disjoint obs: each outcome lands at one history or nowhere.
    let prefixes = enumerate_prefixes(&scenario);
    let mut entries: BTreeMap<String, BTreeSet<Outcome>> = prefixes
        .iter()
        .map(|p| (p.fingerprint(), BTreeSet::new()))
        .collect();
    for i in 0..n {
        let slot = rng.gen_range(0..=prefixes.len());
        if slot < prefixes.len() {
            entries
                .get_mut(&prefixes[slot].fingerprint())
                .unwrap()
                .insert(Outcome::Num(i as u64));
        }
    }

    let spec = Specification::new(
        &format!("oracle-{seed}"),
        universe,
        domain,
        Arc::new(ObsTable { entries }),
    );
    Ok(OracleCase { spec, scenario })
}

/// Runs both checks for one seed.
pub fn run_oracle_case(seed: u64) -> Result<OracleRun> {
    let case = random_table_case(seed)?;
    let verdict = check_future_monotonicity(&case.spec, &case.scenario)?;
    let search = exhaustive_impl_search(&case.spec, &case.scenario)?;
    Ok(OracleRun {
        seed,
        monotone: verdict.monotone,
        exists: search.exists,
        verdict,
        search,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_cases_are_well_formed() {
        for seed in 0..50 {
            let case = random_table_case(seed).unwrap();
            let prefixes = enumerate_prefixes(&case.scenario);
            assert!(prefixes.len() <= 4);
            for p in &prefixes {
                let obs = case.spec.obs(p).unwrap();
                assert!(obs.len() <= 4);
            }
        }
    }

    #[test]
    fn both_verdict_values_occur() {
        let mut monotone = 0;
        let mut non_monotone = 0;
        for seed in 0..100 {
            let run = run_oracle_case(seed).unwrap();
            if run.monotone {
                monotone += 1;
            } else {
                non_monotone += 1;
            }
        }
        assert!(monotone > 0);
        assert!(non_monotone > 0);
    }
}

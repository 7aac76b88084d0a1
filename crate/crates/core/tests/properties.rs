//! Structural invariants over randomly generated scenarios, domains, and
//! table specifications.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use coordcrit_core::history::{
    concurrent, enumerate_extensions, enumerate_prefixes, is_future, validate_history, Event,
    EventKind, EventUniverse, History, Scenario,
};
use coordcrit_core::implementation::{generic_impl, poss_impl, ExposurePolicy, ScenarioContext};
use coordcrit_core::outcome::{make_domain, DomainKind, Outcome};
use coordcrit_core::spec::{
    admissible, check_future_monotonicity, check_future_monotonicity_opts, is_future_consistent,
    poss, poss_relative, CheckOptions, ObsTable, Specification,
};

/// Random scenario: 1..=4 base events (input or internal) with a random
/// acyclic edge set, plus up to one message pair.
fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (
        1usize..=4,
        proptest::collection::vec(any::<bool>(), 4),
        proptest::collection::vec(any::<bool>(), 6),
        any::<bool>(),
    )
        .prop_map(|(n, kinds, edge_bits, with_msg)| {
            let mut events = Vec::new();
            for i in 0..n {
                let kind = if kinds[i] {
                    EventKind::Input
                } else {
                    EventKind::Internal
                };
                events.push(Event::new(&format!("e{i}"), kind, &format!("p{}", i % 2), "step"));
            }
            let mut edges = Vec::new();
            let mut bit = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if edge_bits[bit % edge_bits.len()] {
                        // Inputs stay causally minimal.
                        if events[j].kind != EventKind::Input {
                            edges.push((format!("e{i}"), format!("e{j}")));
                        }
                    }
                    bit += 1;
                }
            }
            let mut msg = Vec::new();
            if with_msg {
                events.push(Event::new("snd", EventKind::Send, "p0", "m"));
                events.push(Event::new("rcv", EventKind::Recv, "p1", "m"));
                msg.push(("snd".to_string(), "rcv".to_string()));
            }
            let universe = EventUniverse::from_parts(events, edges, msg).unwrap();
            Scenario::from_universe("random", universe).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prefixes_are_well_formed(s in scenario_strategy()) {
        for p in enumerate_prefixes(&s) {
            prop_assert!(validate_history(&p).is_valid());
        }
    }

    #[test]
    fn future_is_a_partial_order_on_prefixes(s in scenario_strategy()) {
        let prefixes = enumerate_prefixes(&s);
        for a in &prefixes {
            prop_assert!(is_future(a, a).unwrap());
        }
        for a in &prefixes {
            for b in &prefixes {
                if is_future(a, b).unwrap() && is_future(b, a).unwrap() {
                    prop_assert_eq!(a, b);
                }
                for c in &prefixes {
                    if is_future(a, b).unwrap() && is_future(b, c).unwrap() {
                        prop_assert!(is_future(a, c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn extensions_equal_future_filter(s in scenario_strategy()) {
        let prefixes = enumerate_prefixes(&s);
        for h in &prefixes {
            let exts = enumerate_extensions(h, &s).unwrap();
            let filtered: Vec<History> = prefixes
                .iter()
                .filter(|p| is_future(h, p).unwrap())
                .cloned()
                .collect();
            prop_assert_eq!(exts, filtered);
        }
    }

    #[test]
    fn input_projection_preserves_futures(s in scenario_strategy()) {
        let prefixes = enumerate_prefixes(&s);
        for h in &prefixes {
            for h2 in &prefixes {
                if is_future(h, h2).unwrap() {
                    prop_assert!(is_future(&h.input_projection(), &h2.input_projection()).unwrap());
                }
            }
        }
    }

    #[test]
    fn concurrency_is_symmetric_and_irreflexive(s in scenario_strategy()) {
        let ground = &s.ground;
        let ids = ground.sorted_ids();
        for a in &ids {
            prop_assert!(!concurrent(ground, a, a).unwrap());
            for b in &ids {
                prop_assert_eq!(
                    concurrent(ground, a, b).unwrap(),
                    concurrent(ground, b, a).unwrap()
                );
            }
        }
    }
}

#[test]
fn prefix_counts_for_chains_and_antichains() {
    for n in 1..=6usize {
        let chain_events: Vec<Event> = (0..n)
            .map(|i| Event::new(&format!("e{i}"), EventKind::Internal, "p", ""))
            .collect();
        let chain_edges: Vec<(String, String)> = (1..n)
            .map(|i| (format!("e{}", i - 1), format!("e{i}")))
            .collect();
        let u = EventUniverse::from_parts(chain_events, chain_edges, Vec::new()).unwrap();
        let s = Scenario::from_universe("chain", u).unwrap();
        assert_eq!(enumerate_prefixes(&s).len(), n + 1);

        let anti_events: Vec<Event> = (0..n)
            .map(|i| Event::new(&format!("e{i}"), EventKind::Internal, "p", ""))
            .collect();
        let u = EventUniverse::from_parts(anti_events, Vec::new(), Vec::new()).unwrap();
        let s = Scenario::from_universe("anti", u).unwrap();
        assert_eq!(enumerate_prefixes(&s).len(), 1 << n);
    }
}

/// Random table specification over a random scenario: obs sets drawn freely
/// from a small numeric diamond domain (no disjointness restriction).
fn table_spec_strategy() -> impl Strategy<Value = (Specification, Scenario)> {
    (scenario_strategy(), proptest::collection::vec(0u8..16, 64)).prop_map(|(s, picks)| {
        let domain = make_domain(DomainKind::Numeric { max: 3 }).unwrap();
        let prefixes = enumerate_prefixes(&s);
        let mut entries = BTreeMap::new();
        for (i, p) in prefixes.iter().enumerate() {
            let mask = picks[i % picks.len()];
            let outcomes: std::collections::BTreeSet<Outcome> = (0..4)
                .filter(|k| mask & (1 << k) != 0)
                .map(|k| Outcome::Num(k as u64))
                .collect();
            entries.insert(p.fingerprint(), outcomes);
        }
        let spec = Specification::new(
            "random-table",
            Arc::clone(s.universe()),
            domain,
            Arc::new(ObsTable { entries }),
        );
        (spec, s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn obs_is_contained_in_poss((spec, s) in table_spec_strategy()) {
        for h in enumerate_prefixes(&s) {
            let obs = spec.obs(&h).unwrap();
            let poss = poss(&spec, &h, &s).unwrap();
            prop_assert!(obs.is_subset(&poss));
        }
    }

    #[test]
    fn poss_is_antitone((spec, s) in table_spec_strategy()) {
        let prefixes = enumerate_prefixes(&s);
        for h1 in &prefixes {
            for h2 in &prefixes {
                if is_future(h1, h2).unwrap() {
                    let p1 = poss(&spec, h1, &s).unwrap();
                    let p2 = poss(&spec, h2, &s).unwrap();
                    prop_assert!(p2.is_subset(&p1));
                }
            }
        }
    }

    #[test]
    fn verdict_matches_future_consistency_scan((spec, s) in table_spec_strategy()) {
        let verdict = check_future_monotonicity(&spec, &s).unwrap();
        let mut all_consistent = true;
        for h in enumerate_prefixes(&s) {
            for o in spec.obs(&h).unwrap() {
                let (ok, _) = is_future_consistent(&spec, &h, &o, &s).unwrap();
                all_consistent &= ok;
            }
        }
        prop_assert_eq!(verdict.monotone, all_consistent);
    }

    #[test]
    fn verdict_is_order_insensitive((spec, s) in table_spec_strategy()) {
        let a = check_future_monotonicity(&spec, &s).unwrap();
        let b = check_future_monotonicity_opts(
            &spec,
            &s,
            CheckOptions { jobs: 1, reversed: true },
        )
        .unwrap();
        prop_assert_eq!(&a.witnesses, &b.witnesses);
        let c = check_future_monotonicity_opts(
            &spec,
            &s,
            CheckOptions { jobs: 4, reversed: false },
        )
        .unwrap();
        prop_assert_eq!(&a.witnesses, &c.witnesses);
    }

    #[test]
    fn relative_possibility_with_empty_inputs_is_plain_possibility((spec, s) in table_spec_strategy()) {
        let empty = History::empty(Arc::clone(s.universe()));
        for h in enumerate_prefixes(&s) {
            prop_assert_eq!(
                poss_relative(&spec, &empty, &h, &s).unwrap(),
                poss(&spec, &h, &s).unwrap()
            );
        }
    }

    #[test]
    fn admissible_sets_are_upward_closed((_spec, s) in table_spec_strategy()) {
        let ctx = ScenarioContext::new(&s).unwrap();
        let prefixes = enumerate_prefixes(&s);
        for h_in in &ctx.input_prefixes {
            let adm = admissible(h_in, &s).unwrap();
            for h in &adm {
                for h2 in &prefixes {
                    if is_future(h, h2).unwrap() {
                        prop_assert!(adm.contains(h2));
                    }
                }
            }
        }
    }

    #[test]
    fn correct_model_possibility_is_bounded((spec, s) in table_spec_strategy()) {
        // Shrink the generic model's exposures; reachable outcomes must stay
        // inside what the specification still admits.
        let mut model = generic_impl(&spec, &s, ExposurePolicy::AllObs).unwrap();
        for (i, set) in model.expose.values_mut().enumerate() {
            if i % 2 == 0 && !set.is_empty() {
                let first = set.iter().next().cloned().unwrap();
                set.remove(&first);
            }
        }
        let ctx = ScenarioContext::new(&s).unwrap();
        for h_in in &ctx.input_prefixes {
            for h in admissible(h_in, &s).unwrap() {
                let reachable = poss_impl(&model, h_in, &h, &s).unwrap();
                let admitted = poss_relative(&spec, h_in, &h, &s).unwrap();
                prop_assert!(reachable.is_subset(&admitted));
            }
        }
    }
}

#[test]
fn one_per_history_exposure_stays_coordination_free_on_monotone_chain() {
    // A numeric chain spec stays coordination-free under a seeded
    // one-outcome-per-history exposure policy when obs sets are nested
    // upward along the chain.
    let events: Vec<Event> = (0..2)
        .map(|i| Event::new(&format!("e{i}"), EventKind::Internal, "p", ""))
        .collect();
    let edges = vec![("e0".to_string(), "e1".to_string())];
    let u = EventUniverse::from_parts(events, edges, Vec::new()).unwrap();
    let s = Scenario::from_universe("chain", Arc::clone(&u)).unwrap();
    let prefixes = enumerate_prefixes(&s);
    let domain = make_domain(DomainKind::Numeric { max: 4 }).unwrap();
    let mut entries = BTreeMap::new();
    for (i, p) in prefixes.iter().enumerate() {
        let outcomes: std::collections::BTreeSet<Outcome> =
            [Outcome::Num(i as u64), Outcome::Num(4)].into_iter().collect();
        entries.insert(p.fingerprint(), outcomes);
    }
    let spec = Specification::new("chain-table", u, domain, Arc::new(ObsTable { entries }));
    let model = generic_impl(&spec, &s, ExposurePolicy::OnePerHistory { seed: 11 }).unwrap();
    // Exposure choice is deterministic and a subset of obs.
    let again = generic_impl(&spec, &s, ExposurePolicy::OnePerHistory { seed: 11 }).unwrap();
    assert_eq!(model, again);
    for (fp, exposed) in &model.expose {
        let h = prefixes.iter().find(|p| &p.fingerprint() == fp).unwrap();
        assert!(exposed.is_subset(&spec.obs(h).unwrap()));
    }
}

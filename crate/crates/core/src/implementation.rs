//! Implementation models over a scenario and the coordination-freedom
//! check, together with the generic construction, an exhaustive existence
//! search, and the outcome order induced by a coordination-free model.
//!
//! An implementation names, per input prefix, the histories it realizes
//! (always a subset of the admissible ones) and, per history, the outcomes
//! it may expose. Coordination-freedom requires three things of it:
//! correctness (exposures stay inside obs), possibility preservation
//! (realizable extensions reach exactly the outcomes the specification
//! still admits under the same inputs), and exposure survival (an outcome
//! once exposed keeps a refinement exposed at every realizable future —
//! without this clause the model realizing every admissible history and
//! exposing obs verbatim would pass vacuously for every specification, and
//! the existence search could not distinguish monotone from non-monotone).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::history::{enumerate_prefixes, is_future, History, Scenario};
use crate::outcome::{domain_from_relation, Outcome, OutcomeDomain};
use crate::spec::{admissible, poss_relative, Specification};
use crate::{Error, Result};

pub const DEFAULT_SEARCH_CAP: u128 = 5_000_000;

pub const SEARCH_RESTRICTION_NOTE: &str = "realizable sets range over prefix-closed subsets of \
the admissible histories that contain the minimal admissible history for their input prefix";

/// Realizable-history map plus outcome-exposure map, scenario-scoped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplementationModel {
    /// Input-prefix fingerprint -> fingerprints of realizable histories.
    pub realizable: BTreeMap<String, BTreeSet<String>>,
    /// History fingerprint -> outcomes the model may expose there.
    pub expose: BTreeMap<String, BTreeSet<Outcome>>,
}

impl ImplementationModel {
    pub fn to_json(&self, ctx: &ScenarioContext) -> serde_json::Value {
        let realizable: BTreeMap<String, Vec<Vec<String>>> = self
            .realizable
            .iter()
            .map(|(fp, set)| {
                (
                    fp.clone(),
                    set.iter()
                        .map(|hfp| ctx.history_by_fp(hfp).map(|h| h.sorted_ids()).unwrap_or_default())
                        .collect(),
                )
            })
            .collect();
        serde_json::json!({
            "realizable": realizable,
            "expose": self.expose,
        })
    }

    pub fn from_json(value: &serde_json::Value, ctx: &ScenarioContext) -> Result<Self> {
        let mut realizable = BTreeMap::new();
        let real_obj = value
            .get("realizable")
            .and_then(|v| v.as_object())
            .ok_or_else(|| Error::InvalidParams("missing `realizable` map".to_string()))?;
        for (fp, lists) in real_obj {
            let mut set = BTreeSet::new();
            let arr = lists
                .as_array()
                .ok_or_else(|| Error::InvalidParams("realizable entries must be arrays".into()))?;
            for ids in arr {
                let ids: Vec<String> = serde_json::from_value(ids.clone())?;
                let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
                let h = ctx.scenario.prefix(&refs)?;
                set.insert(h.fingerprint());
            }
            realizable.insert(fp.clone(), set);
        }
        let expose: BTreeMap<String, BTreeSet<Outcome>> = value
            .get("expose")
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()?
            .unwrap_or_default();
        Ok(ImplementationModel { realizable, expose })
    }
}

/// Prefix tables shared by the implementation-level checks.
pub struct ScenarioContext {
    pub scenario: Scenario,
    pub prefixes: Vec<History>,
    by_fp: BTreeMap<String, usize>,
    /// All input-only prefixes: ideals of the ground's input projection.
    pub input_prefixes: Vec<History>,
}

impl ScenarioContext {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let prefixes = enumerate_prefixes(scenario);
        let mut by_fp = BTreeMap::new();
        for (i, p) in prefixes.iter().enumerate() {
            by_fp.insert(p.fingerprint(), i);
        }
        let input_ground = scenario.ground.input_projection();
        let input_scenario = Scenario::new(&format!("{}-inputs", scenario.name), input_ground)?;
        let input_prefixes = enumerate_prefixes(&input_scenario);
        Ok(ScenarioContext {
            scenario: scenario.clone(),
            prefixes,
            by_fp,
            input_prefixes,
        })
    }

    pub fn history_by_fp(&self, fp: &str) -> Option<&History> {
        self.by_fp.get(fp).map(|&i| &self.prefixes[i])
    }

    /// Indices into `prefixes` of the histories admissible for `h_in`.
    fn admissible_indices(&self, h_in: &History) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, p) in self.prefixes.iter().enumerate() {
            if is_future(h_in, &p.input_projection())? {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// The minimal elements of the admissible set for `h_in`.
    fn minimal_admissible(&self, adm: &[usize]) -> Result<Vec<usize>> {
        let mut minimal = Vec::new();
        'outer: for &i in adm {
            for &j in adm {
                if j != i && is_future(&self.prefixes[j], &self.prefixes[i])? {
                    continue 'outer;
                }
            }
            minimal.push(i);
        }
        Ok(minimal)
    }
}

/// Exposure policy for the generic construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExposurePolicy {
    /// Expose the full obs set at every history.
    AllObs,
    /// Expose one outcome per history (when obs is nonempty), chosen by a
    /// seeded draw.
    OnePerHistory { seed: u64 },
}

/// The generic model: realize exactly the admissible histories for every
/// input prefix, expose within obs per policy.
pub fn generic_impl(
    spec: &Specification,
    s: &Scenario,
    policy: ExposurePolicy,
) -> Result<ImplementationModel> {
    let ctx = ScenarioContext::new(s)?;
    let mut realizable = BTreeMap::new();
    for h_in in &ctx.input_prefixes {
        let adm = admissible(h_in, s)?;
        realizable.insert(
            h_in.fingerprint(),
            adm.iter().map(|h| h.fingerprint()).collect(),
        );
    }
    let mut expose = BTreeMap::new();
    for h in &ctx.prefixes {
        let obs = spec.obs(h)?;
        let chosen = match policy {
            ExposurePolicy::AllObs => obs,
            ExposurePolicy::OnePerHistory { seed } => {
                let items: Vec<Outcome> = obs.into_iter().collect();
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ fingerprint_hash(&h.fingerprint()),
                );
                items
                    .choose(&mut rng)
                    .cloned()
                    .into_iter()
                    .collect::<BTreeSet<_>>()
            }
        };
        expose.insert(h.fingerprint(), chosen);
    }
    Ok(ImplementationModel { realizable, expose })
}

fn fingerprint_hash(fp: &str) -> u64 {
    // FNV-1a, stable across runs.
    let mut h = 0xcbf29ce484222325u64;
    for b in fp.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Correctness: every exposure stays inside obs at its history.
pub fn check_correctness(
    model: &ImplementationModel,
    spec: &Specification,
    s: &Scenario,
) -> Result<(bool, Vec<(Vec<String>, Outcome)>)> {
    let ctx = ScenarioContext::new(s)?;
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for set in model.realizable.values() {
        for hfp in set {
            if !seen.insert(hfp.clone()) {
                continue;
            }
            let h = ctx
                .history_by_fp(hfp)
                .ok_or_else(|| Error::RealizableNotAdmissible(hfp.clone()))?;
            let obs = spec.obs(h)?;
            let exposed = model
                .expose
                .get(hfp)
                .ok_or_else(|| Error::MissingExposure(hfp.clone()))?;
            for o in exposed {
                if !obs.contains(o) {
                    violations.push((h.sorted_ids(), o.clone()));
                }
            }
        }
    }
    violations.sort();
    Ok((violations.is_empty(), violations))
}

/// Union of exposures over realizable extensions of `h` under `h_in`.
pub fn poss_impl(
    model: &ImplementationModel,
    h_in: &History,
    h: &History,
    s: &Scenario,
) -> Result<BTreeSet<Outcome>> {
    let ctx = ScenarioContext::new(s)?;
    poss_impl_ctx(model, h_in, h, &ctx)
}

fn poss_impl_ctx(
    model: &ImplementationModel,
    h_in: &History,
    h: &History,
    ctx: &ScenarioContext,
) -> Result<BTreeSet<Outcome>> {
    let set = model
        .realizable
        .get(&h_in.fingerprint())
        .ok_or(Error::NotRealizable)?;
    if !set.contains(&h.fingerprint()) {
        return Err(Error::NotRealizable);
    }
    let mut out = BTreeSet::new();
    for hfp in set {
        let h2 = ctx
            .history_by_fp(hfp)
            .ok_or_else(|| Error::RealizableNotAdmissible(hfp.clone()))?;
        if is_future(h, h2)? {
            if let Some(exposed) = model.expose.get(hfp) {
                out.extend(exposed.iter().cloned());
            }
        }
    }
    Ok(out)
}

/// One reason a model fails the coordination-freedom conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoordinationViolation {
    /// Exposure outside obs.
    Incorrect { h: Vec<String>, outcome: Outcome },
    /// Realizable extensions miss (or exceed) outcomes the specification
    /// still admits under the same inputs.
    PossibilityMismatch {
        h_in: Vec<String>,
        h: Vec<String>,
        missing: Vec<Outcome>,
        extra: Vec<Outcome>,
    },
    /// An exposed outcome with no exposed refinement at a realizable future.
    OrphanedExposure {
        h_in: Vec<String>,
        h: Vec<String>,
        outcome: Outcome,
        at: Vec<String>,
    },
}

impl CoordinationViolation {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CoordinationViolation::Incorrect { h, outcome } => serde_json::json!({
                "kind": "incorrect-exposure",
                "h": h,
                "outcome": outcome,
            }),
            CoordinationViolation::PossibilityMismatch {
                h_in,
                h,
                missing,
                extra,
            } => serde_json::json!({
                "kind": "possibility-mismatch",
                "h_in": h_in,
                "h": h,
                "missing": missing,
                "extra": extra,
            }),
            CoordinationViolation::OrphanedExposure {
                h_in,
                h,
                outcome,
                at,
            } => serde_json::json!({
                "kind": "orphaned-exposure",
                "h_in": h_in,
                "h": h,
                "outcome": outcome,
                "at": at,
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoordinationReport {
    pub correct: bool,
    pub possibility_preserved: bool,
    pub violations: Vec<CoordinationViolation>,
}

impl CoordinationReport {
    pub fn coordination_free(&self) -> bool {
        self.correct && self.possibility_preserved
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "correct": self.correct,
            "possibility_preserved": self.possibility_preserved,
            "coordination_free": self.coordination_free(),
            "violations": self.violations.iter().map(|v| v.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Checks correctness, possibility preservation, and exposure survival for
/// every input prefix of the scenario.
pub fn is_coordination_free(
    model: &ImplementationModel,
    spec: &Specification,
    s: &Scenario,
) -> Result<CoordinationReport> {
    let ctx = ScenarioContext::new(s)?;
    is_coordination_free_ctx(model, spec, &ctx)
}

fn is_coordination_free_ctx(
    model: &ImplementationModel,
    spec: &Specification,
    ctx: &ScenarioContext,
) -> Result<CoordinationReport> {
    let (correct, incorrect) = check_correctness(model, spec, &ctx.scenario)?;
    let mut violations: Vec<CoordinationViolation> = incorrect
        .into_iter()
        .map(|(h, outcome)| CoordinationViolation::Incorrect { h, outcome })
        .collect();

    let mut preserved = true;
    for h_in in &ctx.input_prefixes {
        let real = match model.realizable.get(&h_in.fingerprint()) {
            Some(r) => r,
            None => continue,
        };
        for hfp in real {
            let h = ctx
                .history_by_fp(hfp)
                .ok_or_else(|| Error::RealizableNotAdmissible(hfp.clone()))?;
            // (1) Extensional possibility preservation.
            let reachable = poss_impl_ctx(model, h_in, h, ctx)?;
            let admitted = poss_relative(spec, h_in, h, &ctx.scenario)?;
            if reachable != admitted {
                preserved = false;
                let missing: Vec<Outcome> =
                    admitted.difference(&reachable).cloned().collect();
                let extra: Vec<Outcome> = reachable.difference(&admitted).cloned().collect();
                violations.push(CoordinationViolation::PossibilityMismatch {
                    h_in: h_in.sorted_ids(),
                    h: h.sorted_ids(),
                    missing,
                    extra,
                });
            }
            // (2) Exposure survival along realizable futures.
            let exposed = model.expose.get(hfp).cloned().unwrap_or_default();
            for o in &exposed {
                for h2fp in real {
                    let h2 = ctx
                        .history_by_fp(h2fp)
                        .ok_or_else(|| Error::RealizableNotAdmissible(h2fp.clone()))?;
                    if !is_future(h, h2)? {
                        continue;
                    }
                    let later = model.expose.get(h2fp).cloned().unwrap_or_default();
                    let mut survives = false;
                    for o2 in &later {
                        if spec.domain().leq(o, o2)? {
                            survives = true;
                            break;
                        }
                    }
                    if !survives {
                        preserved = false;
                        violations.push(CoordinationViolation::OrphanedExposure {
                            h_in: h_in.sorted_ids(),
                            h: h.sorted_ids(),
                            outcome: o.clone(),
                            at: h2.sorted_ids(),
                        });
                    }
                }
            }
        }
    }
    violations.sort_by_key(|v| format!("{v:?}"));
    violations.dedup();
    Ok(CoordinationReport {
        correct,
        possibility_preserved: preserved,
        violations,
    })
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub exists: bool,
    pub example: Option<ImplementationModel>,
    pub candidates_checked: u64,
    pub search_space: u128,
    pub cap: u128,
    pub restriction: &'static str,
}

impl SearchReport {
    pub fn to_json(&self, ctx: &ScenarioContext) -> serde_json::Value {
        serde_json::json!({
            "exists": self.exists,
            "example": self.example.as_ref().map(|m| m.to_json(ctx)),
            "candidates_checked": self.candidates_checked,
            "search_space": self.search_space.to_string(),
            "cap": self.cap.to_string(),
            "restriction": self.restriction,
        })
    }
}

/// Exhaustive search for a coordination-free model of the specification on
/// this scenario. Exposure maps range over subsets of obs per history;
/// realizable sets over prefix-closed subsets of the admissible histories
/// containing the minimal admissible history.
pub fn exhaustive_impl_search(
    spec: &Specification,
    s: &Scenario,
) -> Result<SearchReport> {
    exhaustive_impl_search_capped(spec, s, DEFAULT_SEARCH_CAP)
}

pub fn exhaustive_impl_search_capped(
    spec: &Specification,
    s: &Scenario,
    cap: u128,
) -> Result<SearchReport> {
    let ctx = ScenarioContext::new(s)?;
    let obs_sets: Vec<Vec<Outcome>> = ctx
        .prefixes
        .iter()
        .map(|h| spec.obs(h).map(|set| set.into_iter().collect()))
        .collect::<Result<_>>()?;

    // Realizable candidates per input prefix: ideals of the admissible
    // sub-poset containing all of its minimal elements.
    let mut per_input: Vec<(History, Vec<BTreeSet<usize>>)> = Vec::new();
    for h_in in &ctx.input_prefixes {
        let adm = ctx.admissible_indices(h_in)?;
        let minimal = ctx.minimal_admissible(&adm)?;
        let ideals = ideals_containing(&ctx, &adm, &minimal)?;
        per_input.push((h_in.clone(), ideals));
    }

    let expose_combos: u128 = obs_sets
        .iter()
        .map(|o| 1u128 << o.len().min(64))
        .product();
    let realizable_combos: u128 = per_input.iter().map(|(_, v)| v.len() as u128).sum();
    let search_space = expose_combos.saturating_mul(realizable_combos.max(1));
    if search_space > cap {
        return Err(Error::SearchCapExceeded {
            actual: search_space,
            cap,
        });
    }

    let mut checked: u64 = 0;
    // Descending exposure masks so the all-obs assignment is tried first.
    let masks: Vec<usize> = obs_sets.iter().map(|o| (1usize << o.len()) - 1).collect();
    let mut assign = masks.clone();
    loop {
        let expose: BTreeMap<String, BTreeSet<Outcome>> = ctx
            .prefixes
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let chosen: BTreeSet<Outcome> = obs_sets[i]
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| assign[i] & (1 << k) != 0)
                    .map(|(_, o)| o.clone())
                    .collect();
                (h.fingerprint(), chosen)
            })
            .collect();

        let mut chosen_real: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut all_ok = true;
        for (h_in, ideals) in &per_input {
            let mut found = None;
            for ideal in ideals {
                checked += 1;
                if realizable_cone_ok(spec, &ctx, h_in, ideal, &expose)? {
                    found = Some(ideal);
                    break;
                }
            }
            match found {
                Some(ideal) => {
                    chosen_real.insert(
                        h_in.fingerprint(),
                        ideal
                            .iter()
                            .map(|&i| ctx.prefixes[i].fingerprint())
                            .collect(),
                    );
                }
                None => {
                    all_ok = false;
                    break;
                }
            }
        }
        if all_ok {
            let model = ImplementationModel {
                realizable: chosen_real,
                expose,
            };
            return Ok(SearchReport {
                exists: true,
                example: Some(model),
                candidates_checked: checked,
                search_space,
                cap,
                restriction: SEARCH_RESTRICTION_NOTE,
            });
        }
        if !decrement(&mut assign, &masks) {
            break;
        }
    }
    Ok(SearchReport {
        exists: false,
        example: None,
        candidates_checked: checked,
        search_space,
        cap,
        restriction: SEARCH_RESTRICTION_NOTE,
    })
}

/// Steps a mixed-radix counter downward; false when exhausted.
fn decrement(assign: &mut [usize], masks: &[usize]) -> bool {
    for i in (0..assign.len()).rev() {
        if assign[i] > 0 {
            assign[i] -= 1;
            for j in i + 1..assign.len() {
                assign[j] = masks[j];
            }
            return true;
        }
    }
    false
}

/// Ideals of the admissible sub-poset that contain every minimal element.
fn ideals_containing(
    ctx: &ScenarioContext,
    adm: &[usize],
    minimal: &[usize],
) -> Result<Vec<BTreeSet<usize>>> {
    // Downward closure is with respect to the future order restricted to
    // the admissible set.
    let mut below: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &i in adm {
        let mut set = BTreeSet::new();
        for &j in adm {
            if j != i && is_future(&ctx.prefixes[j], &ctx.prefixes[i])? {
                set.insert(j);
            }
        }
        below.insert(i, set);
    }
    let mut ideals: Vec<BTreeSet<usize>> = vec![minimal.iter().copied().collect()];
    // The seed set must itself be downward closed.
    for &m in minimal {
        if !below[&m].iter().all(|j| minimal.contains(j)) {
            return Ok(vec![]);
        }
    }
    let mut result = BTreeSet::new();
    result.insert(ideals[0].clone());
    while let Some(cur) = ideals.pop() {
        for &i in adm {
            if cur.contains(&i) {
                continue;
            }
            if below[&i].iter().all(|j| cur.contains(j)) {
                let mut next = cur.clone();
                next.insert(i);
                if result.insert(next.clone()) {
                    ideals.push(next);
                }
            }
        }
    }
    let mut out: Vec<BTreeSet<usize>> = result.into_iter().collect();
    // Larger candidates first: the full admissible set is the generic model.
    out.sort_by_key(|s| std::cmp::Reverse(s.len()));
    Ok(out)
}

/// Checks the per-input-prefix conditions for one realizable candidate.
fn realizable_cone_ok(
    spec: &Specification,
    ctx: &ScenarioContext,
    h_in: &History,
    ideal: &BTreeSet<usize>,
    expose: &BTreeMap<String, BTreeSet<Outcome>>,
) -> Result<bool> {
    for &i in ideal {
        let h = &ctx.prefixes[i];
        // Possibility preservation.
        let admitted = poss_relative(spec, h_in, h, &ctx.scenario)?;
        let mut reachable = BTreeSet::new();
        for &j in ideal {
            if is_future(h, &ctx.prefixes[j])? {
                if let Some(e) = expose.get(&ctx.prefixes[j].fingerprint()) {
                    reachable.extend(e.iter().cloned());
                }
            }
        }
        if reachable != admitted {
            return Ok(false);
        }
        // Exposure survival.
        let exposed = expose.get(&h.fingerprint()).cloned().unwrap_or_default();
        for o in &exposed {
            for &j in ideal {
                let h2 = &ctx.prefixes[j];
                if !is_future(h, h2)? {
                    continue;
                }
                let later = expose.get(&h2.fingerprint()).cloned().unwrap_or_default();
                let mut survives = false;
                for o2 in &later {
                    if spec.domain().leq(o, o2)? {
                        survives = true;
                        break;
                    }
                }
                if !survives {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The outcome order induced by a coordination-free model: o1 reaches o2
/// when some realizable pair h1 below h2 with equal input projections
/// exposes o1 at h1 and o2 at h2; the order is the reflexive-transitive
/// closure quotiented by mutual reachability.
#[derive(Debug, Clone)]
pub struct InducedOrder {
    pub domain: OutcomeDomain,
    /// Maps each exposed outcome to its class representative.
    pub class_of: BTreeMap<Outcome, Outcome>,
}

pub fn induce_order(
    model: &ImplementationModel,
    spec: &Specification,
    s: &Scenario,
) -> Result<InducedOrder> {
    let ctx = ScenarioContext::new(s)?;
    let report = is_coordination_free_ctx(model, spec, &ctx)?;
    if !report.coordination_free() {
        return Err(Error::NotCoordinationFree);
    }
    // Exposed outcomes across all realizable histories.
    let mut realizable_fps = BTreeSet::new();
    for set in model.realizable.values() {
        realizable_fps.extend(set.iter().cloned());
    }
    let mut outcomes = BTreeSet::new();
    for fp in &realizable_fps {
        if let Some(e) = model.expose.get(fp) {
            outcomes.extend(e.iter().cloned());
        }
    }
    let outcomes: Vec<Outcome> = outcomes.into_iter().collect();
    let index: BTreeMap<&Outcome, usize> =
        outcomes.iter().enumerate().map(|(i, o)| (o, i)).collect();
    let n = outcomes.len();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    let hists: Vec<&History> = realizable_fps
        .iter()
        .filter_map(|fp| ctx.history_by_fp(fp))
        .collect();
    for h1 in &hists {
        for h2 in &hists {
            if !is_future(h1, h2)? {
                continue;
            }
            if h1.input_projection() != h2.input_projection() {
                continue;
            }
            let e1 = model.expose.get(&h1.fingerprint()).cloned().unwrap_or_default();
            let e2 = model.expose.get(&h2.fingerprint()).cloned().unwrap_or_default();
            for o1 in &e1 {
                for o2 in &e2 {
                    reach[index[o1]][index[o2]] = true;
                }
            }
        }
    }
    // Transitive closure.
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    // Quotient by mutual reachability; representative is the least member.
    let mut class_of: BTreeMap<Outcome, Outcome> = BTreeMap::new();
    for i in 0..n {
        let mut members: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        members.sort();
        class_of.insert(outcomes[i].clone(), outcomes[members[0]].clone());
    }
    let reps: Vec<Outcome> = class_of.values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] {
                pairs.push((
                    class_of[&outcomes[i]].clone(),
                    class_of[&outcomes[j]].clone(),
                ));
            }
        }
    }
    let domain = domain_from_relation(reps, &pairs)?;
    Ok(InducedOrder { domain, class_of })
}

/// Re-targets a specification at the induced order: obs outcomes are
/// projected to their class representatives and compared there.
pub fn spec_under_induced_order(
    spec: &Specification,
    induced: &InducedOrder,
) -> Specification {
    struct Projected {
        inner: Arc<dyn crate::spec::ObsEval>,
        class_of: BTreeMap<Outcome, Outcome>,
    }
    impl crate::spec::ObsEval for Projected {
        fn eval(&self, h: &History) -> Result<BTreeSet<Outcome>> {
            let raw = self.inner.eval(h)?;
            Ok(raw
                .into_iter()
                .map(|o| self.class_of.get(&o).cloned().unwrap_or(o))
                .collect())
        }
    }
    let projected = Projected {
        inner: spec.rule_handle(),
        class_of: induced.class_of.clone(),
    };
    Specification::new(
        &format!("{}-induced", spec.name),
        Arc::clone(spec.universe()),
        induced.domain.clone(),
        Arc::new(projected),
    )
}

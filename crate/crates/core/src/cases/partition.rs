//! Partition patterns: post-cut prohibitions on cross-process deliveries.
//!
//! Applying a pattern removes the forbidden receive events (and the causal
//! edges through them) from the scenario ground, leaving observability and
//! the outcome order untouched; only the admissible histories shrink. The
//! cross-partition analysis then looks for monotonicity witnesses inside
//! the partitioned world whose distinguishing events sit on the far side of
//! the cut, and flags histories whose admitted outcomes have no compatible
//! outcome at any partition-respecting completion.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::history::{is_future, History, Scenario};
use crate::outcome::Outcome;
use crate::spec::{check_future_monotonicity, Specification, Verdict, Witness};
use crate::{Error, Result};

use super::register::{register_spec, RegisterParams, RegisterVariant};
use super::CaseBundle;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionPattern {
    /// Event ids of a downward-closed prefix after which the pattern applies.
    pub cut: BTreeSet<String>,
    /// Forbidden (sender process, receiver process) delivery directions.
    pub forbidden: BTreeSet<(String, String)>,
}

/// Removes forbidden post-cut receive events from the ground history. The
/// remaining order is rebuilt from the surviving template and message
/// edges, so causality routed through a removed delivery disappears.
pub fn apply_partition(s: &Scenario, p: &PartitionPattern) -> Result<Scenario> {
    let u = s.universe();
    let ground = &s.ground;
    let mut cut_mask = 0u64;
    for id in &p.cut {
        let i = u.index_of(id)?;
        if !ground.contains(i) {
            return Err(Error::CutNotDownwardClosed);
        }
        cut_mask |= 1 << i;
    }
    for i in ground.indices() {
        if cut_mask & (1 << i) != 0 && ground.preds_of(i) & !cut_mask != 0 {
            return Err(Error::CutNotDownwardClosed);
        }
    }
    let mut removed = 0u64;
    for &(send, recv) in u.msg_pairs() {
        if !ground.contains(recv) || cut_mask & (1 << recv) != 0 {
            continue;
        }
        let dir = (u.event(send).proc.clone(), u.event(recv).proc.clone());
        if p.forbidden.contains(&dir) {
            removed |= 1 << recv;
        }
    }
    let surviving = ground.mask() & !removed;
    let pairs: Vec<(usize, usize)> = u
        .template_edges()
        .iter()
        .chain(u.msg_pairs().iter())
        .copied()
        .filter(|&(a, b)| surviving & (1 << a) != 0 && surviving & (1 << b) != 0)
        .collect();
    let pruned = History::from_mask_and_pairs(std::sync::Arc::clone(u), surviving, &pairs)?;
    Scenario::new(&format!("{}+partition", s.name), pruned)
}

#[derive(Debug, Clone)]
pub struct UnavailableFlag {
    pub h: Vec<String>,
    pub outcome: Outcome,
}

/// Result of the partitioned analysis.
#[derive(Debug, Clone)]
pub struct CrossPartitionReport {
    pub verdict: Verdict,
    /// Least non-monotonicity witness whose distinguishing events avoid the
    /// exposing side, if any.
    pub cross_witness: Option<Witness>,
    /// Histories where some admitted outcome has no compatible outcome at
    /// any partition-respecting completion.
    pub unavailable: Vec<UnavailableFlag>,
}

impl CrossPartitionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cross_partition_witness": self.cross_witness.as_ref().map(|w| w.to_json()),
            "cross_partition_witness_found": self.cross_witness.is_some(),
            "unavailability_flagged": !self.unavailable.is_empty(),
            "unavailability": self.unavailable.iter().map(|f| serde_json::json!({
                "h": f.h,
                "outcome": f.outcome,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Processes of the maximal events of a history: the sites whose most
/// recent activity would expose an outcome there.
fn exposing_procs(h: &History) -> BTreeSet<String> {
    let u = h.universe();
    let mut out = BTreeSet::new();
    for i in h.indices() {
        let maximal = h.indices().all(|j| j == i || !h.precedes(i, j));
        if maximal {
            out.insert(u.event(i).proc.clone());
        }
    }
    out
}

/// Runs the monotonicity check inside the partitioned scenario and filters
/// for witnesses observable only across the cut.
pub fn cross_partition_witness(
    spec: &Specification,
    s: &Scenario,
    p: &PartitionPattern,
) -> Result<CrossPartitionReport> {
    let pruned = apply_partition(s, p)?;
    let verdict = check_future_monotonicity(spec, &pruned)?;
    let mut cross = None;
    for w in &verdict.witnesses {
        let exposing = exposing_procs(&w.h1);
        let u = w.h1.universe();
        let mut diff_procs = BTreeSet::new();
        for i in w.h2.indices() {
            if !w.h1.contains(i) {
                diff_procs.insert(u.event(i).proc.clone());
            }
        }
        if !diff_procs.is_empty() && diff_procs.is_disjoint(&exposing) {
            cross = Some(w.clone());
            break;
        }
    }
    // Completions: maximal histories of the partitioned world.
    let prefixes = crate::history::enumerate_prefixes(&pruned);
    let mut completions = Vec::new();
    for h in &prefixes {
        let mut maximal = true;
        for h2 in &prefixes {
            if h2 != h && is_future(h, h2)? {
                maximal = false;
                break;
            }
        }
        if maximal {
            completions.push(h.clone());
        }
    }
    let completion_obs: Vec<BTreeSet<Outcome>> = completions
        .iter()
        .map(|c| spec.obs(c))
        .collect::<Result<_>>()?;
    let mut unavailable = Vec::new();
    for h in &prefixes {
        for o in spec.obs(h)? {
            let mut compatible = false;
            'comp: for (c, obs) in completions.iter().zip(&completion_obs) {
                if !is_future(h, c)? {
                    continue;
                }
                for o2 in obs {
                    if spec.domain().leq(&o, o2)? {
                        compatible = true;
                        break 'comp;
                    }
                }
            }
            if !compatible {
                unavailable.push(UnavailableFlag {
                    h: h.sorted_ids(),
                    outcome: o,
                });
            }
        }
    }
    Ok(CrossPartitionReport {
        verdict,
        cross_witness: cross,
        unavailable,
    })
}

/// Default pattern for the register scenario: communication from the
/// writer to the reader is cut after the write is sent.
pub fn default_register_partition(s: &Scenario) -> PartitionPattern {
    let mut cut = BTreeSet::new();
    for id in ["wi", "wr", "ws"] {
        if s.universe().index_of(id).is_ok() {
            cut.insert(id.to_string());
        }
    }
    PartitionPattern {
        cut,
        forbidden: [("p".to_string(), "q".to_string())].into_iter().collect(),
    }
}

pub fn cap_case(variant: RegisterVariant, params: &serde_json::Value) -> Result<CaseBundle> {
    let reg_params: RegisterParams = if params.is_null() || params == &serde_json::json!({}) {
        RegisterParams::default()
    } else {
        serde_json::from_value(params.clone())
            .map_err(|e| Error::InvalidParams(e.to_string()))?
    };
    let (spec, scenario) = register_spec(variant, &reg_params)?;
    let pattern = default_register_partition(&scenario);
    let report = cross_partition_witness(&spec, &scenario, &pattern)?;
    let pruned = apply_partition(&scenario, &pattern)?;
    let expected = match variant {
        RegisterVariant::Linearizable => false,
        RegisterVariant::Available => true,
    };
    let name = match variant {
        RegisterVariant::Linearizable => "cap-lin",
        RegisterVariant::Available => "cap-avail",
    };
    Ok(CaseBundle {
        name: name.to_string(),
        spec,
        scenario: pruned,
        expected_monotone: Some(expected),
        claimed_monotone: Some(expected),
        reference: "CAP",
        extras: report.to_json(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::seq;

    #[test]
    fn empty_forbidden_set_leaves_scenario_unchanged() {
        let (_, s) = register_spec(RegisterVariant::Linearizable, &RegisterParams::default())
            .unwrap();
        let p = PartitionPattern {
            cut: BTreeSet::new(),
            forbidden: BTreeSet::new(),
        };
        let pruned = apply_partition(&s, &p).unwrap();
        assert_eq!(pruned.ground.fingerprint(), s.ground.fingerprint());
    }

    #[test]
    fn partition_removes_the_delivery() {
        let (_, s) = register_spec(RegisterVariant::Linearizable, &RegisterParams::default())
            .unwrap();
        let p = default_register_partition(&s);
        let pruned = apply_partition(&s, &p).unwrap();
        assert!(!pruned.ground.contains_id("d"));
        // The read no longer causally depends on the write.
        let rr = pruned.ground.universe().index_of("rr").unwrap();
        let wi = pruned.ground.universe().index_of("wi").unwrap();
        assert!(!pruned.ground.precedes(wi, rr));
    }

    #[test]
    fn full_partition_from_start_leaves_local_chains() {
        let (_, s) = register_spec(RegisterVariant::Linearizable, &RegisterParams::default())
            .unwrap();
        let p = PartitionPattern {
            cut: BTreeSet::new(),
            forbidden: [
                ("p".to_string(), "q".to_string()),
                ("q".to_string(), "p".to_string()),
            ]
            .into_iter()
            .collect(),
        };
        let pruned = apply_partition(&s, &p).unwrap();
        // Only per-process chains remain: wi->wr->ws and ri->rr.
        assert!(!pruned.ground.contains_id("d"));
        let u = pruned.ground.universe();
        for a in pruned.ground.indices() {
            for b in pruned.ground.indices() {
                if pruned.ground.precedes(a, b) {
                    assert_eq!(u.event(a).proc, u.event(b).proc);
                }
            }
        }
    }

    #[test]
    fn cut_must_be_downward_closed() {
        let (_, s) = register_spec(RegisterVariant::Linearizable, &RegisterParams::default())
            .unwrap();
        let p = PartitionPattern {
            cut: ["wr".to_string()].into_iter().collect(),
            forbidden: BTreeSet::new(),
        };
        assert!(matches!(
            apply_partition(&s, &p),
            Err(Error::CutNotDownwardClosed)
        ));
    }

    #[test]
    fn lin_partition_yields_cross_witness_and_unavailability() {
        let (spec, s) = register_spec(RegisterVariant::Linearizable, &RegisterParams::default())
            .unwrap();
        let p = default_register_partition(&s);
        let report = cross_partition_witness(&spec, &s, &p).unwrap();
        assert!(!report.verdict.monotone);
        let w = report.cross_witness.as_ref().expect("cross witness");
        // The writer's exposed story is broken by read-side events.
        assert_eq!(w.outcome, seq(&["write(1)"]));
        assert!(w.h2.contains_id("rr"));
        assert!(!report.unavailable.is_empty());
        assert!(report
            .unavailable
            .iter()
            .any(|f| f.outcome == seq(&["write(1)"])));
    }

    #[test]
    fn avail_partition_yields_no_witness_and_no_flags() {
        let (spec, s) = register_spec(RegisterVariant::Available, &RegisterParams::default())
            .unwrap();
        let p = default_register_partition(&s);
        let report = cross_partition_witness(&spec, &s, &p).unwrap();
        assert!(report.verdict.monotone);
        assert!(report.cross_witness.is_none());
        assert!(report.unavailable.is_empty());
    }
}

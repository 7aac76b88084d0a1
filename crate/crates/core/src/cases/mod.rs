//! Built-in specification constructors: registers (available and
//! linearizable, with and without partitions), a grow-only counter,
//! authority/value agreement, positive and negated logic programs, global
//! and atomic snapshots, k-set agreement, tight renaming, transactional
//! isolation levels, and invariant confluence over a merge system.
//!
//! Each constructor returns a [`CaseBundle`]: the specification, its default
//! scenario, the expected verdict, and any case-specific report extras.

pub mod calm;
pub mod consensus;
pub mod counter;
pub mod iconfluence;
pub mod isolation;
pub mod kset;
pub mod partition;
pub mod register;
pub mod renaming;
pub mod snapshot;

use crate::history::Scenario;
use crate::outcome::{make_domain, DomainKind};
use crate::spec::{validate_table_totality, ObsTable, Specification};
use crate::{Error, Result};

/// A ready-to-check specification with its scenario and report metadata.
pub struct CaseBundle {
    pub name: String,
    pub spec: Specification,
    pub scenario: Scenario,
    /// The verdict this case is expected to produce (used by `cases` output
    /// and the verdict-table tests).
    pub expected_monotone: Option<bool>,
    /// What the classic account of this case claims; differs from the
    /// computed verdict only where the report documents the discrepancy.
    pub claimed_monotone: Option<bool>,
    /// Classic result this case instantiates.
    pub reference: &'static str,
    /// Case-specific machine-readable report fields.
    pub extras: serde_json::Value,
}

pub struct CaseInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params_schema: &'static str,
    pub reference: &'static str,
    pub expected_monotone: Option<bool>,
}

pub fn list_cases() -> Vec<CaseInfo> {
    vec![
        CaseInfo {
            name: "register-lin",
            summary: "linearizable read/write register, one write against one read",
            params_schema: r#"{"writes": 1, "reads": 1, "initial": 0}"#,
            reference: "linearizability",
            expected_monotone: Some(false),
        },
        CaseInfo {
            name: "register-avail",
            summary: "highly available register: reads return initial or causally seen values",
            params_schema: r#"{"writes": 1, "reads": 1, "initial": 0}"#,
            reference: "available replicated register",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "cap-lin",
            summary: "linearizable register under a one-way partition",
            params_schema: r#"{}"#,
            reference: "CAP",
            expected_monotone: Some(false),
        },
        CaseInfo {
            name: "cap-avail",
            summary: "available register under the same partition",
            params_schema: r#"{}"#,
            reference: "CAP",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "counter",
            summary: "monotonically increasing counter",
            params_schema: r#"{"n": 4}"#,
            reference: "grow-only counter",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "consensus",
            summary: "agreement with authority changes followed by slot decisions",
            params_schema: r#"{}"#,
            reference: "consensus / leader change",
            expected_monotone: Some(false),
        },
        CaseInfo {
            name: "consensus-fixed",
            summary: "slot decisions under a fixed authority",
            params_schema: r#"{}"#,
            reference: "consensus / stable leader",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "calm-positive",
            summary: "positive transitive-closure program over arriving edge facts",
            params_schema: r#"{}"#,
            reference: "CALM",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "calm-negation",
            summary: "program deriving output facts through negation",
            params_schema: r#"{}"#,
            reference: "CALM",
            expected_monotone: Some(false),
        },
        CaseInfo {
            name: "calm-mixed",
            summary: "monotone observable program with a non-monotone internal part",
            params_schema: r#"{}"#,
            reference: "CALM",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "snapshot-global",
            summary: "snapshot exposing a causal cut valuation",
            params_schema: r#"{"sequential": false}"#,
            reference: "global snapshot",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "snapshot-atomic",
            summary: "snapshot committing to one linearization point",
            params_schema: r#"{"sequential": false}"#,
            reference: "atomic snapshot",
            expected_monotone: Some(false),
        },
        CaseInfo {
            name: "kset",
            summary: "k-set agreement decision maps",
            params_schema: r#"{"k": 1, "processes": 2}"#,
            reference: "k-set agreement",
            expected_monotone: Some(false),
        },
        CaseInfo {
            name: "renaming",
            summary: "tight renaming into a namespace sized by participation",
            params_schema: r#"{"bound": "tight", "n": 2, "m": 8}"#,
            reference: "strong renaming",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "isolation-rc",
            summary: "read-committed transactions over the write-skew workload",
            params_schema: r#"{}"#,
            reference: "transactional isolation (HAT boundary)",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "isolation-si",
            summary: "snapshot-ordered transactions over the write-skew workload",
            params_schema: r#"{}"#,
            reference: "transactional isolation (HAT boundary)",
            expected_monotone: Some(false),
        },
        CaseInfo {
            name: "iconfluence-inc",
            summary: "increment-only replicas with additive merge",
            params_schema: r#"{}"#,
            reference: "invariant confluence",
            expected_monotone: Some(true),
        },
        CaseInfo {
            name: "iconfluence-dec",
            summary: "concurrent decrements breaching a floor invariant at merge",
            params_schema: r#"{}"#,
            reference: "invariant confluence",
            expected_monotone: Some(false),
        },
    ]
}

/// Builds a named case with JSON parameters (`{}` selects defaults).
pub fn build_case(name: &str, params: &serde_json::Value) -> Result<CaseBundle> {
    match name {
        "register-lin" => register::register_case(register::RegisterVariant::Linearizable, params),
        "register-avail" => register::register_case(register::RegisterVariant::Available, params),
        "cap-lin" => partition::cap_case(register::RegisterVariant::Linearizable, params),
        "cap-avail" => partition::cap_case(register::RegisterVariant::Available, params),
        "counter" => counter::counter_case(params),
        "consensus" => consensus::consensus_case(false, params),
        "consensus-fixed" => consensus::consensus_case(true, params),
        "calm-positive" => calm::calm_case(calm::CalmPreset::Positive, params),
        "calm-negation" => calm::calm_case(calm::CalmPreset::NegationToOutput, params),
        "calm-mixed" => calm::calm_case(calm::CalmPreset::Mixed, params),
        "snapshot-global" => snapshot::snapshot_case(snapshot::SnapshotVariant::Global, params),
        "snapshot-atomic" => snapshot::snapshot_case(snapshot::SnapshotVariant::Atomic, params),
        "kset" => kset::kset_case(params),
        "renaming" => renaming::renaming_case(params),
        "isolation-rc" => isolation::isolation_case(isolation::IsolationLevel::ReadCommitted, params),
        "isolation-si" => isolation::isolation_case(isolation::IsolationLevel::SnapshotOrdered, params),
        "iconfluence-inc" => iconfluence::iconfluence_case(iconfluence::IconfluencePreset::Increments, params),
        "iconfluence-dec" => iconfluence::iconfluence_case(iconfluence::IconfluencePreset::Decrements, params),
        other => Err(Error::InvalidParams(format!("unknown case `{other}`"))),
    }
}

/// Loads a specification descriptor. Built-in descriptors carry a case name
/// and parameters; table descriptors carry a domain and an observation table
/// and require an explicit scenario.
pub fn spec_from_descriptor(
    descriptor: &serde_json::Value,
    scenario: Option<Scenario>,
) -> Result<CaseBundle> {
    let case = descriptor
        .get("case")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::InvalidParams("descriptor is missing `case`".to_string()))?;
    if case == "table" {
        let scenario = scenario.ok_or_else(|| {
            Error::InvalidParams("table descriptors require a scenario".to_string())
        })?;
        let kind: DomainKind = serde_json::from_value(
            descriptor
                .get("domain")
                .cloned()
                .ok_or_else(|| Error::InvalidParams("table descriptor missing `domain`".into()))?,
        )?;
        let domain = make_domain(kind)?;
        let entries = descriptor
            .get("obs")
            .and_then(|v| v.as_object())
            .ok_or_else(|| Error::InvalidParams("table descriptor missing `obs`".into()))?;
        let mut table = std::collections::BTreeMap::new();
        for (fp, outcomes) in entries {
            let outcomes: std::collections::BTreeSet<crate::outcome::Outcome> =
                serde_json::from_value(outcomes.clone())?;
            table.insert(fp.clone(), outcomes);
        }
        let spec = Specification::new(
            "table",
            std::sync::Arc::clone(scenario.universe()),
            domain,
            std::sync::Arc::new(ObsTable { entries: table }),
        );
        validate_table_totality(&spec, &scenario)?;
        Ok(CaseBundle {
            name: "table".to_string(),
            spec,
            scenario,
            expected_monotone: None,
            claimed_monotone: None,
            reference: "user-supplied table",
            extras: serde_json::json!({}),
        })
    } else {
        let params = descriptor
            .get("params")
            .cloned()
            .unwrap_or_else(|| serde_json::json!({}));
        build_case(case, &params)
    }
}

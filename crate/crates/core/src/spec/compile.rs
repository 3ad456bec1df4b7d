use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{GapRecord, ModelSpec, Provenance, SpecEntry, TOPOLOGY_SECTION};
use crate::deck::{reference_target, BlockRegistry, DeckError, InputDeck, Param, ParamValue};
use crate::topology::to_components;

/// Source of one deck parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub section: String,
    pub key: String,
    pub provenance: Provenance,
    pub assumed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

impl TraceEntry {
    pub fn of(section: &str, entry: &SpecEntry) -> Self {
        Self {
            section: section.to_string(),
            key: entry.key.clone(),
            provenance: entry.provenance.clone(),
            assumed: entry.assumed,
            rationale: entry.rationale.clone(),
        }
    }
}

/// Deck parameter path → the model spec entry it came from.
pub type TraceMap = BTreeMap<String, TraceEntry>;

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOutput {
    pub deck: InputDeck,
    /// Items the deterministic compiler could not fill.
    pub residual_gaps: Vec<GapRecord>,
    pub trace: TraceMap,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("{path}: expected {expected}, found {found}")]
    IncompatibleValue {
        path: String,
        expected: &'static str,
        found: String,
    },
    #[error("{path}: {source}")]
    Deck { path: String, source: DeckError },
    #[error("topology file `{0}` has not been resolved")]
    TopologyUnresolved(String),
}

/// Checks a value against the slot its key names. Keys without a known
/// slot accept any value.
fn check_slot(key: &str, value: &ParamValue) -> Result<(), (&'static str, String)> {
    let found = || value.kind_name().to_string();
    match key {
        "position" | "orientation" => match value {
            ParamValue::RealVector(v) if v.len() == 3 => Ok(()),
            ParamValue::RealVector(v) => Err(("a 3-component real vector", format!("{} components", v.len()))),
            _ => Err(("a 3-component real vector", found())),
        },
        "length" | "A" | "Dh" => match value.as_f64() {
            Some(x) if x > 0.0 => Ok(()),
            Some(_) => Err(("a positive number", value.kind_name().to_string() + " <= 0")),
            None => Err(("a positive number", found())),
        },
        "n_elems" => match value {
            ParamValue::Integer(n) if *n > 0 => Ok(()),
            _ => Err(("a positive integer", found())),
        },
        "type" => match value {
            ParamValue::String(_) => Ok(()),
            _ => Err(("a type name", found())),
        },
        _ if reference_target(key).is_some() => match value {
            ParamValue::Reference(_) | ParamValue::StringVector(_) => Ok(()),
            _ => Err(("a reference", found())),
        },
        _ => Ok(()),
    }
}

fn header(spec: &ModelSpec) -> Vec<String> {
    let mut lines = vec![format!("Title: {}", spec.title.trim())];
    let description: Vec<&str> = spec
        .description
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    match description.split_first() {
        None => lines.push("Description: not provided".to_string()),
        Some((first, rest)) => {
            lines.push(format!("Description: {first}"));
            lines.extend(rest.iter().map(|l| l.to_string()));
        }
    }
    lines
}

/// Whether the deck now supplies what a gap record asks for.
pub fn gap_resolved(deck: &InputDeck, gap: &GapRecord) -> bool {
    if gap.key == "*" {
        return deck
            .block(&gap.section)
            .is_some_and(|b| !b.params.is_empty() || !b.children.is_empty());
    }
    matches!(deck.get_param(&format!("{}/{}", gap.section, gap.key)), Ok(Some(_)))
}

/// Residual gaps of a deck: the declared gaps it does not resolve, then
/// whatever the registry still requires.
pub fn residual_gaps(deck: &InputDeck, registry: &BlockRegistry, declared: &[GapRecord]) -> Vec<GapRecord> {
    let mut gaps: Vec<GapRecord> = declared.iter().filter(|g| !gap_resolved(deck, g)).cloned().collect();
    let mut add = |g: GapRecord| {
        if !gaps.iter().any(|e| e.section == g.section && e.key == g.key) {
            gaps.push(g);
        }
    };
    for rule in registry.rules() {
        let has_requirements = !rule.required_params.is_empty() || rule.min_children > 0;
        let block = deck.block(&rule.name);
        let empty = block.map_or(true, |b| b.params.is_empty() && b.children.is_empty());
        if !has_requirements {
            continue;
        }
        if empty {
            add(GapRecord {
                section: rule.name.clone(),
                key: "*".into(),
                reason: "no entries for a required block".into(),
            });
            continue;
        }
        let block = block.expect("nonempty block exists");
        for p in &rule.required_params {
            if block.param(p).is_none() {
                add(GapRecord {
                    section: rule.name.clone(),
                    key: p.clone(),
                    reason: format!("required parameter `{p}` has no value"),
                });
            }
        }
        if block.children.len() < rule.min_children {
            add(GapRecord {
                section: rule.name.clone(),
                key: "*".into(),
                reason: format!("needs at least {} sub-block(s)", rule.min_children),
            });
        }
    }
    gaps
}

/// Compiles a spec into a deck.
///
/// Every registry block is emitted in registry order, as an empty
/// placeholder when the model spec has nothing for it. The topology graph, when
/// present, expands into `Components` sub-blocks ahead of explicit
/// component entries, which may refine them. Nothing is defaulted: items
/// that remain missing are returned as residual gaps.
pub fn compile_spec(spec: &ModelSpec, registry: &BlockRegistry) -> Result<CompileOutput, CompileError> {
    let mut deck = InputDeck {
        header: header(spec),
        ..Default::default()
    };
    for name in registry.required_blocks() {
        deck.ensure_block(name);
    }
    let mut trace = TraceMap::new();

    if let Some(file_entry) = spec.entry(TOPOLOGY_SECTION, "file") {
        let graph = spec.topology.as_ref().ok_or_else(|| {
            CompileError::TopologyUnresolved(file_entry.value.as_str().unwrap_or_default().to_string())
        })?;
        let components = deck.ensure_block("Components");
        components.leading_comments.push("Flow components generated from the topology graph".into());
        components.children.extend(to_components(graph));
        let source = TraceEntry::of(TOPOLOGY_SECTION, file_entry);
        for (path, _) in deck.params_with_paths() {
            trace.insert(path, source.clone());
        }
    }

    for name in registry.required_blocks() {
        let Some(entries) = spec.sections.get(name) else {
            continue;
        };
        for e in entries {
            let path = format!("{name}/{}", e.key);
            let last = e.key.rsplit('/').next().unwrap_or(&e.key);
            check_slot(last, &e.value).map_err(|(expected, found)| CompileError::IncompatibleValue {
                path: path.clone(),
                expected,
                found,
            })?;
            let mut param = Param::new(last, e.value.clone());
            param.unit_hint = e.units.clone();
            if e.assumed {
                param.comment = Some(format!("ASSUMED: {}", e.rationale.as_deref().unwrap_or_default()));
            }
            deck.set_param_at(&path, param)
                .map_err(|source| CompileError::Deck { path: path.clone(), source })?;
            trace.insert(path, TraceEntry::of(name, e));
        }
    }

    let residual_gaps = residual_gaps(&deck, registry, &spec.gaps);
    Ok(CompileOutput {
        deck,
        residual_gaps,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deck::serialize_deck;
    use crate::spec::ProvenanceKind;

    fn entry(key: &str, value: ParamValue) -> SpecEntry {
        SpecEntry::new(key, value, Provenance::new(ProvenanceKind::StructuredFile, "data.csv"))
    }

    fn spec_without_executioner() -> ModelSpec {
        let mut s = ModelSpec {
            title: "Pipe".into(),
            ..Default::default()
        };
        s.sections.insert(
            "GlobalParams".into(),
            vec![
                entry("global_init_P", ParamValue::Real(1e5)).with_units("Pa"),
                entry("global_init_T", ParamValue::Real(628.15)).with_units("K"),
            ],
        );
        s
    }

    #[test]
    fn missing_executioner_becomes_gap_with_placeholder() {
        let out = compile_spec(&spec_without_executioner(), &BlockRegistry::default()).unwrap();
        assert_eq!(out.deck.blocks.len(), 9);
        let exec = out.deck.block("Executioner").unwrap();
        assert!(exec.params.is_empty());
        assert!(out
            .residual_gaps
            .iter()
            .any(|g| g.section == "Executioner" && g.key == "*"));
        assert!(!out.residual_gaps.iter().any(|g| g.section == "GlobalParams"));
    }

    #[test]
    fn every_parameter_is_traced() {
        let out = compile_spec(&spec_without_executioner(), &BlockRegistry::default()).unwrap();
        let paths: Vec<String> = out.deck.params_with_paths().into_iter().map(|(p, _)| p).collect();
        assert_eq!(paths.len(), out.trace.len());
        for p in paths {
            assert!(out.trace.contains_key(&p), "{p}");
        }
    }

    #[test]
    fn compile_is_deterministic() {
        let s = spec_without_executioner();
        let a = serialize_deck(&compile_spec(&s, &BlockRegistry::default()).unwrap().deck);
        let b = serialize_deck(&compile_spec(&s, &BlockRegistry::default()).unwrap().deck);
        assert_eq!(a, b);
        assert!(a.starts_with("# Title: Pipe\n"));
    }

    #[test]
    fn incompatible_slot_is_rejected() {
        let mut s = spec_without_executioner();
        s.sections.insert(
            "Components".into(),
            vec![entry("pipe1/position", ParamValue::RealVector(vec![0.0, 1.0]))],
        );
        let err = compile_spec(&s, &BlockRegistry::default()).unwrap_err();
        assert!(matches!(err, CompileError::IncompatibleValue { ref path, .. } if path == "Components/pipe1/position"));
        s.sections.insert("Components".into(), vec![entry("pipe1/eos", ParamValue::Real(1.0))]);
        assert!(compile_spec(&s, &BlockRegistry::default()).is_err());
    }

    #[test]
    fn assumed_entries_are_annotated() {
        let mut s = spec_without_executioner();
        s.sections.insert(
            "Executioner".into(),
            vec![entry("type", ParamValue::String("Transient".into())).assumed("steady runs use a transient to converge")],
        );
        let out = compile_spec(&s, &BlockRegistry::default()).unwrap();
        let p = out.deck.get_param_entry("Executioner/type").unwrap().unwrap();
        assert_eq!(p.comment.as_deref(), Some("ASSUMED: steady runs use a transient to converge"));
        assert!(out.trace["Executioner/type"].assumed);
    }

    #[test]
    fn unresolved_topology_is_an_error() {
        let mut s = spec_without_executioner();
        s.sections.insert(
            TOPOLOGY_SECTION.into(),
            vec![entry("file", ParamValue::String("loop.json".into()))],
        );
        assert_eq!(
            compile_spec(&s, &BlockRegistry::default()).unwrap_err(),
            CompileError::TopologyUnresolved("loop.json".into())
        );
    }
}

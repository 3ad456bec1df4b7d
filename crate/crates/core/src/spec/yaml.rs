use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use super::{
    GapRecord, ModelSpec, Provenance, ProvenanceKind, SectionEntry, SpecEntry, SpecError,
    Superseded, TOPOLOGY_SECTION,
};
use crate::deck::{is_identifier, parse_value_literal, BlockRegistry, ParamValue};

/// One schema problem, located by a dotted path into the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    key: String,
    value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    assumed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rationale: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSuperseded {
    section: String,
    #[serde(flatten)]
    entry: RawEntry,
    superseded_by: ProvenanceKind,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    title: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
    #[serde(default)]
    sections: IndexMap<String, Vec<RawEntry>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    gaps: Vec<GapRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    superseded: Vec<RawSuperseded>,
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// Converts a YAML value to a deck value using the deck's own literal
/// rules, so a spec value always means what the same text would mean in a
/// deck.
fn value_from_yaml(key: &str, v: &Value) -> Result<ParamValue, String> {
    let last = key.rsplit('/').next().unwrap_or(key);
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(ParamValue::Integer(i))
            } else {
                match n.as_f64() {
                    Some(f) if f.is_finite() => Ok(ParamValue::Real(f)),
                    _ => Err("numbers must be finite".into()),
                }
            }
        }
        Value::Bool(b) => Ok(ParamValue::Boolean(*b)),
        Value::String(s) => {
            let literal = if s.trim().contains(char::is_whitespace) {
                format!("'{}'", s.trim())
            } else {
                s.clone()
            };
            parse_value_literal(last, &literal).map_err(|m| format!("`{s}`: {m}"))
        }
        Value::Sequence(items) => {
            if items.is_empty() {
                return Err("sequences must be nonempty".into());
            }
            if items.iter().all(|i| matches!(i, Value::Number(_))) {
                let reals: Option<Vec<f64>> = items
                    .iter()
                    .map(|i| i.as_f64().filter(|f| f.is_finite()))
                    .collect();
                return reals
                    .map(ParamValue::RealVector)
                    .ok_or_else(|| "numbers must be finite".to_string());
            }
            let texts: Option<Vec<String>> = items.iter().map(scalar_text).collect();
            let texts = texts.ok_or("sequence items must be scalars")?;
            parse_value_literal(last, &format!("'{}'", texts.join(" "))).map_err(|m| m.to_string())
        }
        Value::Null => Err("value is missing".into()),
        Value::Mapping(_) => Err("nested mappings are not allowed as values".into()),
        Value::Tagged(_) => Err("YAML tags are not supported".into()),
    }
}

fn value_to_yaml(v: &ParamValue) -> Value {
    match v {
        ParamValue::Real(f) => Value::from(*f),
        ParamValue::Integer(i) => Value::from(*i),
        ParamValue::Boolean(b) => Value::from(*b),
        ParamValue::String(s) | ParamValue::Reference(s) => Value::from(s.as_str()),
        ParamValue::RealVector(v) => Value::Sequence(v.iter().map(|f| Value::from(*f)).collect()),
        ParamValue::StringVector(v) => {
            Value::Sequence(v.iter().map(|s| Value::from(s.as_str())).collect())
        }
    }
}

fn key_is_valid(key: &str) -> bool {
    !key.is_empty() && key.split('/').all(is_identifier)
}

fn section_is_valid(registry: &BlockRegistry, name: &str) -> bool {
    name == TOPOLOGY_SECTION || registry.is_required(name)
}

fn push(out: &mut Vec<Violation>, path: String, message: impl Into<String>) {
    out.push(Violation {
        path,
        message: message.into(),
    });
}

fn check_entry(raw: &RawEntry, path: &str, out: &mut Vec<Violation>) -> Option<SpecEntry> {
    let before = out.len();
    if !key_is_valid(&raw.key) {
        push(out, format!("{path}.key"), format!("`{}` is not a slash-separated identifier path", raw.key));
    }
    let value = match value_from_yaml(&raw.key, &raw.value) {
        Ok(v) => Some(v),
        Err(m) => {
            push(out, format!("{path}.value"), m);
            None
        }
    };
    match &raw.provenance {
        None => push(out, format!("{path}.provenance"), "every entry needs provenance"),
        Some(p) => {
            if p.source.trim().is_empty() {
                push(out, format!("{path}.provenance.source"), "source is empty");
            }
            if p.kind == ProvenanceKind::PdfPage && !matches!(p.page, Some(n) if n >= 1) {
                push(out, format!("{path}.provenance.page"), "pdf-page provenance needs a page number >= 1");
            }
            if raw.assumed && p.kind != ProvenanceKind::AgentAssumption {
                push(out, format!("{path}.provenance.kind"), "assumed entries must have agent-assumption provenance");
            }
        }
    }
    if raw.assumed && raw.rationale.as_deref().map_or(true, |r| r.trim().is_empty()) {
        push(out, format!("{path}.rationale"), "assumed entries need a rationale");
    }
    if out.len() > before {
        return None;
    }
    Some(SpecEntry {
        key: raw.key.clone(),
        value: value?,
        units: raw.units.clone(),
        provenance: raw.provenance.clone()?,
        assumed: raw.assumed,
        rationale: raw.rationale.clone(),
    })
}

fn check_topology_entry(e: &SpecEntry, path: &str, out: &mut Vec<Violation>) {
    match (e.key.as_str(), &e.value) {
        ("file", ParamValue::String(_)) => {}
        ("scale", v) if v.as_f64().is_some_and(|s| s > 0.0) => {}
        ("file" | "scale", _) => push(out, format!("{path}.value"), "topology file must be a path, scale a positive number"),
        _ => push(out, format!("{path}.key"), "topology section accepts only `file` and `scale`"),
    }
}

fn parse_raw<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, SpecError> {
    // anchors and aliases are outside the supported subset
    let value: Value = serde_yaml::from_str(text).map_err(|e| SpecError::Yaml(e.to_string()))?;
    serde_yaml::from_value(value).map_err(|e| SpecError::Yaml(e.to_string()))
}

pub(super) fn load_spec(text: &str) -> Result<ModelSpec, SpecError> {
    let raw: RawSpec = parse_raw(text)?;
    let registry = BlockRegistry::default();
    let mut out = Vec::new();
    if raw.title.trim().is_empty() {
        push(&mut out, "title".into(), "title is required");
    }
    let mut sections: IndexMap<String, Vec<SpecEntry>> = IndexMap::new();
    for (name, entries) in &raw.sections {
        if !section_is_valid(&registry, name) {
            push(&mut out, format!("sections.{name}"), "unknown section; expected a deck block name or `topology`");
            continue;
        }
        let mut checked = Vec::new();
        for (i, raw_entry) in entries.iter().enumerate() {
            let path = format!("sections.{name}[{i}]");
            if let Some(e) = check_entry(raw_entry, &path, &mut out) {
                if checked.iter().any(|c: &SpecEntry| c.key == e.key) {
                    push(&mut out, format!("{path}.key"), format!("duplicate key `{}`", e.key));
                    continue;
                }
                if name == TOPOLOGY_SECTION {
                    check_topology_entry(&e, &path, &mut out);
                }
                checked.push(e);
            }
        }
        sections.insert(name.clone(), checked);
    }
    for (i, gap) in raw.gaps.iter().enumerate() {
        let path = format!("gaps[{i}]");
        if !section_is_valid(&registry, &gap.section) {
            push(&mut out, format!("{path}.section"), format!("unknown section `{}`", gap.section));
        } else if gap.key != "*" && !key_is_valid(&gap.key) {
            push(&mut out, format!("{path}.key"), format!("`{}` is not a valid key", gap.key));
        } else if raw
            .sections
            .get(&gap.section)
            .is_some_and(|es| es.iter().any(|e| e.key == gap.key))
        {
            push(&mut out, path, format!("`{}/{}` is both an entry and a gap", gap.section, gap.key));
        }
    }
    let mut superseded = Vec::new();
    for (i, s) in raw.superseded.iter().enumerate() {
        let path = format!("superseded[{i}]");
        if let Some(entry) = check_entry(&s.entry, &path, &mut out) {
            superseded.push(Superseded {
                section: s.section.clone(),
                entry,
                superseded_by: s.superseded_by,
            });
        }
    }
    if !out.is_empty() {
        return Err(SpecError::Schema(out));
    }
    Ok(ModelSpec {
        title: raw.title,
        description: raw.description,
        sections,
        gaps: raw.gaps,
        superseded,
        topology: None,
    })
}

fn raw_entry(e: &SpecEntry) -> RawEntry {
    RawEntry {
        key: e.key.clone(),
        value: value_to_yaml(&e.value),
        units: e.units.clone(),
        provenance: Some(e.provenance.clone()),
        assumed: e.assumed,
        rationale: e.rationale.clone(),
    }
}

pub(super) fn write_spec(spec: &ModelSpec) -> String {
    let raw = RawSpec {
        title: spec.title.clone(),
        description: spec.description.clone(),
        sections: spec
            .sections
            .iter()
            .map(|(k, es)| (k.clone(), es.iter().map(raw_entry).collect()))
            .collect(),
        gaps: spec.gaps.clone(),
        superseded: spec
            .superseded
            .iter()
            .map(|s| RawSuperseded {
                section: s.section.clone(),
                entry: raw_entry(&s.entry),
                superseded_by: s.superseded_by,
            })
            .collect(),
    };
    serde_yaml::to_string(&raw).expect("spec serializes")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverrides {
    #[serde(default)]
    title: Option<String>,
    sections: IndexMap<String, Vec<RawEntry>>,
}

/// Parses an override document: a `sections:` map in the model spec layout whose
/// entries come from structured files or the user.
pub fn load_overrides(text: &str) -> Result<Vec<SectionEntry>, SpecError> {
    let raw: RawOverrides = parse_raw(text)?;
    let _ = raw.title;
    let registry = BlockRegistry::default();
    let mut out = Vec::new();
    let mut entries = Vec::new();
    for (name, list) in &raw.sections {
        if !section_is_valid(&registry, name) {
            push(&mut out, format!("sections.{name}"), "unknown section");
            continue;
        }
        for (i, r) in list.iter().enumerate() {
            let path = format!("sections.{name}[{i}]");
            if let Some(e) = check_entry(r, &path, &mut out) {
                if !matches!(
                    e.provenance.kind,
                    ProvenanceKind::StructuredFile | ProvenanceKind::UserOverride
                ) {
                    push(&mut out, format!("{path}.provenance.kind"), "overrides must come from a structured file or the user");
                    continue;
                }
                entries.push(SectionEntry {
                    section: name.clone(),
                    entry: e,
                });
            }
        }
    }
    if !out.is_empty() {
        return Err(SpecError::Schema(out));
    }
    Ok(entries)
}

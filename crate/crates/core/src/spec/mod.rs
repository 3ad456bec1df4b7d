//! The human-auditable model specification that sits between document
//! extraction and deck generation.
//!
//! A spec file (`*.spec.yaml`) mirrors the deck's top-level blocks one
//! section per block, plus a `topology` section pointing at a topology
//! JSON file. Every entry records where its value came from; values the
//! agent had to assume are flagged with a rationale, and known-missing
//! items are listed as gaps.
//!
//! ```yaml
//! title: Single sodium pipe
//! description: Steady forced convection in a 1 m vertical pipe
//! sections:
//!   GlobalParams:
//!     - key: global_init_T
//!       value: 628.15
//!       units: K
//!       provenance: { kind: structured-file, source: pipe.csv, locator: row 3 }
//!   Components:
//!     - key: pipe1/n_elems
//!       value: 20
//!       provenance: { kind: structured-file, source: pipe.csv }
//! gaps:
//!   - { section: Executioner, key: end_time, reason: not given in the report }
//! ```

mod compile;
mod merge;
mod yaml;

pub use compile::{compile_spec, gap_resolved, residual_gaps, CompileError, CompileOutput, TraceEntry, TraceMap};
pub use merge::{merge_overrides, SectionEntry, Superseded};
pub use yaml::{load_overrides, Violation};

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deck::ParamValue;
use crate::topology::{load_topology, BuildOptions, TopologyGraph, TopologyLoadError};

/// Name of the pseudo-section holding the topology reference.
pub const TOPOLOGY_SECTION: &str = "topology";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProvenanceKind {
    StructuredFile,
    PdfPage,
    Image,
    AgentAssumption,
    UserOverride,
}

impl ProvenanceKind {
    /// Precedence when two values compete for the same key: user-supplied
    /// structured data beats extracted values, which beat assumptions.
    pub fn rank(self) -> u8 {
        match self {
            ProvenanceKind::StructuredFile | ProvenanceKind::UserOverride => 3,
            ProvenanceKind::PdfPage | ProvenanceKind::Image => 2,
            ProvenanceKind::AgentAssumption => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub kind: ProvenanceKind,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<u32>,
    /// Cell, region or other free-form locator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator: Option<String>,
}

impl Provenance {
    pub fn new(kind: ProvenanceKind, source: impl Into<String>) -> Self {
        Self {
            kind,
            source: source.into(),
            page: None,
            locator: None,
        }
    }

    pub fn on_page(mut self, page: u32) -> Self {
        self.page = Some(page);
        self
    }

    pub fn at(mut self, locator: impl Into<String>) -> Self {
        self.locator = Some(locator.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecEntry {
    /// Slash-separated path relative to the section block, e.g. `pipe1/Dh`.
    pub key: String,
    pub value: ParamValue,
    pub units: Option<String>,
    pub provenance: Provenance,
    pub assumed: bool,
    pub rationale: Option<String>,
}

impl SpecEntry {
    pub fn new(key: impl Into<String>, value: ParamValue, provenance: Provenance) -> Self {
        Self {
            key: key.into(),
            value,
            units: None,
            provenance,
            assumed: false,
            rationale: None,
        }
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = Some(units.into());
        self
    }

    /// Marks the entry as an agent assumption with the given rationale.
    pub fn assumed(mut self, rationale: impl Into<String>) -> Self {
        self.assumed = true;
        self.rationale = Some(rationale.into());
        self.provenance.kind = ProvenanceKind::AgentAssumption;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRecord {
    pub section: String,
    /// Entry key, or `*` when the whole section is missing.
    pub key: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSpec {
    pub title: String,
    pub description: String,
    pub sections: IndexMap<String, Vec<SpecEntry>>,
    pub gaps: Vec<GapRecord>,
    /// Entries displaced while merging overrides.
    pub superseded: Vec<Superseded>,
    /// Graph referenced by the `topology` section, once resolved.
    pub topology: Option<TopologyGraph>,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("spec is not valid YAML: {0}")]
    Yaml(String),
    #[error("spec schema violations:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Schema(Vec<Violation>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Topology(#[from] TopologyLoadError),
}

impl ModelSpec {
    /// Parses and checks a spec document, reporting every violation.
    pub fn from_yaml(text: &str) -> Result<Self, SpecError> {
        yaml::load_spec(text)
    }

    pub fn to_yaml(&self) -> String {
        yaml::write_spec(self)
    }

    /// Loads a spec file and resolves its topology reference relative to
    /// the file's directory.
    pub fn load_file(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut spec = Self::from_yaml(&text)?;
        spec.resolve_topology(path.parent().unwrap_or(Path::new(".")), BuildOptions::default())?;
        Ok(spec)
    }

    /// Loads the graph named by `topology/file`, if any. A `topology/scale`
    /// entry overrides the file's own scale factor.
    pub fn resolve_topology(&mut self, base: &Path, opts: BuildOptions) -> Result<(), SpecError> {
        let Some(file) = self.topology_file().map(str::to_string) else {
            return Ok(());
        };
        let path = base.join(&file);
        let graph = match self.entry(TOPOLOGY_SECTION, "scale").and_then(|e| e.value.as_f64()) {
            Some(scale) => {
                let text = std::fs::read_to_string(&path).map_err(|source| SpecError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let mut tf = crate::topology::TopologyFile::from_json(&text).map_err(|source| {
                    TopologyLoadError::Json {
                        path: path.display().to_string(),
                        source,
                    }
                })?;
                tf.scale = scale;
                tf.build(opts).map_err(|source| TopologyLoadError::Topology {
                    path: path.display().to_string(),
                    source,
                })?
            }
            None => load_topology(&path, opts)?,
        };
        self.topology = Some(graph);
        Ok(())
    }

    pub fn topology_file(&self) -> Option<&str> {
        self.entry(TOPOLOGY_SECTION, "file").and_then(|e| e.value.as_str())
    }

    pub fn entry(&self, section: &str, key: &str) -> Option<&SpecEntry> {
        self.sections.get(section)?.iter().find(|e| e.key == key)
    }

    /// Number of entries across all sections.
    pub fn entry_count(&self) -> usize {
        self.sections.values().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
title: Minimal
sections:
  GlobalParams:
    - key: global_init_T
      value: 628.15
      units: K
      provenance: { kind: structured-file, source: pipe.csv, locator: B3 }
"#;

    #[test]
    fn minimal_spec_loads() {
        let spec = ModelSpec::from_yaml(MINIMAL).unwrap();
        assert_eq!(spec.title, "Minimal");
        assert!(spec.gaps.is_empty());
        let e = spec.entry("GlobalParams", "global_init_T").unwrap();
        assert_eq!(e.value, ParamValue::Real(628.15));
        assert_eq!(e.units.as_deref(), Some("K"));
    }

    #[test]
    fn assumed_without_rationale_is_reported_at_its_path() {
        let text = r#"
title: Bad
sections:
  Executioner:
    - key: end_time
      value: 100.0
      assumed: true
      provenance: { kind: agent-assumption, source: agent }
"#;
        let SpecError::Schema(v) = ModelSpec::from_yaml(text).unwrap_err() else {
            panic!("expected schema error");
        };
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "sections.Executioner[0].rationale");
    }

    #[test]
    fn all_violations_are_listed() {
        let text = r#"
title: Bad
sections:
  Solver:
    - key: x
      value: 1
      provenance: { kind: structured-file, source: a }
  GlobalParams:
    - key: "bad key"
      value: 1
      provenance: { kind: pdf-page, source: r.pdf }
    - key: global_init_P
      value: 1.0e5
gaps:
  - { section: GlobalParams, key: global_init_P, reason: dup }
"#;
        let SpecError::Schema(v) = ModelSpec::from_yaml(text).unwrap_err() else {
            panic!("expected schema error");
        };
        let paths: Vec<&str> = v.iter().map(|v| v.path.as_str()).collect();
        assert_eq!(
            paths,
            [
                "sections.Solver",
                "sections.GlobalParams[0].key",
                "sections.GlobalParams[0].provenance.page",
                "sections.GlobalParams[1].provenance",
                "gaps[0]",
            ]
        );
    }

    #[test]
    fn yaml_round_trip() {
        let mut spec = ModelSpec::from_yaml(MINIMAL).unwrap();
        spec.gaps.push(GapRecord {
            section: "Executioner".into(),
            key: "*".into(),
            reason: "no solver settings given".into(),
        });
        spec.sections.insert(
            "Components".into(),
            vec![
                SpecEntry::new(
                    "pipe1/position",
                    ParamValue::RealVector(vec![0.0, 0.0, 0.0]),
                    Provenance::new(ProvenanceKind::Image, "loop.png").at("node N0"),
                ),
                SpecEntry::new(
                    "inlet/output",
                    ParamValue::Reference("pipe1(in)".into()),
                    Provenance::new(ProvenanceKind::PdfPage, "r.pdf").on_page(3),
                )
                .assumed("inlet location inferred from the flow arrow"),
            ],
        );
        let again = ModelSpec::from_yaml(&spec.to_yaml()).unwrap();
        assert_eq!(again, spec);
    }
}

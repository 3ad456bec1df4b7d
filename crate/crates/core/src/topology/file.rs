use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_graph, BuildOptions, End, Node, SegmentKind, TopologyError, TopologyGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub name: String,
    pub kind: SegmentKind,
    pub start: String,
    pub end: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSpec {
    pub segment: String,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSpec {
    pub name: String,
    pub node: String,
    pub ports: Vec<PortSpec>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub component_type: Option<String>,
}

fn default_scale() -> f64 {
    1.0
}

/// On-disk topology description (JSON). Coordinates are multiplied by
/// `scale` to obtain metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub junctions: Vec<JunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_path: Option<Vec<String>>,
}

impl TopologyFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn build(&self, opts: BuildOptions) -> Result<TopologyGraph, TopologyError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(TopologyError::InvalidScale(self.scale));
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node::new(n.id.clone(), n.x * self.scale, n.y * self.scale))
            .collect();
        build_graph(nodes, &self.segments, &self.junctions, self.flow_path.clone(), opts)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed topology JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Topology { path: String, source: TopologyError },
}

/// Reads and builds a topology JSON file.
pub fn load_topology(path: &Path, opts: BuildOptions) -> Result<TopologyGraph, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: shown.clone(),
        source,
    })?;
    let file = TopologyFile::from_json(&text).map_err(|source| LoadError::Json {
        path: shown.clone(),
        source,
    })?;
    file.build(opts)
        .map_err(|source| LoadError::Topology { path: shown, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_applies_to_coordinates() {
        let f = TopologyFile::from_json(
            r#"{"scale": 0.001,
                "nodes": [{"id":"a","x":0,"y":0},{"id":"b","x":0,"y":2000}],
                "segments": [{"name":"p","kind":"pipe","start":"a","end":"b"}]}"#,
        )
        .unwrap();
        let g = f.build(BuildOptions::default()).unwrap();
        assert!((g.segments[0].length - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_scale_and_unknown_fields() {
        let f = TopologyFile::from_json(r#"{"scale": 0, "nodes": []}"#).unwrap();
        assert_eq!(f.build(BuildOptions::default()), Err(TopologyError::InvalidScale(0.0)));
        assert!(TopologyFile::from_json(r#"{"nodes": [], "edges": []}"#).is_err());
    }
}

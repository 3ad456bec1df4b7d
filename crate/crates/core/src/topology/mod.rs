//! 1-D component topology from annotated 2-D schematic nodes.
//!
//! A schematic gives labelled nodes with X-Y coordinates. Each flow
//! component is a straight segment between two nodes, described by its
//! start point, unit orientation and length; junctions tie component ends
//! together at a shared node.

mod closure;
mod components;
mod file;

pub use closure::{check_closure, FlowPathReport, Termination};
pub use components::{default_component_type, to_components};
pub use file::{
    load_topology, JunctionSpec, LoadError as TopologyLoadError, PortSpec, SegmentSpec, TopologyFile,
};

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coincidence tolerance for node positions, in metres.
pub const DEFAULT_GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("segment `{0}` has coincident endpoints")]
    DegenerateSegment(String),
    #[error("unresolved reference to {what} `{id}`")]
    UnresolvedReference { what: &'static str, id: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("node `{0}` has a non-finite coordinate")]
    NonFiniteCoordinate(String),
    #[error("scale factor must be finite and positive, got {0}")]
    InvalidScale(f64),
    #[error("junction `{0}` needs at least two ports")]
    TooFewPorts(String),
    #[error("port {segment}({end}) of junction `{junction}` is {distance:.3e} m from the junction node")]
    PortMismatch {
        junction: String,
        segment: String,
        end: End,
        distance: f64,
    },
    #[error("port {segment}({end}) is claimed by more than one junction")]
    DuplicatePort { segment: String, end: End },
    #[error("segments `{0}` and `{1}` duplicate the same directed edge")]
    DuplicateEdge(String, String),
    #[error("junction `{junction}` offers {} continuations ({}) and the declared flow path does not choose one", candidates.len(), candidates.join(", "))]
    AmbiguousTraversal {
        junction: String,
        candidates: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Pipe,
    CoreChannel,
    Plenum,
    Pump,
    HeatExchanger,
    Other,
}

/// Which end of a segment a port refers to. Flow runs inlet → outlet,
/// i.e. from the start node to the end node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum End {
    Inlet,
    Outlet,
}

impl std::fmt::Display for End {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            End::Inlet => "in",
            End::Outlet => "out",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub name: String,
    pub kind: SegmentKind,
    pub start_node: String,
    pub end_node: String,
    pub start: [f64; 2],
    pub orientation: [f64; 2],
    pub length: f64,
}

impl Segment {
    pub fn end_point(&self) -> [f64; 2] {
        [
            self.start[0] + self.orientation[0] * self.length,
            self.start[1] + self.orientation[1] * self.length,
        ]
    }

    /// Coordinates of the given end.
    pub fn point(&self, end: End) -> [f64; 2] {
        match end {
            End::Inlet => self.start,
            End::Outlet => self.end_point(),
        }
    }
}

/// Builds a segment from two nodes: orientation `(b - a) / |b - a|`,
/// length `|b - a|`.
pub fn segment_from_nodes(
    name: &str,
    kind: SegmentKind,
    a: &Node,
    b: &Node,
    eps: f64,
) -> Result<Segment, TopologyError> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let length = dx.hypot(dy);
    if !(length >= eps) {
        return Err(TopologyError::DegenerateSegment(name.to_string()));
    }
    Ok(Segment {
        name: name.to_string(),
        kind,
        start_node: a.id.clone(),
        end_node: b.id.clone(),
        start: [a.x, a.y],
        orientation: [dx / length, dy / length],
        length,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Port {
    pub segment: String,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Junction {
    pub name: String,
    pub node: String,
    pub ports: Vec<Port>,
    /// Deck component type override (e.g. a liquid volume acting as the
    /// loop pressure reference).
    pub component_type: Option<String>,
}

/// Tolerances used while building a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Minimum segment length.
    pub eps: f64,
    /// Maximum port-to-junction-node distance.
    pub port_tolerance: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_GEOM_EPS,
            port_tolerance: DEFAULT_GEOM_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TopologyGraph {
    pub nodes: Vec<Node>,
    pub segments: Vec<Segment>,
    pub junctions: Vec<Junction>,
    pub declared_flow_path: Option<Vec<String>>,
}

/// Builds and checks a graph. Nodes are taken as given (already scaled).
pub fn build_graph(
    nodes: Vec<Node>,
    segments: &[SegmentSpec],
    junctions: &[JunctionSpec],
    flow_path: Option<Vec<String>>,
    opts: BuildOptions,
) -> Result<TopologyGraph, TopologyError> {
    let mut node_index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if !crate::deck::is_identifier(&n.id) {
            return Err(TopologyError::InvalidName(n.id.clone()));
        }
        if !(n.x.is_finite() && n.y.is_finite()) {
            return Err(TopologyError::NonFiniteCoordinate(n.id.clone()));
        }
        if node_index.insert(&n.id, i).is_some() {
            return Err(TopologyError::DuplicateName(n.id.clone()));
        }
    }
    let lookup = |id: &str| -> Result<&Node, TopologyError> {
        node_index
            .get(id)
            .map(|&i| &nodes[i])
            .ok_or_else(|| TopologyError::UnresolvedReference {
                what: "node",
                id: id.to_string(),
            })
    };

    // segments and junctions become sibling components, so share a namespace
    let mut names: HashSet<&str> = HashSet::new();
    let mut built = Vec::with_capacity(segments.len());
    for spec in segments {
        if !crate::deck::is_identifier(&spec.name) {
            return Err(TopologyError::InvalidName(spec.name.clone()));
        }
        if !names.insert(&spec.name) {
            return Err(TopologyError::DuplicateName(spec.name.clone()));
        }
        let a = lookup(&spec.start)?;
        let b = lookup(&spec.end)?;
        built.push(segment_from_nodes(&spec.name, spec.kind, a, b, opts.eps)?);
    }
    let seg_index: HashMap<&str, usize> = built
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();

    let mut claimed: HashSet<(String, End)> = HashSet::new();
    let mut built_junctions = Vec::with_capacity(junctions.len());
    for spec in junctions {
        if !crate::deck::is_identifier(&spec.name) {
            return Err(TopologyError::InvalidName(spec.name.clone()));
        }
        if !names.insert(&spec.name) {
            return Err(TopologyError::DuplicateName(spec.name.clone()));
        }
        let node = lookup(&spec.node)?;
        if spec.ports.len() < 2 {
            return Err(TopologyError::TooFewPorts(spec.name.clone()));
        }
        let mut ports = Vec::with_capacity(spec.ports.len());
        for p in &spec.ports {
            let seg = seg_index
                .get(p.segment.as_str())
                .map(|&i| &built[i])
                .ok_or_else(|| TopologyError::UnresolvedReference {
                    what: "segment",
                    id: p.segment.clone(),
                })?;
            let [px, py] = seg.point(p.end);
            let distance = (px - node.x).hypot(py - node.y);
            if !(distance <= opts.port_tolerance) {
                return Err(TopologyError::PortMismatch {
                    junction: spec.name.clone(),
                    segment: p.segment.clone(),
                    end: p.end,
                    distance,
                });
            }
            if !claimed.insert((p.segment.clone(), p.end)) {
                return Err(TopologyError::DuplicatePort {
                    segment: p.segment.clone(),
                    end: p.end,
                });
            }
            ports.push(Port {
                segment: p.segment.clone(),
                end: p.end,
            });
        }
        built_junctions.push(Junction {
            name: spec.name.clone(),
            node: spec.node.clone(),
            ports,
            component_type: spec.component_type.clone(),
        });
    }

    if let Some(path) = &flow_path {
        for name in path {
            if !seg_index.contains_key(name.as_str()) {
                return Err(TopologyError::UnresolvedReference {
                    what: "segment",
                    id: name.clone(),
                });
            }
        }
    }

    let graph = TopologyGraph {
        nodes,
        segments: built,
        junctions: built_junctions,
        declared_flow_path: flow_path,
    };
    graph.check_duplicate_edges()?;
    Ok(graph)
}

impl TopologyGraph {
    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Junction holding the given segment end, if any.
    pub fn junction_at(&self, segment: &str, end: End) -> Option<&Junction> {
        self.junctions
            .iter()
            .find(|j| j.ports.iter().any(|p| p.segment == segment && p.end == end))
    }

    /// Two segments over the same directed node pair are a duplicated edge
    /// unless both ends sit in common junctions (parallel branches between a
    /// split and a merge).
    fn check_duplicate_edges(&self) -> Result<(), TopologyError> {
        let mut seen: HashMap<(&str, &str), &Segment> = HashMap::new();
        for seg in &self.segments {
            let key = (seg.start_node.as_str(), seg.end_node.as_str());
            if let Some(prev) = seen.get(&key) {
                let same = |end| {
                    match (self.junction_at(&prev.name, end), self.junction_at(&seg.name, end)) {
                        (Some(a), Some(b)) => a.name == b.name,
                        _ => false,
                    }
                };
                if !(same(End::Inlet) && same(End::Outlet)) {
                    return Err(TopologyError::DuplicateEdge(prev.name.clone(), seg.name.clone()));
                }
            } else {
                seen.insert(key, seg);
            }
        }
        Ok(())
    }

    /// The graph with one segment removed, together with its ports, any
    /// junction left with fewer than two ports, and its flow-path entry.
    pub fn without_segment(&self, name: &str) -> TopologyGraph {
        let mut g = self.clone();
        g.segments.retain(|s| s.name != name);
        for j in &mut g.junctions {
            j.ports.retain(|p| p.segment != name);
        }
        g.junctions.retain(|j| j.ports.len() >= 2);
        if let Some(path) = &mut g.declared_flow_path {
            path.retain(|s| s != name);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: &str, x: f64, y: f64) -> Node {
        Node::new(id, x, y)
    }

    #[test]
    fn axis_aligned_segment() {
        let s = segment_from_nodes("p", SegmentKind::Pipe, &n("a", 0.0, 0.0), &n("b", 0.0, 2.0), 1e-9)
            .unwrap();
        assert_eq!(s.orientation, [0.0, 1.0]);
        assert_eq!(s.length, 2.0);
    }

    #[test]
    fn three_four_five_segment() {
        let s = segment_from_nodes("p", SegmentKind::Pipe, &n("a", 0.0, 0.0), &n("b", 3.0, 4.0), 1e-9)
            .unwrap();
        assert!((s.length - 5.0).abs() <= 1e-12);
        assert!((s.orientation[0] - 0.6).abs() <= 1e-12);
        assert!((s.orientation[1] - 0.8).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_segment() {
        let e = segment_from_nodes("p", SegmentKind::Pipe, &n("a", 1.0, 1.0), &n("b", 1.0, 1.0), 1e-9)
            .unwrap_err();
        assert_eq!(e, TopologyError::DegenerateSegment("p".into()));
    }

    fn seg(name: &str, a: &str, b: &str) -> SegmentSpec {
        SegmentSpec {
            name: name.into(),
            kind: SegmentKind::Pipe,
            start: a.into(),
            end: b.into(),
        }
    }

    fn port(s: &str, end: End) -> PortSpec {
        PortSpec {
            segment: s.into(),
            end,
        }
    }

    #[test]
    fn single_segment_graph() {
        let g = build_graph(
            vec![n("a", 0.0, 0.0), n("b", 0.0, 1.0)],
            &[seg("p", "a", "b")],
            &[],
            None,
            BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(g.segments.len(), 1);
    }

    #[test]
    fn unresolved_node() {
        let e = build_graph(vec![n("a", 0.0, 0.0)], &[seg("p", "a", "zz")], &[], None, BuildOptions::default())
            .unwrap_err();
        assert_eq!(
            e,
            TopologyError::UnresolvedReference {
                what: "node",
                id: "zz".into()
            }
        );
    }

    #[test]
    fn displaced_port_is_rejected() {
        let nodes = vec![n("a", 0.0, 0.0), n("b", 0.0, 1.0), n("c", 0.0, 2.0), n("j", 0.01, 1.0)];
        let e = build_graph(
            nodes,
            &[seg("p1", "a", "b"), seg("p2", "b", "c")],
            &[JunctionSpec {
                name: "j1".into(),
                node: "j".into(),
                ports: vec![port("p1", End::Outlet), port("p2", End::Inlet)],
                component_type: None,
            }],
            None,
            BuildOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(e, TopologyError::PortMismatch { ref segment, .. } if segment == "p1"));
    }

    #[test]
    fn port_tolerance_is_configurable() {
        let nodes = vec![n("a", 0.0, 0.0), n("b", 0.0, 1.0), n("c", 0.0, 2.0), n("j", 0.01, 1.0)];
        let opts = BuildOptions {
            port_tolerance: 0.05,
            ..Default::default()
        };
        assert!(build_graph(
            nodes,
            &[seg("p1", "a", "b"), seg("p2", "b", "c")],
            &[JunctionSpec {
                name: "j1".into(),
                node: "j".into(),
                ports: vec![port("p1", End::Outlet), port("p2", End::Inlet)],
                component_type: None,
            }],
            None,
            opts,
        )
        .is_ok());
    }

    #[test]
    fn duplicate_edge_without_junctions() {
        let e = build_graph(
            vec![n("a", 0.0, 0.0), n("b", 0.0, 1.0)],
            &[seg("p1", "a", "b"), seg("p2", "a", "b")],
            &[],
            None,
            BuildOptions::default(),
        )
        .unwrap_err();
        assert_eq!(e, TopologyError::DuplicateEdge("p1".into(), "p2".into()));
    }

    #[test]
    fn too_few_ports() {
        let e = build_graph(
            vec![n("a", 0.0, 0.0), n("b", 0.0, 1.0)],
            &[seg("p1", "a", "b")],
            &[JunctionSpec {
                name: "j".into(),
                node: "b".into(),
                ports: vec![port("p1", End::Outlet)],
                component_type: None,
            }],
            None,
            BuildOptions::default(),
        )
        .unwrap_err();
        assert_eq!(e, TopologyError::TooFewPorts("j".into()));
    }
}

use std::collections::HashSet;

use serde::Serialize;

use super::{End, TopologyError, TopologyGraph};

/// How a flow-path traversal stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    /// Came back to the starting segment.
    Closed,
    /// Outlet of `segment` is not attached to any junction.
    Boundary { segment: String },
    /// Junction continues only into segments' outlets (no inlet to follow).
    DeadEnd { junction: String },
    /// Re-entered an already visited segment other than the start.
    Revisit { segment: String },
    /// The graph has no segments.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowPathReport {
    pub closed: bool,
    pub start: Option<String>,
    pub order: Vec<String>,
    /// Segments the traversal never visited.
    pub unreachable: Vec<String>,
    pub termination: Termination,
    /// Whether the traversal order equals the declared flow path, when one
    /// is declared.
    pub matches_declared: Option<bool>,
}

impl FlowPathReport {
    /// One-line `a -> b -> c` summary of the traversal.
    pub fn summary(&self) -> String {
        let mut s = self.order.join(" -> ");
        if self.closed {
            if let Some(start) = &self.start {
                s.push_str(" -> ");
                s.push_str(start);
            }
        }
        s
    }
}

/// Follows outlet → junction → inlet links from the first declared segment
/// (or the first segment) and reports whether the path closes on itself.
pub fn check_closure(graph: &TopologyGraph) -> Result<FlowPathReport, TopologyError> {
    let declared = graph.declared_flow_path.as_deref();
    let start = declared
        .and_then(|p| p.first().cloned())
        .or_else(|| graph.segments.first().map(|s| s.name.clone()));
    let Some(start) = start else {
        return Ok(FlowPathReport {
            closed: false,
            start: None,
            order: Vec::new(),
            unreachable: Vec::new(),
            termination: Termination::Empty,
            matches_declared: declared.map(|p| p.is_empty()),
        });
    };

    let mut order = vec![start.clone()];
    let mut visited: HashSet<String> = HashSet::from([start.clone()]);
    let mut current = start.clone();
    let termination = loop {
        let Some(junction) = graph.junction_at(&current, End::Outlet) else {
            break Termination::Boundary {
                segment: current.clone(),
            };
        };
        let candidates: Vec<&str> = junction
            .ports
            .iter()
            .filter(|p| p.end == End::Inlet)
            .map(|p| p.segment.as_str())
            .collect();
        let next = match candidates.as_slice() {
            [] => {
                break Termination::DeadEnd {
                    junction: junction.name.clone(),
                }
            }
            [only] => only.to_string(),
            many => {
                let chosen = declared.and_then(|path| {
                    let pos = path.iter().position(|s| *s == current)?;
                    let following = path.get(pos + 1).or_else(|| path.first())?;
                    many.contains(&following.as_str()).then(|| following.clone())
                });
                chosen.ok_or_else(|| TopologyError::AmbiguousTraversal {
                    junction: junction.name.clone(),
                    candidates: many.iter().map(|s| s.to_string()).collect(),
                })?
            }
        };
        if next == start {
            break Termination::Closed;
        }
        if !visited.insert(next.clone()) {
            break Termination::Revisit { segment: next };
        }
        order.push(next.clone());
        current = next;
    };

    let unreachable = graph
        .segments
        .iter()
        .filter(|s| !visited.contains(&s.name))
        .map(|s| s.name.clone())
        .collect();
    Ok(FlowPathReport {
        closed: termination == Termination::Closed,
        start: Some(start),
        order: order.clone(),
        unreachable,
        termination,
        matches_declared: declared.map(|p| p == order.as_slice()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_graph, BuildOptions, JunctionSpec, Node, PortSpec, SegmentKind, SegmentSpec};

    fn chain() -> TopologyGraph {
        build_graph(
            vec![Node::new("a", 0.0, 0.0), Node::new("b", 0.0, 1.0), Node::new("c", 0.0, 2.0)],
            &[
                SegmentSpec { name: "p1".into(), kind: SegmentKind::Pipe, start: "a".into(), end: "b".into() },
                SegmentSpec { name: "p2".into(), kind: SegmentKind::Pipe, start: "b".into(), end: "c".into() },
            ],
            &[JunctionSpec {
                name: "j".into(),
                node: "b".into(),
                ports: vec![
                    PortSpec { segment: "p1".into(), end: End::Outlet },
                    PortSpec { segment: "p2".into(), end: End::Inlet },
                ],
                component_type: None,
            }],
            None,
            BuildOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn open_chain_terminates_at_boundary() {
        let r = check_closure(&chain()).unwrap();
        assert!(!r.closed);
        assert_eq!(r.order, vec!["p1", "p2"]);
        assert_eq!(r.termination, Termination::Boundary { segment: "p2".into() });
        assert!(r.unreachable.is_empty());
    }

    #[test]
    fn empty_graph() {
        let r = check_closure(&TopologyGraph::default()).unwrap();
        assert!(!r.closed);
        assert_eq!(r.termination, Termination::Empty);
    }
}

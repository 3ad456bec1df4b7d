use crate::deck::{Block, Param, ParamValue};

use super::{End, SegmentKind, TopologyGraph};

/// Deck component type emitted for a segment kind.
pub fn default_component_type(kind: SegmentKind) -> &'static str {
    match kind {
        SegmentKind::Pipe => "PBPipe",
        SegmentKind::CoreChannel => "PBCoreChannel",
        SegmentKind::Plenum => "PBOneDFluidComponent",
        SegmentKind::Pump => "PBPump",
        SegmentKind::HeatExchanger => "PBHeatExchanger",
        SegmentKind::Other => "PBOneDFluidComponent",
    }
}

fn segment_order(graph: &TopologyGraph) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(graph.segments.len());
    if let Some(path) = &graph.declared_flow_path {
        for name in path {
            if let Some(i) = graph.segments.iter().position(|s| &s.name == name) {
                if !order.contains(&i) {
                    order.push(i);
                }
            }
        }
    }
    for i in 0..graph.segments.len() {
        if !order.contains(&i) {
            order.push(i);
        }
    }
    order
}

/// Component sub-blocks for every segment and junction.
///
/// Segments come first, in declared flow-path order and then insertion
/// order; junctions follow, ordered by the first segment they touch.
/// Schematic coordinates are embedded in the z = 0 plane.
pub fn to_components(graph: &TopologyGraph) -> Vec<Block> {
    let order = segment_order(graph);
    let mut blocks = Vec::with_capacity(graph.segments.len() + graph.junctions.len());
    for &i in &order {
        let s = &graph.segments[i];
        let mut b = Block::new(&s.name);
        b.params.push(Param::new(
            "type",
            ParamValue::String(default_component_type(s.kind).to_string()),
        ));
        b.params.push(
            Param::new("position", ParamValue::RealVector(vec![s.start[0], s.start[1], 0.0]))
                .with_unit("m"),
        );
        b.params.push(Param::new(
            "orientation",
            ParamValue::RealVector(vec![s.orientation[0], s.orientation[1], 0.0]),
        ));
        b.params
            .push(Param::new("length", ParamValue::Real(s.length)).with_unit("m"));
        blocks.push(b);
    }

    let rank = |segment: &str| {
        order
            .iter()
            .position(|&i| graph.segments[i].name == segment)
            .unwrap_or(usize::MAX)
    };
    let mut junctions: Vec<_> = graph.junctions.iter().enumerate().collect();
    junctions.sort_by_key(|(idx, j)| {
        (
            j.ports.iter().map(|p| rank(&p.segment)).min().unwrap_or(usize::MAX),
            *idx,
        )
    });
    for (_, j) in junctions {
        let mut b = Block::new(&j.name);
        let type_name = j.component_type.clone().unwrap_or_else(|| {
            if j.ports.len() == 2 {
                "PBSingleJunction".to_string()
            } else {
                "PBBranch".to_string()
            }
        });
        b.params.push(Param::new("type", ParamValue::String(type_name)));
        let ends = |end: End| -> Vec<String> {
            j.ports
                .iter()
                .filter(|p| p.end == end)
                .map(|p| format!("{}({})", p.segment, end))
                .collect()
        };
        let inputs = ends(End::Outlet);
        let outputs = ends(End::Inlet);
        if !inputs.is_empty() {
            b.params.push(Param::new("inputs", ParamValue::StringVector(inputs)));
        }
        if !outputs.is_empty() {
            b.params.push(Param::new("outputs", ParamValue::StringVector(outputs)));
        }
        blocks.push(b);
    }
    blocks
}

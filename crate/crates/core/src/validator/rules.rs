use std::collections::{BTreeMap, HashMap};

use crate::deck::{reference_target, split_port, Block, BlockRegistry, ComponentRole, InputDeck, RefTarget};
use crate::topology::{End, TopologyGraph};

use super::{Code, Finding};

const TEMPERATURE_KEYS: &[&str] = &["global_init_T", "T_bc", "T_in", "T_out", "T_init", "initial_T", "expected_T_out"];
const PRESSURE_KEYS: &[&str] = &["global_init_P", "p_bc", "p_in", "p_out", "p_init", "initial_P"];
const TEMPERATURE_RANGE: (f64, f64) = (200.0, 4000.0);
const PRESSURE_RANGE: (f64, f64) = (1e3, 1e9);
const NON_SI_TEMPERATURE: &[&str] = &["C", "degC", "°C", "F", "degF", "°F", "R"];
const NON_SI_PRESSURE: &[&str] = &["bar", "kPa", "MPa", "psi", "atm", "mbar", "Torr"];

pub(super) fn components(deck: &InputDeck) -> &[Block] {
    deck.block("Components").map_or(&[], |b| b.children.as_slice())
}

fn child_names<'a>(deck: &'a InputDeck, block: &str) -> Vec<&'a str> {
    deck.block(block)
        .map(|b| b.children.iter().map(|c| c.name.as_str()).collect())
        .unwrap_or_default()
}

/// Component named by a reference token: `pipe1(out)` or `pipe1`.
fn component_of(token: &str) -> &str {
    split_port(token).map_or(token, |(name, _)| name)
}

fn roles(registry: &BlockRegistry, c: &Block) -> Vec<ComponentRole> {
    c.type_name().map(|t| registry.roles(t)).unwrap_or_default()
}

pub(super) fn r1_completeness(deck: &InputDeck, registry: &BlockRegistry, out: &mut Vec<Finding>) {
    for rule in registry.rules() {
        let Some(block) = deck.block(&rule.name) else {
            out.push(Finding::new(Code::MissingBlock, &rule.name, format!("required block [{}] is missing", rule.name)));
            continue;
        };
        for p in &rule.required_params {
            if block.param(p).is_none() {
                out.push(Finding::new(Code::MissingParam, &rule.name, format!("required parameter `{p}` is missing")));
            }
        }
        if block.children.len() < rule.min_children {
            out.push(Finding::new(
                Code::MissingSubblock,
                &rule.name,
                format!("[{}] needs at least {} sub-block(s)", rule.name, rule.min_children),
            ));
        }
    }
    for b in &deck.blocks {
        if registry.is_required(&b.name) {
            continue;
        }
        let hint = registry
            .canonical_name(&b.name)
            .map(|c| format!("; did you mean [{c}]?"))
            .unwrap_or_default();
        out.push(Finding::new(Code::UnknownBlock, &b.name, format!("block [{}] is not a known top-level block{hint}", b.name)));
    }
    for c in components(deck) {
        let path = format!("Components/{}", c.name);
        if c.type_name().is_none() {
            out.push(Finding::new(Code::MissingParam, &path, "component has no `type`"));
            continue;
        }
        if roles(registry, c).contains(&ComponentRole::Flow) {
            for key in ["position", "orientation", "length"] {
                if c.param(key).is_none() {
                    out.push(Finding::new(Code::MissingParam, &path, format!("flow component needs `{key}`")));
                }
            }
        }
    }
}

pub(super) fn r2_references(deck: &InputDeck, out: &mut Vec<Finding>) {
    let comps = child_names(deck, "Components");
    let eos = child_names(deck, "EOS");
    let materials = child_names(deck, "MaterialProperties");
    for (path, p) in deck.params_with_paths() {
        let (pool, what) = match reference_target(&p.key) {
            Some(RefTarget::Component) => (&comps, "component"),
            Some(RefTarget::Eos) => (&eos, "EOS"),
            Some(RefTarget::Material) => (&materials, "material"),
            Some(RefTarget::Function) | None => continue,
        };
        for tok in p.value.tokens() {
            let name = if what == "component" { component_of(tok) } else { tok };
            if !pool.contains(&name) {
                out.push(Finding::new(Code::DanglingRef, &path, format!("`{tok}` does not name an existing {what}")));
            }
        }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub(super) fn r3_boundary_conditions(deck: &InputDeck, registry: &BlockRegistry, out: &mut Vec<Finding>) {
    let comps = components(deck);
    let index: HashMap<&str, usize> = comps.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..comps.len()).collect();
    for (i, c) in comps.iter().enumerate() {
        for p in &c.params {
            if reference_target(&p.key) != Some(RefTarget::Component) {
                continue;
            }
            for tok in p.value.tokens() {
                if let Some(&j) = index.get(component_of(tok)) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..comps.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    for g in groups {
        let group_roles: Vec<ComponentRole> = g.iter().flat_map(|&i| roles(registry, &comps[i])).collect();
        let Some(&first_flow) = g
            .iter()
            .find(|&&i| roles(registry, &comps[i]).contains(&ComponentRole::Flow))
        else {
            continue;
        };
        let location = format!("Components/{}", comps[first_flow].name);
        let members: Vec<&str> = g.iter().map(|&i| comps[i].name.as_str()).collect();
        if !group_roles.contains(&ComponentRole::KinematicBoundary) {
            out.push(Finding::new(
                Code::NoInletBc,
                &location,
                format!("flow network {{{}}} has no velocity or flow inlet condition", members.join(", ")),
            ));
        }
        if !group_roles.contains(&ComponentRole::PressureBoundary) {
            out.push(Finding::new(
                Code::NoPressureBc,
                &location,
                format!("flow network {{{}}} has no pressure condition", members.join(", ")),
            ));
        }
    }
}

/// Inlet and outlet points of a component with complete geometry.
pub(super) fn endpoints(c: &Block) -> Option<([f64; 3], [f64; 3])> {
    let pos = c.param("position")?.value.numbers();
    let ori = c.param("orientation")?.value.numbers();
    let len = c.param("length")?.value.as_f64()?;
    if pos.len() != 3 || ori.len() != 3 {
        return None;
    }
    let norm = ori.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return None;
    }
    let start = [pos[0], pos[1], pos[2]];
    let end = [0, 1, 2].map(|k| pos[k] + ori[k] / norm * len);
    Some((start, end))
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub(super) fn r4_geometry(
    deck: &InputDeck,
    registry: &BlockRegistry,
    topology: Option<&TopologyGraph>,
    tol: f64,
    out: &mut Vec<Finding>,
) {
    let comps = components(deck);
    let by_name: HashMap<&str, &Block> = comps.iter().map(|c| (c.name.as_str(), c)).collect();
    for j in comps.iter().filter(|c| roles(registry, c).contains(&ComponentRole::Junction)) {
        let mut points: Vec<(&str, [f64; 3])> = Vec::new();
        for key in ["inputs", "outputs"] {
            let Some(p) = j.param(key) else { continue };
            for tok in p.value.tokens() {
                let Some((name, end)) = split_port(tok) else { continue };
                let Some((start, stop)) = by_name.get(name).and_then(|c| endpoints(c)) else {
                    continue;
                };
                points.push((tok, if end == "in" { start } else { stop }));
            }
        }
        if let Some((first_tok, first)) = points.first().copied() {
            for &(tok, p) in &points[1..] {
                let d = distance(first, p);
                if d > tol {
                    out.push(Finding::new(
                        Code::GeomDiscontinuity,
                        format!("Components/{}", j.name),
                        format!("`{tok}` is {d:.6} m away from `{first_tok}`"),
                    ));
                }
            }
        }
    }

    let Some(graph) = topology else { return };
    for s in &graph.segments {
        let Some(c) = by_name.get(s.name.as_str()) else {
            out.push(Finding::new(
                Code::GeomDiscontinuity,
                "Components",
                format!("topology segment `{}` has no component", s.name),
            ));
            continue;
        };
        let Some((start, stop)) = endpoints(c) else { continue };
        for (end, actual) in [(End::Inlet, start), (End::Outlet, stop)] {
            let [x, y] = s.point(end);
            let d = distance([x, y, 0.0], actual);
            if d > tol {
                out.push(Finding::new(
                    Code::GeomDiscontinuity,
                    format!("Components/{}", s.name),
                    format!("{end} end is {d:.6} m from the topology node"),
                ));
            }
        }
    }
}

enum Quantity {
    Temperature,
    Pressure,
}

pub(super) fn r5_units(deck: &InputDeck, out: &mut Vec<Finding>) {
    for (path, p) in deck.params_with_paths() {
        let numbers = p.value.numbers();
        if numbers.is_empty() {
            continue;
        }
        let hint = p.unit_hint.as_deref().map(str::trim);
        if let Some(h) = hint {
            if NON_SI_TEMPERATURE.contains(&h) || NON_SI_PRESSURE.contains(&h) {
                out.push(Finding::new(Code::UnitSuspect, &path, format!("unit `{h}` is not SI; expected K or Pa")));
                continue;
            }
        }
        let quantity = match hint {
            Some("K") => Quantity::Temperature,
            Some("Pa") => Quantity::Pressure,
            _ if TEMPERATURE_KEYS.contains(&p.key.as_str()) => Quantity::Temperature,
            _ if PRESSURE_KEYS.contains(&p.key.as_str()) => Quantity::Pressure,
            _ => continue,
        };
        let ((lo, hi), unit) = match quantity {
            Quantity::Temperature => (TEMPERATURE_RANGE, "K"),
            Quantity::Pressure => (PRESSURE_RANGE, "Pa"),
        };
        if let Some(v) = numbers.iter().find(|v| !(lo..=hi).contains(*v)) {
            out.push(Finding::new(
                Code::UnitSuspect,
                &path,
                format!("{v} is outside the plausible range [{lo}, {hi}] {unit}"),
            ));
        }
    }
}

pub(super) fn r6_functions(deck: &InputDeck, out: &mut Vec<Finding>) {
    let functions = child_names(deck, "Functions");
    for (path, p) in deck.params_with_paths() {
        if reference_target(&p.key) != Some(RefTarget::Function) {
            continue;
        }
        for tok in p.value.tokens() {
            if !functions.contains(&tok) {
                out.push(Finding::new(
                    Code::UnresolvedFunction,
                    &path,
                    format!("function `{tok}` is not defined in [Functions]"),
                ));
            }
        }
    }
}

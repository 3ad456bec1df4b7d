use std::path::Path;

use proptest::prelude::*;
use serde_json::Value;

use deckforge::deck::{parse_deck, parse_deck_bytes, serialize_deck, Block, InputDeck, Param, ParamValue};
use deckforge::knowledge::{cosine, EmbeddingProvider, HashEmbedder};
use deckforge::metrics::{pooled_image_completeness, extraction_recall, Channel, CoverageManifest, ImageCategory};
use deckforge::spec::{merge_overrides, ModelSpec, Provenance, ProvenanceKind, SectionEntry, SpecEntry};
use deckforge::topology::{check_closure, TopologyFile, BuildOptions};
use deckforge::validator::{energy_balance_estimate, EnergyInputs};

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,7}"
}

fn value() -> impl Strategy<Value = ParamValue> {
    prop_oneof![
        (-1e12f64..1e12).prop_map(ParamValue::Real),
        any::<i32>().prop_map(|v| ParamValue::Integer(v.into())),
        any::<bool>().prop_map(ParamValue::Boolean),
        "[A-Z][a-zA-Z]{0,10}".prop_map(ParamValue::String),
        prop::collection::vec(-1e6f64..1e6, 1..5).prop_map(ParamValue::RealVector),
    ]
}

fn block(depth: u32) -> BoxedStrategy<Block> {
    let params = || prop::collection::vec((ident(), value()), 0..5);
    let leaf = (ident(), params()).prop_map(|(name, ps)| make_block(name, ps, Vec::new()));
    if depth == 0 {
        return leaf.boxed();
    }
    (ident(), params(), prop::collection::vec(block(depth - 1), 0..3))
        .prop_map(|(name, ps, children)| make_block(name, ps, children))
        .boxed()
}

fn make_block(name: String, params: Vec<(String, ParamValue)>, children: Vec<Block>) -> Block {
    let mut b = Block::new(name);
    for (k, v) in params {
        b.set_param(Param::new(k, v));
    }
    for c in children {
        if b.child(&c.name).is_none() {
            b.children.push(c);
        }
    }
    b
}

fn deck() -> impl Strategy<Value = InputDeck> {
    prop::collection::vec(block(2), 0..5).prop_map(|blocks| {
        let mut d = InputDeck::new();
        for b in blocks {
            if d.block(&b.name).is_none() {
                d.blocks.push(b);
            }
        }
        d
    })
}

fn numeric_deck() -> impl Strategy<Value = InputDeck> {
    prop::collection::vec(
        (
            ident(),
            prop::collection::vec(
                (
                    ident(),
                    prop_oneof![
                        any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(ParamValue::Real),
                        any::<i64>().prop_map(ParamValue::Integer),
                    ],
                ),
                1..6,
            ),
        ),
        1..4,
    )
    .prop_map(|blocks| {
        let mut d = InputDeck::new();
        for (name, ps) in blocks {
            if d.block(&name).is_none() {
                d.blocks.push(make_block(name, ps, Vec::new()));
            }
        }
        d
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialization_reaches_a_fixed_point(d in deck()) {
        let text = serialize_deck(&d);
        let once = parse_deck(&text).unwrap();
        let again = serialize_deck(&once);
        prop_assert_eq!(&again, &text);
        prop_assert_eq!(parse_deck(&again).unwrap(), once);
    }

    #[test]
    fn numbers_survive_exactly(d in numeric_deck()) {
        prop_assert_eq!(parse_deck(&serialize_deck(&d)).unwrap(), d);
    }

    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        let _ = parse_deck_bytes(&bytes);
    }

    #[test]
    fn parser_never_panics_on_deck_like_text(text in "[\\[\\]./=#'\" \n\ta-z0-9()-]{0,300}") {
        if let Ok(d) = parse_deck(&text) {
            let _ = parse_deck(&serialize_deck(&d)).unwrap();
        }
    }
}

fn ring_json() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/topology/msre_ring.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_geometry_is_rigid_motion_invariant(theta in 0.0f64..std::f64::consts::TAU, tx in -100.0f64..100.0, ty in -100.0f64..100.0) {
        let raw = ring_json();
        let base = TopologyFile::from_json(&raw.to_string()).unwrap().build(BuildOptions::default()).unwrap();
        let mut moved = raw.clone();
        let (s, c) = theta.sin_cos();
        for n in moved["nodes"].as_array_mut().unwrap() {
            let (x, y) = (n["x"].as_f64().unwrap(), n["y"].as_f64().unwrap());
            n["x"] = (c * x - s * y + tx).into();
            n["y"] = (s * x + c * y + ty).into();
        }
        let opts = BuildOptions { port_tolerance: 1e-6, ..BuildOptions::default() };
        let graph = TopologyFile::from_json(&moved.to_string()).unwrap().build(opts).unwrap();
        for (a, b) in base.segments.iter().zip(&graph.segments) {
            prop_assert!((a.length - b.length).abs() < 1e-9);
            let rotated = [c * a.orientation[0] - s * a.orientation[1], s * a.orientation[0] + c * a.orientation[1]];
            prop_assert!((rotated[0] - b.orientation[0]).abs() < 1e-9);
            prop_assert!((rotated[1] - b.orientation[1]).abs() < 1e-9);
        }
        let (r0, r1) = (check_closure(&base).unwrap(), check_closure(&graph).unwrap());
        prop_assert_eq!(r0.closed, r1.closed);
        prop_assert_eq!(r0.order, r1.order);
    }
}

fn kind() -> impl Strategy<Value = ProvenanceKind> {
    prop_oneof![
        Just(ProvenanceKind::StructuredFile),
        Just(ProvenanceKind::PdfPage),
        Just(ProvenanceKind::Image),
        Just(ProvenanceKind::AgentAssumption),
        Just(ProvenanceKind::UserOverride),
    ]
}

fn section_entry() -> impl Strategy<Value = SectionEntry> {
    (
        prop_oneof![Just("GlobalParams"), Just("Executioner"), Just("Outputs")],
        prop_oneof![Just("a"), Just("b"), Just("c"), Just("d")],
        0i64..4,
        kind(),
    )
        .prop_map(|(section, key, v, kind)| SectionEntry {
            section: section.to_string(),
            entry: SpecEntry::new(key, ParamValue::Integer(v), Provenance::new(kind, "src")),
        })
}

proptest! {
    #[test]
    fn merging_twice_equals_merging_once(
        base in prop::collection::vec(section_entry(), 0..8),
        overrides in prop::collection::vec(section_entry(), 0..8),
    ) {
        let mut spec = ModelSpec { title: "t".into(), ..Default::default() };
        for e in base {
            let section = spec.sections.entry(e.section).or_default();
            if !section.iter().any(|x| x.key == e.entry.key) {
                section.push(e.entry);
            }
        }
        let once = merge_overrides(&spec, &overrides);
        prop_assert_eq!(merge_overrides(&once, &overrides), once);
    }

    #[test]
    fn cosine_stays_in_range(a in "[a-z0-9 ]{0,80}", b in "[a-z0-9 ]{0,80}") {
        let e = HashEmbedder::default();
        let v = e.embed(&[a.as_str(), b.as_str()]);
        let cab = cosine(&v[0], &v[1]);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&cab));
        if a.split_whitespace().next().is_some() {
            prop_assert!((cosine(&v[0], &v[0]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn temperature_rise_grows_with_power(q in 0.0f64..1e9, dq in 1.0f64..1e8, rho in 100.0f64..3000.0, v in 0.01f64..10.0, area in 1e-4f64..1.0, cp in 100.0f64..5000.0) {
        let x = EnergyInputs { power: q, density: rho, velocity: v, area, cp, t_in: 600.0 };
        let y = EnergyInputs { power: q + dq, ..x };
        prop_assert!(energy_balance_estimate(&y).unwrap() > energy_balance_estimate(&x).unwrap());
    }
}

fn manifest(case: usize, channel: Channel, expected: usize, produced: usize) -> CoverageManifest {
    let items: Vec<String> = (0..expected).map(|i| format!("c{case}/item{i}")).collect();
    let produced_items: Vec<String> = items[..produced].to_vec();
    let categories = (channel == Channel::Image).then(|| {
        produced_items
            .iter()
            .map(|i| (i.clone(), Some(ImageCategory::ExplicitPosition)))
            .collect()
    });
    CoverageManifest {
        case_id: format!("case{case}"),
        channel,
        expected_items: items,
        produced_items,
        categories,
    }
}

proptest! {
    #[test]
    fn pooled_rates_ignore_manifest_order(
        sizes in prop::collection::vec((1usize..30, 0usize..30), 1..6),
        seed in any::<u64>(),
    ) {
        let build = |channel| -> Vec<CoverageManifest> {
            sizes.iter().enumerate().map(|(i, &(e, p))| manifest(i, channel, e, p.min(e))).collect()
        };
        for (channel, pooled) in [
            (Channel::PdfText, extraction_recall as fn(&[CoverageManifest]) -> _),
            (Channel::Image, pooled_image_completeness),
        ] {
            let ordered = build(channel);
            let mut shuffled = ordered.clone();
            let n = shuffled.len();
            for i in (1..n).rev() {
                shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % (i + 1));
            }
            prop_assert_eq!(pooled(&ordered).unwrap(), pooled(&shuffled).unwrap());
            let total: usize = ordered.iter().map(|m| m.expected_items.len()).sum();
            let hit: usize = ordered.iter().map(|m| m.produced_items.len()).sum();
            let r = pooled(&ordered).unwrap();
            prop_assert_eq!((r.used_or_recovered, r.expected), (hit, total));
        }
    }
}

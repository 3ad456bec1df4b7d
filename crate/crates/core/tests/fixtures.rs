//! Checks against the shipped test-case fixtures.

use std::path::{Path, PathBuf};

use deckforge::deck::{parse_deck, BlockRegistry, ComponentRole, InputDeck, ParamValue};
use deckforge::knowledge::{ingest, ChunkConfig, HashEmbedder, SidecarExtractor, VectorStore};
use deckforge::spec::{compile_spec, load_overrides, merge_overrides, ModelSpec};
use deckforge::topology::{load_topology, to_components, BuildOptions, TopologyGraph};
use deckforge::validator::{validate, Code};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn deck(name: &str) -> InputDeck {
    parse_deck(&std::fs::read_to_string(fixtures().join("decks").join(name)).unwrap()).unwrap()
}

fn topology(name: &str) -> TopologyGraph {
    load_topology(&fixtures().join("topology").join(name), BuildOptions::default()).unwrap()
}

#[test]
fn tc1_deck_has_the_nine_blocks_in_order() {
    let d = deck("tc1_pipe.i");
    let names: Vec<&str> = d.blocks.iter().map(|b| b.name.as_str()).collect();
    let registry = BlockRegistry::default();
    let required: Vec<&str> = registry.required_blocks().collect();
    assert_eq!(names, required);
    assert_eq!(
        d.get_param("Executioner/type").unwrap(),
        Some(&ParamValue::String("Transient".into()))
    );
}

#[test]
fn test_case_decks_pass_with_and_without_topology() {
    let registry = BlockRegistry::default();
    for (name, graph) in [
        ("tc1_pipe.i", None),
        ("tc2_feedback.i", None),
        ("tc3_abtr.i", Some(topology("abtr_core.json"))),
        ("tc4_msre.i", Some(topology("msre_ring.json"))),
    ] {
        let d = deck(name);
        let plain = validate(&d, &registry, None);
        assert!(plain.findings.is_empty(), "{name}: {}", plain.to_text());
        let with_graph = validate(&d, &registry, graph.as_ref());
        assert!(with_graph.passed, "{name}: {}", with_graph.to_text());
    }
}

#[test]
fn tc2_ramps_inlet_temperature_over_ten_seconds() {
    let d = deck("tc2_feedback.i");
    let f = d.find_block("Functions/T_in_ramp").unwrap();
    assert_eq!(f.param("x").unwrap().value.numbers()[..2], [0.0, 10.0]);
    assert_eq!(f.param("y").unwrap().value.numbers()[..2], [628.15, 728.15]);
    assert!(d.get_param("Components/reactor/fuel_temperature_coefficient").unwrap().unwrap().as_f64().unwrap() < 0.0);
    assert_eq!(d.get_param("Components/reactor/initial_power").unwrap().unwrap().as_f64(), Some(0.0));
}

#[test]
fn tc1_spec_compiles_without_gaps_to_a_clean_deck() {
    let spec = ModelSpec::load_file(&fixtures().join("specs/tc1.spec.yaml")).unwrap();
    let out = compile_spec(&spec, &BlockRegistry::default()).unwrap();
    assert_eq!(out.deck.blocks.len(), 9);
    assert!(out.residual_gaps.is_empty());
    assert!(validate(&out.deck, &BlockRegistry::default(), None).findings.is_empty());
    assert_eq!(out.deck, deck("tc1_pipe.i"));
    assert_eq!(out.trace.len(), out.deck.params_with_paths().len());
}

#[test]
fn tc3_spec_covers_every_section_and_declares_gaps() {
    let spec = ModelSpec::load_file(&fixtures().join("specs/tc3.spec.yaml")).unwrap();
    let registry = BlockRegistry::default();
    let populated = registry
        .required_blocks()
        .filter(|b| spec.sections.get(*b).is_some_and(|s| !s.is_empty()))
        .count();
    assert_eq!(populated, 9);
    assert!(!spec.gaps.is_empty());
    let out = compile_spec(&spec, &registry).unwrap();
    assert!(!out.residual_gaps.is_empty());
}

#[test]
fn overrides_fill_declared_gaps_and_record_what_they_replace() {
    let spec = ModelSpec::load_file(&fixtures().join("specs/tc3.spec.yaml")).unwrap();
    let ov = load_overrides(&std::fs::read_to_string(fixtures().join("specs/tc3.overrides.yaml")).unwrap()).unwrap();
    let merged = merge_overrides(&spec, &ov);
    assert!(!merged.gaps.iter().any(|g| g.section == "Executioner"));
    assert_eq!(merged.entry("GlobalParams", "global_init_T").unwrap().value, ParamValue::Real(628.15));
    assert_eq!(merged.superseded.len(), 2);
    assert_eq!(merge_overrides(&merged, &ov), merged);
}

#[test]
fn abtr_layout_expands_to_channels_and_two_branches() {
    let graph = topology("abtr_core.json");
    let registry = BlockRegistry::default();
    let blocks = to_components(&graph);
    let role_count = |role| {
        blocks
            .iter()
            .filter(|b| registry.roles(b.type_name().unwrap()).contains(&role))
            .count()
    };
    // inlet pipe, five channels, outlet pipe
    assert_eq!(role_count(ComponentRole::Flow), 7);
    assert_eq!(role_count(ComponentRole::Junction), 2);
    for j in &graph.junctions {
        assert_eq!(j.ports.len(), 6, "{}", j.name);
    }
}

#[test]
fn energy_screen_flags_an_inconsistent_outlet_temperature() {
    let d = deck("corpus/heated_channel_with_power_fn.i");
    let r = validate(&d, &BlockRegistry::default(), None);
    assert!(r.passed);
    assert!(r.has_code(Code::EnergyImbalance));
}

#[test]
fn three_page_sidecar_gives_chunks_for_each_page() {
    let embedder = HashEmbedder::default();
    let mut store = VectorStore::new(&embedder);
    let report = ingest(
        &fixtures().join("knowledge/docs"),
        &SidecarExtractor,
        &embedder,
        &mut store,
        ChunkConfig::default(),
    )
    .unwrap();
    assert!(report.added_chunks >= 3);
    let mut pages: Vec<u32> = store.chunks.iter().filter_map(|c| c.page).collect();
    pages.dedup();
    assert_eq!(pages, [1, 2, 3]);
}

use std::path::{Path, PathBuf};

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use deckforge::deck::{parse_deck, serialize_deck, BlockRegistry};
use deckforge::knowledge::{ingest, query_stores, ChunkConfig, HashEmbedder, SidecarExtractor, StoreKind, VectorStore};
use deckforge::topology::{check_closure, load_topology, BuildOptions};
use deckforge::validator::{energy_balance_estimate, validate, EnergyInputs};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn deck_io(c: &mut Criterion) {
    let text = std::fs::read_to_string(fixtures().join("decks/tc4_msre.i")).unwrap();
    let deck = parse_deck(&text).unwrap();
    c.bench_function("parse tc4", |b| b.iter(|| parse_deck(black_box(&text)).unwrap()));
    c.bench_function("serialize tc4", |b| b.iter(|| serialize_deck(black_box(&deck))));
}

fn validation(c: &mut Criterion) {
    let text = std::fs::read_to_string(fixtures().join("decks/tc4_msre.i")).unwrap();
    let deck = parse_deck(&text).unwrap();
    let registry = BlockRegistry::default();
    let graph = load_topology(&fixtures().join("topology/msre_ring.json"), BuildOptions::default()).unwrap();
    c.bench_function("validate tc4", |b| b.iter(|| validate(black_box(&deck), &registry, None)));
    c.bench_function("validate tc4 with topology", |b| {
        b.iter(|| validate(black_box(&deck), &registry, Some(&graph)))
    });
    c.bench_function("closure msre ring", |b| b.iter(|| check_closure(black_box(&graph)).unwrap()));
    let inputs = EnergyInputs { power: 1.0e6, density: 850.0, velocity: 2.0, area: 0.01, cp: 1270.0, t_in: 628.15 };
    c.bench_function("energy estimate", |b| b.iter(|| energy_balance_estimate(black_box(&inputs))));
}

fn retrieval(c: &mut Criterion) {
    let embedder = HashEmbedder::default();
    let mut store = VectorStore::new(&embedder);
    ingest(
        &fixtures().join("knowledge/corpus"),
        &SidecarExtractor,
        &embedder,
        &mut store,
        ChunkConfig::default(),
    )
    .unwrap();
    let stores = [(StoreKind::Dynamic, &store)];
    c.bench_function("query corpus k=5", |b| {
        b.iter(|| query_stores(&stores, black_box("sodium inlet temperature"), 5, &embedder).unwrap())
    });
}

criterion_group!(benches, deck_io, validation, retrieval);
criterion_main!(benches);

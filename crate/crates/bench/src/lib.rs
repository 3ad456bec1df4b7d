//! Criterion benchmarks for the deckforge pipeline; see `benches/pipeline.rs`.

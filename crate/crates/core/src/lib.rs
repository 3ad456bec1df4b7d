//! Turns engineering documents into validated, block-structured system-code
//! input decks.
//!
//! The pipeline: documents are ingested into vector stores
//! ([`knowledge`]), an agent ([`agent`]) reads tables, text and retrieved
//! passages and writes a human-auditable [`spec::ModelSpec`]; after review,
//! the model spec is compiled ([`spec::compile_spec`]) into an [`deck::InputDeck`],
//! remaining gaps are filled by the creator tool with labelled assumptions,
//! and the result is checked by [`validator::validate`].

pub mod agent;
pub mod deck;
pub mod knowledge;
pub mod metrics;
pub mod spec;
pub mod topology;
pub mod validator;

pub use deck::{
    parse_deck, serialize_deck, Block, BlockRegistry, DeckError, InputDeck, Param, ParamValue,
    SyntaxError,
};
pub use spec::{compile_spec, merge_overrides, CompileOutput, GapRecord, ModelSpec, Provenance, SpecEntry};
pub use topology::{Segment, TopologyGraph};
pub use validator::{validate, Finding, Severity, ValidationReport};

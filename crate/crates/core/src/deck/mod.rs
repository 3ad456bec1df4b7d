//! Block-structured input decks.
//!
//! The deck dialect is the bracketed block syntax used by MOOSE-based
//! system codes:
//!
//! ```text
//! # Title: single sodium pipe
//!
//! [GlobalParams]
//!   global_init_T = 628.15 # [K]
//! []
//! [Components]
//!   [./pipe1]
//!     type = PBOneDFluidComponent
//!     position = '0 0 0'
//!   [../]
//! []
//! ```
//!
//! Decks are plain values: every editing operation returns a new deck.

mod parse;
mod registry;
mod value;
mod write;

pub use parse::{parse_deck, parse_deck_bytes, SyntaxError, SyntaxErrorKind};
pub use registry::{BlockRegistry, BlockRule, ComponentRole};
pub use value::{is_identifier, parse_value_literal, reference_target, split_port, ParamValue, RefTarget};
pub use write::{format_real, serialize_deck};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeckError {
    #[error("parameter path is empty")]
    PathEmpty,
    #[error("invalid parameter path `{0}`: expected Block/.../key with identifier segments")]
    InvalidPath(String),
    #[error("value `{rendered}` for `{key}` does not survive a parse round trip as {kind}")]
    IllFormedValue {
        key: String,
        kind: &'static str,
        rendered: String,
    },
}

/// A `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub key: String,
    pub value: ParamValue,
    /// Unit written as a `# [unit]` prefix of the inline comment.
    pub unit_hint: Option<String>,
    /// Inline comment text after the unit hint.
    pub comment: Option<String>,
    /// Whole-line comments directly above the parameter.
    pub leading_comments: Vec<String>,
}

impl Param {
    pub fn new(key: impl Into<String>, value: ParamValue) -> Self {
        Self {
            key: key.into(),
            value,
            unit_hint: None,
            comment: None,
            leading_comments: Vec::new(),
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit_hint = Some(unit.into());
        self
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = Some(comment.into());
        self
    }

    /// Checks that the key is an identifier and that the value renders to
    /// text that parses back to the same value under this key.
    pub fn check(&self) -> Result<(), DeckError> {
        if !is_identifier(&self.key) {
            return Err(DeckError::InvalidPath(self.key.clone()));
        }
        let rendered = write::render_value(&self.value);
        match parse_value_literal(&self.key, &rendered) {
            Ok(v) if v == self.value => Ok(()),
            _ => Err(DeckError::IllFormedValue {
                key: self.key.clone(),
                kind: self.value.kind_name(),
                rendered,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub name: String,
    pub leading_comments: Vec<String>,
    pub params: Vec<Param>,
    pub children: Vec<Block>,
    /// Comments after the last element, before the closing bracket.
    pub trailing_comments: Vec<String>,
}

impl Block {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn param(&self, key: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.key == key)
    }

    pub fn param_mut(&mut self, key: &str) -> Option<&mut Param> {
        self.params.iter_mut().find(|p| p.key == key)
    }

    pub fn child(&self, name: &str) -> Option<&Block> {
        self.children.iter().find(|c| c.name == name)
    }

    pub fn child_mut(&mut self, name: &str) -> Option<&mut Block> {
        self.children.iter_mut().find(|c| c.name == name)
    }

    /// Value of a `type = ...` parameter, if any.
    pub fn type_name(&self) -> Option<&str> {
        match self.param("type").map(|p| &p.value) {
            Some(ParamValue::String(s)) | Some(ParamValue::Reference(s)) => Some(s),
            _ => None,
        }
    }

    /// Inserts or replaces a parameter. A replaced parameter keeps its
    /// position and leading comments.
    pub fn set_param(&mut self, param: Param) {
        match self.param_mut(&param.key) {
            Some(existing) => {
                existing.value = param.value;
                if param.unit_hint.is_some() {
                    existing.unit_hint = param.unit_hint;
                }
                if param.comment.is_some() {
                    existing.comment = param.comment;
                }
            }
            None => self.params.push(param),
        }
    }

    /// Returns the named child, appending an empty one if absent.
    pub fn ensure_child(&mut self, name: &str) -> &mut Block {
        let idx = match self.children.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.children.push(Block::new(name));
                self.children.len() - 1
            }
        };
        &mut self.children[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputDeck {
    /// Comment lines at the top of the file, separated from the first
    /// block by a blank line.
    pub header: Vec<String>,
    pub blocks: Vec<Block>,
    pub trailing_comments: Vec<String>,
}

fn split_path(path: &str) -> Result<Vec<&str>, DeckError> {
    if path.is_empty() {
        return Err(DeckError::PathEmpty);
    }
    let parts: Vec<&str> = path.split('/').collect();
    if parts.iter().any(|p| !is_identifier(p)) {
        return Err(DeckError::InvalidPath(path.to_string()));
    }
    Ok(parts)
}

impl InputDeck {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut Block> {
        self.blocks.iter_mut().find(|b| b.name == name)
    }

    pub fn ensure_block(&mut self, name: &str) -> &mut Block {
        let idx = match self.blocks.iter().position(|b| b.name == name) {
            Some(i) => i,
            None => {
                self.blocks.push(Block::new(name));
                self.blocks.len() - 1
            }
        };
        &mut self.blocks[idx]
    }

    /// Removes a top-level block, returning it.
    pub fn remove_block(&mut self, name: &str) -> Option<Block> {
        let idx = self.blocks.iter().position(|b| b.name == name)?;
        Some(self.blocks.remove(idx))
    }

    /// Resolves a slash-separated block path such as `Components/pipe1`.
    pub fn find_block(&self, path: &str) -> Option<&Block> {
        let mut parts = path.split('/');
        let mut cur = self.block(parts.next()?)?;
        for part in parts {
            cur = cur.child(part)?;
        }
        Some(cur)
    }

    pub fn find_block_mut(&mut self, path: &str) -> Option<&mut Block> {
        let mut parts = path.split('/');
        let mut cur = self.block_mut(parts.next()?)?;
        for part in parts {
            cur = cur.child_mut(part)?;
        }
        Some(cur)
    }

    /// Looks up `Block/child/.../key`.
    pub fn get_param(&self, path: &str) -> Result<Option<&ParamValue>, DeckError> {
        Ok(self.get_param_entry(path)?.map(|p| &p.value))
    }

    pub fn get_param_entry(&self, path: &str) -> Result<Option<&Param>, DeckError> {
        let parts = split_path(path)?;
        if parts.len() < 2 {
            return Ok(None);
        }
        let (key, blocks) = parts.split_last().expect("nonempty");
        let mut cur = match self.block(blocks[0]) {
            Some(b) => b,
            None => return Ok(None),
        };
        for name in &blocks[1..] {
            cur = match cur.child(name) {
                Some(b) => b,
                None => return Ok(None),
            };
        }
        Ok(cur.param(key))
    }

    /// Returns a copy of the deck with the value at `path` set, creating
    /// intermediate blocks as needed.
    pub fn upsert_param(&self, path: &str, value: ParamValue) -> Result<InputDeck, DeckError> {
        let mut deck = self.clone();
        deck.set_param_at(path, Param::new("", value))?;
        Ok(deck)
    }

    /// In-place form of [`InputDeck::upsert_param`]; the key of `param` is
    /// replaced by the last path segment.
    pub fn set_param_at(&mut self, path: &str, mut param: Param) -> Result<(), DeckError> {
        let parts = split_path(path)?;
        if parts.len() < 2 {
            return Err(DeckError::InvalidPath(path.to_string()));
        }
        let (key, blocks) = parts.split_last().expect("nonempty");
        param.key = key.to_string();
        param.check()?;
        let mut cur = self.ensure_block(blocks[0]);
        for name in &blocks[1..] {
            cur = cur.ensure_child(name);
        }
        cur.set_param(param);
        Ok(())
    }

    /// All parameters in deck order, paired with their full paths.
    pub fn params_with_paths(&self) -> Vec<(String, &Param)> {
        fn walk<'a>(prefix: &str, block: &'a Block, out: &mut Vec<(String, &'a Param)>) {
            let here = if prefix.is_empty() {
                block.name.clone()
            } else {
                format!("{prefix}/{}", block.name)
            };
            for p in &block.params {
                out.push((format!("{here}/{}", p.key), p));
            }
            for c in &block.children {
                walk(&here, c, out);
            }
        }
        let mut out = Vec::new();
        for b in &self.blocks {
            walk("", b, &mut out);
        }
        out
    }

    /// Block paths in deck order (parents before children).
    pub fn block_paths(&self) -> Vec<String> {
        fn walk(prefix: &str, block: &Block, out: &mut Vec<String>) {
            let here = if prefix.is_empty() {
                block.name.clone()
            } else {
                format!("{prefix}/{}", block.name)
            };
            out.push(here.clone());
            for c in &block.children {
                walk(&here, c, out);
            }
        }
        let mut out = Vec::new();
        for b in &self.blocks {
            walk("", b, &mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec_deck() -> InputDeck {
        parse_deck("[Executioner]\n  type = Transient\n[]\n").unwrap()
    }

    #[test]
    fn get_param_resolves_paths() {
        let deck = exec_deck();
        assert_eq!(
            deck.get_param("Executioner/type").unwrap(),
            Some(&ParamValue::String("Transient".into()))
        );
        assert_eq!(deck.get_param("Nope/x").unwrap(), None);
        assert_eq!(deck.get_param(""), Err(DeckError::PathEmpty));
        assert!(matches!(deck.get_param("a//b"), Err(DeckError::InvalidPath(_))));
    }

    #[test]
    fn upsert_reads_back_and_leaves_original() {
        let deck = exec_deck();
        let updated = deck
            .upsert_param("Executioner/dt", ParamValue::Real(0.1))
            .unwrap();
        assert_eq!(updated.get_param("Executioner/dt").unwrap(), Some(&ParamValue::Real(0.1)));
        assert_eq!(deck.get_param("Executioner/dt").unwrap(), None);
    }

    #[test]
    fn upsert_creates_missing_blocks() {
        let deck = exec_deck()
            .upsert_param("Components/pipe1/length", ParamValue::Real(2.0))
            .unwrap();
        assert!(deck.find_block("Components/pipe1").is_some());
        assert_eq!(deck.blocks.len(), 2);
    }

    #[test]
    fn upsert_overwrites_in_place() {
        let deck = parse_deck("[Executioner]\n  type = Steady\n  dt = 1.0\n[]\n").unwrap();
        let updated = deck
            .upsert_param("Executioner/type", ParamValue::String("Transient".into()))
            .unwrap();
        let before = serialize_deck(&deck);
        let after = serialize_deck(&updated);
        let diff: Vec<(&str, &str)> = before
            .lines()
            .zip(after.lines())
            .filter(|(a, b)| a != b)
            .collect();
        assert_eq!(before.lines().count(), after.lines().count());
        assert_eq!(diff, vec![("  type = Steady", "  type = Transient")]);
    }

    #[test]
    fn upsert_rejects_empty_path_and_bare_key() {
        let deck = InputDeck::new();
        assert_eq!(
            deck.upsert_param("", ParamValue::Integer(1)),
            Err(DeckError::PathEmpty)
        );
        assert!(matches!(
            deck.upsert_param("x", ParamValue::Integer(1)),
            Err(DeckError::InvalidPath(_))
        ));
    }

    #[test]
    fn ill_formed_values_are_rejected() {
        let deck = InputDeck::new();
        let err = deck
            .upsert_param("A/name", ParamValue::String("two words".into()))
            .unwrap_err();
        assert!(matches!(err, DeckError::IllFormedValue { .. }));
        assert!(deck.upsert_param("A/v", ParamValue::RealVector(vec![])).is_err());
    }
}

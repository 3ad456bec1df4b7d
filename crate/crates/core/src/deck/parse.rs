use std::fmt;

use thiserror::Error;

use super::value::{is_identifier, parse_value_literal};
use super::{Block, InputDeck, Param};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    InvalidUtf8,
    UnclosedBlock(String),
    UnmatchedClose,
    MalformedHeader(String),
    InvalidName(String),
    DuplicateBlock(String),
    DuplicateKey(String),
    ParamOutsideBlock,
    MalformedParam(String),
}

impl fmt::Display for SyntaxErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidUtf8 => write!(f, "input is not valid UTF-8"),
            Self::UnclosedBlock(n) => write!(f, "block `{n}` is never closed"),
            Self::UnmatchedClose => write!(f, "closing bracket without an open block"),
            Self::MalformedHeader(h) => write!(f, "malformed block header `{h}`"),
            Self::InvalidName(n) => write!(f, "invalid block name `{n}`"),
            Self::DuplicateBlock(n) => write!(f, "duplicate block `{n}`"),
            Self::DuplicateKey(k) => write!(f, "duplicate parameter `{k}`"),
            Self::ParamOutsideBlock => write!(f, "parameter outside of any block"),
            Self::MalformedParam(m) => write!(f, "malformed parameter: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub kind: SyntaxErrorKind,
}

struct Open {
    block: Block,
    line: usize,
    column: usize,
}

fn comment_text(rest: &str) -> String {
    rest.trim().to_string()
}

/// Splits an inline comment into `(unit_hint, comment)`.
fn split_inline_comment(text: &str) -> (Option<String>, Option<String>) {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix('[') {
        if let Some(close) = rest.find(']') {
            let unit = rest[..close].trim();
            if !unit.is_empty() {
                let remainder = rest[close + 1..].trim();
                return (
                    Some(unit.to_string()),
                    (!remainder.is_empty()).then(|| remainder.to_string()),
                );
            }
        }
    }
    (None, (!text.is_empty()).then(|| text.to_string()))
}

pub fn parse_deck_bytes(bytes: &[u8]) -> Result<InputDeck, SyntaxError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let prefix = &bytes[..e.valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        SyntaxError {
            line,
            column: 1,
            kind: SyntaxErrorKind::InvalidUtf8,
        }
    })?;
    parse_deck(text)
}

/// Parses deck text into a block tree.
pub fn parse_deck(text: &str) -> Result<InputDeck, SyntaxError> {
    let mut deck = InputDeck::default();
    let mut stack: Vec<Open> = Vec::new();
    let mut pending: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        let column = raw.chars().take_while(|c| c.is_whitespace()).count() + 1;
        let err = |kind| SyntaxError {
            line: line_no,
            column,
            kind,
        };

        if trimmed.is_empty() {
            if stack.is_empty() && deck.blocks.is_empty() && deck.header.is_empty() {
                deck.header = std::mem::take(&mut pending);
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            pending.push(comment_text(rest));
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let close = rest
                .find(']')
                .ok_or_else(|| err(SyntaxErrorKind::MalformedHeader(trimmed.to_string())))?;
            let inner = rest[..close].trim();
            let after = rest[close + 1..].trim();
            let inline_comment = match after {
                "" => None,
                a if a.starts_with('#') => Some(comment_text(&a[1..])),
                _ => return Err(err(SyntaxErrorKind::MalformedHeader(trimmed.to_string()))),
            };
            match inner {
                "" | "../" => {
                    if inner == "../" && stack.len() < 2 {
                        return Err(err(SyntaxErrorKind::UnmatchedClose));
                    }
                    let mut open = stack.pop().ok_or_else(|| err(SyntaxErrorKind::UnmatchedClose))?;
                    open.block.trailing_comments.append(&mut pending);
                    if let Some(c) = inline_comment {
                        open.block.trailing_comments.push(c);
                    }
                    match stack.last_mut() {
                        Some(parent) => parent.block.children.push(open.block),
                        None => deck.blocks.push(open.block),
                    }
                }
                _ => {
                    let name = inner.strip_prefix("./").unwrap_or(inner);
                    if inner.starts_with("./") && stack.is_empty() {
                        return Err(err(SyntaxErrorKind::MalformedHeader(trimmed.to_string())));
                    }
                    if !is_identifier(name) {
                        return Err(err(SyntaxErrorKind::InvalidName(name.to_string())));
                    }
                    let siblings = match stack.last() {
                        Some(parent) => &parent.block.children,
                        None => &deck.blocks,
                    };
                    if siblings.iter().any(|b| b.name == name) {
                        return Err(err(SyntaxErrorKind::DuplicateBlock(name.to_string())));
                    }
                    let mut block = Block::new(name);
                    block.leading_comments = std::mem::take(&mut pending);
                    block.leading_comments.extend(inline_comment);
                    stack.push(Open {
                        block,
                        line: line_no,
                        column,
                    });
                }
            }
            continue;
        }

        let open = stack
            .last_mut()
            .ok_or_else(|| err(SyntaxErrorKind::ParamOutsideBlock))?;
        let eq = trimmed
            .find('=')
            .ok_or_else(|| err(SyntaxErrorKind::MalformedParam("expected `key = value`".into())))?;
        let key = trimmed[..eq].trim();
        if !is_identifier(key) {
            return Err(err(SyntaxErrorKind::MalformedParam(format!(
                "invalid key `{key}`"
            ))));
        }
        let rhs = trimmed[eq + 1..].trim_start();
        let (value_text, comment) = split_value_and_comment(rhs)
            .map_err(|m| err(SyntaxErrorKind::MalformedParam(m.to_string())))?;
        let value = parse_value_literal(key, value_text)
            .map_err(|m| err(SyntaxErrorKind::MalformedParam(format!("`{key}`: {m}"))))?;
        if open.block.param(key).is_some() {
            return Err(err(SyntaxErrorKind::DuplicateKey(key.to_string())));
        }
        let (unit_hint, comment) = match comment {
            Some(c) => split_inline_comment(c),
            None => (None, None),
        };
        open.block.params.push(Param {
            key: key.to_string(),
            value,
            unit_hint,
            comment,
            leading_comments: std::mem::take(&mut pending),
        });
    }

    if let Some(open) = stack.pop() {
        return Err(SyntaxError {
            line: open.line,
            column: open.column,
            kind: SyntaxErrorKind::UnclosedBlock(open.block.name),
        });
    }
    if deck.blocks.is_empty() && deck.header.is_empty() {
        deck.header = pending;
    } else {
        deck.trailing_comments = pending;
    }
    Ok(deck)
}

/// Separates the value text from a trailing `# comment`, honouring quotes.
fn split_value_and_comment(rhs: &str) -> Result<(&str, Option<&str>), &'static str> {
    let mut quote: Option<char> = None;
    for (i, c) in rhs.char_indices() {
        match (quote, c) {
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            (None, '#') => return Ok((rhs[..i].trim_end(), Some(&rhs[i + 1..]))),
            _ => {}
        }
    }
    if quote.is_some() {
        return Err("unterminated quoted value");
    }
    Ok((rhs.trim_end(), None))
}

use std::fmt::Write as _;

use super::{Block, InputDeck, ParamValue};

/// Shortest decimal text that parses back to exactly `v`.
///
/// Picks between positional and exponent notation, whichever is shorter.
/// The result may lack a decimal point (`2`, `1e5`); callers that need the
/// token to read back as a real use [`format_real`].
fn shortest_real(v: f64) -> String {
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

/// Scalar real formatting: shortest round-trippable text that is never
/// mistaken for an integer.
pub fn format_real(v: f64) -> String {
    let s = shortest_real(v);
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn single_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub(crate) fn render_value(value: &ParamValue) -> String {
    match value {
        ParamValue::Real(v) => format_real(*v),
        ParamValue::Integer(v) => v.to_string(),
        ParamValue::Boolean(b) => b.to_string(),
        ParamValue::String(s) | ParamValue::Reference(s) => s.clone(),
        ParamValue::RealVector(v) => {
            let items: Vec<String> = v.iter().map(|x| shortest_real(*x)).collect();
            format!("'{}'", items.join(" "))
        }
        ParamValue::StringVector(v) => format!("'{}'", v.join(" ")),
    }
}

fn write_comments(out: &mut String, indent: &str, comments: &[String]) {
    for c in comments {
        let c = single_line(c);
        if c.is_empty() {
            let _ = writeln!(out, "{indent}#");
        } else {
            let _ = writeln!(out, "{indent}# {c}");
        }
    }
}

fn write_block(out: &mut String, block: &Block, depth: usize) {
    let indent = "  ".repeat(depth);
    let inner = "  ".repeat(depth + 1);
    write_comments(out, &indent, &block.leading_comments);
    if depth == 0 {
        let _ = writeln!(out, "{indent}[{}]", block.name);
    } else {
        let _ = writeln!(out, "{indent}[./{}]", block.name);
    }
    for p in &block.params {
        write_comments(out, &inner, &p.leading_comments);
        let _ = write!(out, "{inner}{} = {}", p.key, render_value(&p.value));
        let mut tail = String::new();
        if let Some(u) = &p.unit_hint {
            let _ = write!(tail, "[{}]", single_line(u));
        }
        if let Some(c) = &p.comment {
            if !tail.is_empty() {
                tail.push(' ');
            }
            tail.push_str(&single_line(c));
        }
        if !tail.is_empty() {
            let _ = write!(out, " # {tail}");
        }
        out.push('\n');
    }
    for child in &block.children {
        write_block(out, child, depth + 1);
    }
    write_comments(out, &inner, &block.trailing_comments);
    if depth == 0 {
        let _ = writeln!(out, "{indent}[]");
    } else {
        let _ = writeln!(out, "{indent}[../]");
    }
}

/// Renders a deck as text: header first, two-space indentation per level,
/// one parameter per line, a blank line between top-level blocks.
pub fn serialize_deck(deck: &InputDeck) -> String {
    let mut out = String::new();
    write_comments(&mut out, "", &deck.header);
    let mut first = deck.header.is_empty();
    for block in &deck.blocks {
        if !first {
            out.push('\n');
        }
        first = false;
        write_block(&mut out, block, 0);
    }
    if !deck.trailing_comments.is_empty() {
        if !first {
            out.push('\n');
        }
        write_comments(&mut out, "", &deck.trailing_comments);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deck::{parse_deck, Param};

    #[test]
    fn real_formatting_round_trips() {
        for v in [2.0, 0.1, 1e5, 1e-9, 628.15, -3.5e-12, 1.0 / 3.0, 6.02214076e23, 0.0] {
            let s = format_real(v);
            assert!(s.contains(['.', 'e']), "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_real(2.0), "2.0");
        assert_eq!(format_real(1e5), "1e5");
        assert_eq!(format_real(628.15), "628.15");
    }

    #[test]
    fn vector_rendering() {
        let mut deck = InputDeck::default();
        let mut b = Block::new("Components");
        b.params
            .push(Param::new("position", ParamValue::RealVector(vec![0.0, 0.0, 0.0])));
        deck.blocks.push(b);
        let text = serialize_deck(&deck);
        assert!(text.contains("position = '0 0 0'"), "{text}");
    }

    #[test]
    fn empty_deck_with_header() {
        let deck = InputDeck {
            header: vec!["Title: nothing".into()],
            ..Default::default()
        };
        assert_eq!(serialize_deck(&deck), "# Title: nothing\n");
        assert_eq!(serialize_deck(&InputDeck::default()), "");
        assert_eq!(parse_deck(&serialize_deck(&deck)).unwrap(), deck);
    }

    #[test]
    fn layout() {
        let text = "# Title: t\n\n[A]\n  x = 1\n  [./b]\n    y = 'p q'\n  [../]\n[]\n\n[B]\n[]\n";
        let deck = parse_deck(text).unwrap();
        assert_eq!(serialize_deck(&deck), text);
    }
}

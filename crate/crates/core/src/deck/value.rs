use serde::{Deserialize, Serialize};

/// Typed parameter payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ParamValue {
    Real(f64),
    Integer(i64),
    Boolean(bool),
    String(String),
    /// Name of another deck object: a component port such as `pipe1(out)`,
    /// or the target of a reference-valued key such as `eos` or `function`.
    Reference(String),
    RealVector(Vec<f64>),
    StringVector(Vec<String>),
}

impl ParamValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ParamValue::Real(_) => "real",
            ParamValue::Integer(_) => "integer",
            ParamValue::Boolean(_) => "boolean",
            ParamValue::String(_) => "string",
            ParamValue::Reference(_) => "identifier-reference",
            ParamValue::RealVector(_) => "real-vector",
            ParamValue::StringVector(_) => "string-vector",
        }
    }

    /// Numeric view of scalar reals and integers.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Integer(v) => Some(*v as f64),
            _ => None,
        }
    }

    /// Scalar numbers and every element of a real vector.
    pub fn numbers(&self) -> Vec<f64> {
        match self {
            ParamValue::Real(v) => vec![*v],
            ParamValue::Integer(v) => vec![*v as f64],
            ParamValue::RealVector(v) => v.clone(),
            _ => Vec::new(),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::String(s) | ParamValue::Reference(s) => Some(s),
            _ => None,
        }
    }

    /// String-like tokens: scalar strings/references and string-vector items.
    pub fn tokens(&self) -> Vec<&str> {
        match self {
            ParamValue::String(s) | ParamValue::Reference(s) => vec![s.as_str()],
            ParamValue::StringVector(v) => v.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }
}

/// What a reference-valued key points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefTarget {
    /// A component end, written `name(in)` / `name(out)`, or a bare component.
    Component,
    Eos,
    Function,
    Material,
}

const REFERENCE_KEYS: &[(&str, RefTarget)] = &[
    ("input", RefTarget::Component),
    ("output", RefTarget::Component),
    ("inputs", RefTarget::Component),
    ("outputs", RefTarget::Component),
    ("eos", RefTarget::Eos),
    ("function", RefTarget::Function),
    ("T_fn", RefTarget::Function),
    ("v_fn", RefTarget::Function),
    ("p_fn", RefTarget::Function),
    ("m_fn", RefTarget::Function),
    ("power_fn", RefTarget::Function),
    ("material", RefTarget::Material),
    ("material_hs", RefTarget::Material),
];

/// Namespace a reference-valued key resolves into.
pub fn reference_target(key: &str) -> Option<RefTarget> {
    REFERENCE_KEYS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, t)| *t)
}

/// Letters, digits, underscore and hyphen; nonempty.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn is_integer_token(tok: &str) -> bool {
    let digits = tok.strip_prefix(['-', '+']).unwrap_or(tok);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

pub(crate) fn parse_real_token(tok: &str) -> Option<f64> {
    let looks_numeric = !tok.is_empty()
        && tok
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        && tok.chars().any(|c| c.is_ascii_digit());
    if !looks_numeric {
        return None;
    }
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `name(in)` or `name(out)`.
pub fn split_port(tok: &str) -> Option<(&str, &str)> {
    let open = tok.find('(')?;
    let name = &tok[..open];
    let end = tok[open + 1..].strip_suffix(')')?;
    (is_identifier(name) && (end == "in" || end == "out")).then_some((name, end))
}

fn classify_token(key: &str, tok: &str) -> ParamValue {
    if tok == "true" {
        return ParamValue::Boolean(true);
    }
    if tok == "false" {
        return ParamValue::Boolean(false);
    }
    if is_integer_token(tok) {
        if let Ok(v) = tok.parse::<i64>() {
            return ParamValue::Integer(v);
        }
    }
    if let Some(v) = parse_real_token(tok) {
        return ParamValue::Real(v);
    }
    if split_port(tok).is_some() || (reference_target(key).is_some() && is_identifier(tok)) {
        return ParamValue::Reference(tok.to_string());
    }
    ParamValue::String(tok.to_string())
}

/// Classifies the text to the right of `=` (already stripped of any inline
/// comment). Quoted text yields a vector; anything else a scalar.
pub fn parse_value_literal(key: &str, text: &str) -> Result<ParamValue, &'static str> {
    let text = text.trim();
    if text.is_empty() {
        return Err("missing value");
    }
    let quote = text.chars().next().expect("nonempty");
    if quote == '\'' || quote == '"' {
        let inner = text[1..]
            .strip_suffix(quote)
            .ok_or("unterminated quoted value")?;
        if inner.contains(quote) {
            return Err("stray quote inside quoted value");
        }
        let items: Vec<&str> = inner.split_whitespace().collect();
        if items.is_empty() {
            return Err("empty quoted value");
        }
        if items.iter().any(|t| t.contains('#')) {
            return Err("`#` inside quoted value");
        }
        let reals: Option<Vec<f64>> = items.iter().map(|t| parse_real_token(t)).collect();
        return Ok(match reals {
            Some(v) => ParamValue::RealVector(v),
            None => ParamValue::StringVector(items.iter().map(|s| s.to_string()).collect()),
        });
    }
    if text.chars().any(|c| c.is_whitespace()) {
        return Err("unquoted value contains whitespace");
    }
    if text.contains(['\'', '"', '#', '[', ']']) {
        return Err("unexpected character in value");
    }
    Ok(classify_token(key, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_classification() {
        assert_eq!(parse_value_literal("type", "Transient"), Ok(ParamValue::String("Transient".into())));
        assert_eq!(parse_value_literal("n", "20"), Ok(ParamValue::Integer(20)));
        assert_eq!(parse_value_literal("p", "1e5"), Ok(ParamValue::Real(1e5)));
        assert_eq!(parse_value_literal("p", "2.0"), Ok(ParamValue::Real(2.0)));
        assert_eq!(parse_value_literal("full", "true"), Ok(ParamValue::Boolean(true)));
        assert_eq!(parse_value_literal("eos", "eos"), Ok(ParamValue::Reference("eos".into())));
        assert_eq!(
            parse_value_literal("x", "pipe9(out)"),
            Ok(ParamValue::Reference("pipe9(out)".into()))
        );
        // non-finite spellings are plain strings, never reals
        assert_eq!(parse_value_literal("x", "nan"), Ok(ParamValue::String("nan".into())));
        assert_eq!(parse_value_literal("x", "inf"), Ok(ParamValue::String("inf".into())));
    }

    #[test]
    fn vector_classification() {
        assert_eq!(
            parse_value_literal("position", "'0 0 0'"),
            Ok(ParamValue::RealVector(vec![0.0, 0.0, 0.0]))
        );
        assert_eq!(
            parse_value_literal("outputs", "'ch1(in) ch2(in)'"),
            Ok(ParamValue::StringVector(vec!["ch1(in)".into(), "ch2(in)".into()]))
        );
        assert!(parse_value_literal("x", "''").is_err());
        assert!(parse_value_literal("x", "'1 2").is_err());
        assert!(parse_value_literal("x", "1 2").is_err());
    }

    #[test]
    fn port_split() {
        assert_eq!(split_port("pipe1(out)"), Some(("pipe1", "out")));
        assert_eq!(split_port("pipe1(side)"), None);
        assert_eq!(split_port("pipe1"), None);
    }
}

use serde::Serialize;
use thiserror::Error;

use super::provider::{ChatProvider, ChatRequest, Message, ProviderError, Purpose, Role, BLOCK_BEGIN, BLOCK_END};
use crate::deck::{parse_deck, serialize_deck, BlockRegistry, InputDeck, SyntaxError};
use crate::spec::{
    compile_spec, residual_gaps, CompileError, GapRecord, ModelSpec, Provenance, ProvenanceKind, TraceEntry, TraceMap,
};

pub const CREATOR_INSTRUCTIONS: &str = include_str!("../../assets/creator_instructions_v1.md");

/// Source name recorded for values the creator supplied.
pub const CREATOR_SOURCE: &str = "input_creator";

#[derive(Debug, Error)]
pub enum CreatorError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("creator output is not a deck after one repair attempt: {0}")]
    CreatorOutputUnparseable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreatorOutput {
    #[serde(skip)]
    pub deck: InputDeck,
    #[serde(skip)]
    pub trace: TraceMap,
    /// Whether the provider was asked to fill gaps.
    pub provider_called: bool,
    /// Deck paths of parameters the provider supplied.
    pub filled: Vec<String>,
    /// Gaps still open in the final deck.
    pub residual_gaps: Vec<GapRecord>,
}

/// Prompt asking the provider to complete a partial deck.
pub fn creator_prompt(partial: &InputDeck, gaps: &[GapRecord]) -> String {
    let mut p = String::from(CREATOR_INSTRUCTIONS.trim_end());
    p.push_str("\n\nResidual gaps:\n");
    for g in gaps {
        p.push_str(&format!("- {}/{}: {}\n", g.section, g.key, g.reason));
    }
    p.push_str(&format!("\n{BLOCK_BEGIN} partial deck>>>\n{}{BLOCK_END}\n", serialize_deck(partial)));
    p
}

/// Deck text inside the first fenced code block, or the whole reply.
fn strip_fences(text: &str) -> &str {
    let Some(start) = text.find("```") else {
        return text;
    };
    let body = match text[start..].find('\n') {
        Some(nl) => start + nl + 1,
        None => return text,
    };
    match text[body..].find("```") {
        Some(end) => &text[body..body + end],
        None => &text[body..],
    }
}

fn parse_reply(text: &str) -> Result<InputDeck, String> {
    match parse_deck(strip_fences(text)) {
        Ok(d) if d.blocks.is_empty() => Err("no blocks found".into()),
        Ok(d) => Ok(d),
        Err(e) => Err(SyntaxError::to_string(&e)),
    }
}

fn ensure_block_path(deck: &mut InputDeck, path: &str) {
    let mut parts = path.split('/');
    let Some(first) = parts.next() else { return };
    let mut cur = deck.ensure_block(first);
    for p in parts {
        cur = cur.ensure_child(p);
    }
}

/// Compiles the model spec and, when gaps remain, asks the provider to complete
/// the deck.
///
/// Compiled values always win over provider output. Every parameter the
/// provider adds is annotated `ASSUMED:` and traced to a synthesized
/// agent-assumption entry, so each deck parameter has exactly one source.
pub fn create_deck(
    spec: &ModelSpec,
    registry: &BlockRegistry,
    provider: &dyn ChatProvider,
) -> Result<CreatorOutput, CreatorError> {
    let compiled = compile_spec(spec, registry)?;
    if compiled.residual_gaps.is_empty() {
        return Ok(CreatorOutput {
            deck: compiled.deck,
            trace: compiled.trace,
            provider_called: false,
            filled: Vec::new(),
            residual_gaps: Vec::new(),
        });
    }

    let prompt = creator_prompt(&compiled.deck, &compiled.residual_gaps);
    let mut messages = vec![Message::new(Role::User, prompt)];
    let request = |messages: &[Message]| {
        provider.complete(&ChatRequest {
            purpose: Purpose::Creator,
            system: "You write complete, valid simulation input decks.".into(),
            messages: messages.to_vec(),
            tools: Vec::new(),
        })
    };
    let first = request(&messages)?.content;
    let generated = match parse_reply(&first) {
        Ok(d) => d,
        Err(err) => {
            messages.push(Message::new(Role::Assistant, first));
            messages.push(Message::new(
                Role::User,
                format!("The previous reply could not be parsed as a deck ({err}). Reply with the complete deck text only."),
            ));
            let second = request(&messages)?.content;
            parse_reply(&second).map_err(CreatorError::CreatorOutputUnparseable)?
        }
    };

    let mut deck = compiled.deck.clone();
    let mut trace = compiled.trace;
    for path in generated.block_paths() {
        if deck.find_block(&path).is_none() {
            ensure_block_path(&mut deck, &path);
        }
    }
    let mut filled = Vec::new();
    for (path, p) in generated.params_with_paths() {
        if matches!(compiled.deck.get_param(&path), Ok(Some(_))) {
            continue;
        }
        let mut p = p.clone();
        let rationale = match p.comment.as_deref().map(str::trim) {
            Some(c) if c.starts_with("ASSUMED:") => c["ASSUMED:".len()..].trim().to_string(),
            Some(c) if !c.is_empty() => c.to_string(),
            _ => "value inferred by the input creator to fill a gap".to_string(),
        };
        p.comment = Some(format!("ASSUMED: {rationale}"));
        if deck.set_param_at(&path, p).is_err() {
            continue;
        }
        let (section, key) = path.split_once('/').expect("parameter paths have a block");
        trace.insert(
            path.clone(),
            TraceEntry {
                section: section.to_string(),
                key: key.to_string(),
                provenance: Provenance::new(ProvenanceKind::AgentAssumption, CREATOR_SOURCE),
                assumed: true,
                rationale: Some(rationale),
            },
        );
        filled.push(path);
    }
    let residual_gaps = residual_gaps(&deck, registry, &spec.gaps);
    Ok(CreatorOutput {
        deck,
        trace,
        provider_called: true,
        filled,
        residual_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::provider::{DecisionScript, ScriptedProvider, ScriptedReply};
    use crate::deck::ParamValue;
    use crate::spec::SpecEntry;
    use std::collections::BTreeMap;

    fn provider(replies: &[&str]) -> ScriptedProvider {
        ScriptedProvider::new(DecisionScript {
            decisions: Vec::new(),
            replies: BTreeMap::from([(
                Purpose::Creator,
                replies
                    .iter()
                    .map(|r| ScriptedReply {
                        text: Some(r.to_string()),
                        file: None,
                    })
                    .collect(),
            )]),
        })
    }

    fn spec_with_executioner_gap() -> ModelSpec {
        let mut s = ModelSpec {
            title: "Gap".into(),
            ..Default::default()
        };
        let src = || Provenance::new(ProvenanceKind::StructuredFile, "t.csv");
        s.sections.insert(
            "GlobalParams".into(),
            vec![
                SpecEntry::new("global_init_P", ParamValue::Real(1e5), src()),
                SpecEntry::new("global_init_T", ParamValue::Real(628.0), src()),
            ],
        );
        s
    }

    #[test]
    fn prose_twice_is_unparseable() {
        let p = provider(&["Sure! Here is your deck.", "I cannot do that."]);
        let err = create_deck(&spec_with_executioner_gap(), &BlockRegistry::default(), &p).unwrap_err();
        assert!(matches!(err, CreatorError::CreatorOutputUnparseable(_)));
    }

    #[test]
    fn filled_values_are_annotated_and_compiled_values_kept() {
        let reply = "```\n[GlobalParams]\n  global_init_P = 2e5\n  global_init_T = 628.0\n[]\n[Executioner]\n  type = Transient\n  end_time = 100.0 # steady state reached well before\n[]\n```";
        let p = provider(&["prose first", reply]);
        let out = create_deck(&spec_with_executioner_gap(), &BlockRegistry::default(), &p).unwrap();
        assert!(out.provider_called);
        assert_eq!(out.filled, ["Executioner/type", "Executioner/end_time"]);
        assert_eq!(out.deck.get_param("GlobalParams/global_init_P").unwrap(), Some(&ParamValue::Real(1e5)));
        let t = out.deck.get_param_entry("Executioner/type").unwrap().unwrap();
        assert!(t.comment.as_deref().unwrap().starts_with("ASSUMED:"));
        let e = out.deck.get_param_entry("Executioner/end_time").unwrap().unwrap();
        assert_eq!(e.comment.as_deref(), Some("ASSUMED: steady state reached well before"));
        assert!(!out.residual_gaps.iter().any(|g| g.section == "Executioner"));
        for (path, _) in out.deck.params_with_paths() {
            assert!(out.trace.contains_key(&path), "{path}");
        }
    }

    #[test]
    fn echo_without_reply_adds_nothing() {
        let p = ScriptedProvider::new(DecisionScript::default());
        let s = spec_with_executioner_gap();
        let out = create_deck(&s, &BlockRegistry::default(), &p).unwrap();
        let compiled = compile_spec(&s, &BlockRegistry::default()).unwrap();
        assert_eq!(serialize_deck(&out.deck), serialize_deck(&compiled.deck));
        assert!(out.filled.is_empty());
        assert!(!out.residual_gaps.is_empty());
    }
}

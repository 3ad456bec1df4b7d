use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    pub arguments: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }
}

/// What a completion request is for. Real providers ignore it; the
/// scripted provider keeps one reply queue per purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    /// A step of the agent loop; tools are offered.
    Agent,
    /// Retrieval-augmented answer over delimited context blocks.
    Answer,
    /// Deck synthesis by the creator tool.
    Creator,
}

/// Tool description as offered to the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub parameters: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub purpose: Purpose,
    pub system: String,
    pub messages: Vec<Message>,
    pub tools: Vec<ToolSchema>,
}

/// Either tool calls to run, or final text when `tool_calls` is empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChatResponse {
    pub content: String,
    pub tool_calls: Vec<ToolCall>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("provider failure: {0}")]
pub struct ProviderError(pub String);

pub trait ChatProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

/// Marker lines around each context block in answer and creator prompts.
pub const BLOCK_BEGIN: &str = "<<<BEGIN";
pub const BLOCK_END: &str = "<<<END>>>";

/// Body of the first `<<<BEGIN ...>>>` ... `<<<END>>>` block in `text`.
pub fn first_block(text: &str) -> Option<&str> {
    let start = text.find(BLOCK_BEGIN)?;
    let body = start + text[start..].find('\n')? + 1;
    let end = body + text[body..].find(BLOCK_END)?;
    Some(text[body..end].trim_end_matches('\n'))
}

/// One scripted agent step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decision {
    #[serde(default)]
    pub thought: String,
    #[serde(default)]
    pub actions: Vec<ScriptedAction>,
    #[serde(default)]
    pub final_answer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedAction {
    pub tool: String,
    #[serde(default)]
    pub arguments: Value,
    /// File whose text replaces the `content` argument; resolved against
    /// the script's directory when the script is loaded.
    #[serde(default, skip_serializing)]
    pub content_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedReply {
    #[serde(default)]
    pub text: Option<String>,
    /// File whose text is the reply, resolved like `content_from`.
    #[serde(default)]
    pub file: Option<String>,
}

/// Decision script file read by [`ScriptedProvider`].
///
/// ```json
/// {
///   "decisions": [
///     {"thought": "read the table", "actions": [
///       {"tool": "spreadsheet_reader", "arguments": {"file": "pipe.csv"}}]},
///     {"thought": "record the model", "actions": [
///       {"tool": "write_spec", "arguments": {"path": "pipe.spec.yaml"},
///        "content_from": "pipe.spec.yaml"}]},
///     {"final_answer": "done"}
///   ],
///   "replies": {"creator": [{"file": "pipe_filled.i"}]}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionScript {
    pub decisions: Vec<Decision>,
    #[serde(default)]
    pub replies: BTreeMap<Purpose, Vec<ScriptedReply>>,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid decision script {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("reply in {0} needs exactly one of `text` or `file`")]
    BadReply(String),
}

impl DecisionScript {
    /// Loads a script and inlines every referenced file.
    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| ScriptError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let mut script: DecisionScript =
            serde_json::from_str(&read(path)?).map_err(|source| ScriptError::Json {
                path: path.display().to_string(),
                source,
            })?;
        for d in &mut script.decisions {
            for a in &mut d.actions {
                if let Some(file) = a.content_from.take() {
                    let text = read(&base.join(file))?;
                    if !a.arguments.is_object() {
                        a.arguments = json!({});
                    }
                    a.arguments["content"] = Value::String(text);
                }
            }
        }
        for replies in script.replies.values_mut() {
            for r in replies {
                match (&r.text, r.file.take()) {
                    (Some(_), None) => {}
                    (None, Some(file)) => r.text = Some(read(&base.join(file))?),
                    _ => return Err(ScriptError::BadReply(path.display().to_string())),
                }
            }
        }
        Ok(script)
    }
}

/// Replays a decision script.
///
/// Agent requests are answered by the decision whose index equals the
/// number of assistant messages already in the history, so a resumed run
/// continues where it stopped. Other requests take the next reply queued
/// for their purpose, and otherwise echo the first delimited context block.
#[derive(Debug)]
pub struct ScriptedProvider {
    decisions: Vec<Decision>,
    replies: Mutex<BTreeMap<Purpose, VecDeque<String>>>,
}

impl ScriptedProvider {
    pub fn new(script: DecisionScript) -> Self {
        let replies = script
            .replies
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().filter_map(|r| r.text).collect()))
            .collect();
        Self {
            decisions: script.decisions,
            replies: Mutex::new(replies),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ScriptError> {
        Ok(Self::new(DecisionScript::load(path)?))
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        if request.purpose == Purpose::Agent {
            let step = request.messages.iter().filter(|m| m.role == Role::Assistant).count();
            let d = self
                .decisions
                .get(step)
                .ok_or_else(|| ProviderError(format!("decision script has no step {}", step + 1)))?;
            let tool_calls = d
                .actions
                .iter()
                .enumerate()
                .map(|(i, a)| ToolCall {
                    id: format!("call_{}_{}", step + 1, i + 1),
                    name: a.tool.clone(),
                    arguments: a.arguments.clone(),
                })
                .collect();
            return Ok(ChatResponse {
                content: d.final_answer.clone().unwrap_or_else(|| d.thought.clone()),
                tool_calls,
            });
        }
        let queued = self
            .replies
            .lock()
            .map_err(|_| ProviderError("reply queue poisoned".into()))?
            .get_mut(&request.purpose)
            .and_then(VecDeque::pop_front);
        if let Some(text) = queued {
            return Ok(ChatResponse {
                content: text,
                tool_calls: Vec::new(),
            });
        }
        let prompt = request.messages.last().map_or("", |m| m.content.as_str());
        let echoed = first_block(prompt)
            .ok_or_else(|| ProviderError("no scripted reply and no context block to echo".into()))?;
        Ok(ChatResponse {
            content: echoed.to_string(),
            tool_calls: Vec::new(),
        })
    }
}

/// Chat-completions client for OpenAI-compatible HTTP endpoints.
///
/// The credential is read from the named environment variable at request
/// time and never stored.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub timeout: Duration,
}

impl HttpProvider {
    fn wire_message(m: &Message) -> Value {
        let mut v = json!({
            "role": m.role,
            "content": m.content,
        });
        if !m.tool_calls.is_empty() {
            v["tool_calls"] = m
                .tool_calls
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "type": "function",
                        "function": {"name": c.name, "arguments": c.arguments.to_string()},
                    })
                })
                .collect();
        }
        if let Some(id) = &m.tool_call_id {
            v["tool_call_id"] = json!(id);
        }
        v
    }

    /// Request body in the chat-completions wire format.
    pub fn request_body(&self, request: &ChatRequest) -> Value {
        let mut messages = vec![json!({"role": "system", "content": request.system})];
        messages.extend(request.messages.iter().map(Self::wire_message));
        let mut body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": 0,
        });
        if !request.tools.is_empty() {
            body["tools"] = request
                .tools
                .iter()
                .map(|t| {
                    json!({
                        "type": "function",
                        "function": {"name": t.name, "description": t.description, "parameters": t.parameters},
                    })
                })
                .collect();
        }
        body
    }

    /// Reads `choices[0].message` from a chat-completions response.
    pub fn parse_response(body: &Value) -> Result<ChatResponse, ProviderError> {
        let msg = body
            .pointer("/choices/0/message")
            .ok_or_else(|| ProviderError(format!("response has no choices[0].message: {body}")))?;
        let content = msg.get("content").and_then(Value::as_str).unwrap_or_default().to_string();
        let mut tool_calls = Vec::new();
        for c in msg.get("tool_calls").and_then(Value::as_array).into_iter().flatten() {
            let name = c
                .pointer("/function/name")
                .and_then(Value::as_str)
                .ok_or_else(|| ProviderError("tool call without a function name".into()))?;
            let raw = c.pointer("/function/arguments").cloned().unwrap_or(Value::Null);
            let arguments = match raw {
                Value::String(s) if s.trim().is_empty() => json!({}),
                Value::String(s) => serde_json::from_str(&s)
                    .map_err(|e| ProviderError(format!("arguments of `{name}` are not JSON: {e}")))?,
                other => other,
            };
            tool_calls.push(ToolCall {
                id: c.get("id").and_then(Value::as_str).unwrap_or_default().to_string(),
                name: name.to_string(),
                arguments,
            });
        }
        Ok(ChatResponse { content, tool_calls })
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let mut req = ureq::post(&self.endpoint).timeout(self.timeout);
        if let Some(var) = &self.api_key_env {
            let key = std::env::var(var)
                .map_err(|_| ProviderError(format!("environment variable {var} is not set")))?;
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = req.send_json(self.request_body(request)).map_err(|e| match e {
            ureq::Error::Status(code, r) => {
                ProviderError(format!("HTTP {code}: {}", r.into_string().unwrap_or_default()))
            }
            other => ProviderError(other.to_string()),
        })?;
        let body: Value = resp.into_json().map_err(|e| ProviderError(e.to_string()))?;
        Self::parse_response(&body)
    }
}

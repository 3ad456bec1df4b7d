//! Tool-using agent: a reason/act/observe loop over seven tools, with a
//! file-gated approval checkpoint between the model specification and deck
//! generation.
//!
//! A run owns its working directory. Paths given to tools are relative to
//! it. The run writes:
//!
//! * `transcript.jsonl`: one `start` line, then `turn` and `checkpoint`
//!   lines in order, then an `end` line
//! * `checkpoint.json`: the model spec under review and its approval status
//! * whatever the tools write (spec, deck, `<deck>.trace.json`)
//!
//! Besides the seven tools the model may call `write_spec {path, content}`
//! to record the model specification. The model spec is checked before it is
//! written, and no deck can be created until it is approved.

pub mod creator;
pub mod provider;
mod table;
pub mod tools;

pub use creator::{create_deck, creator_prompt, CreatorError, CreatorOutput, CREATOR_INSTRUCTIONS};
pub use provider::{
    ChatProvider, ChatRequest, ChatResponse, DecisionScript, HttpProvider, Message, ProviderError, Purpose, Role,
    ScriptedProvider, ToolCall, ToolSchema,
};
pub use table::{summarize_table, Column, ColumnKind, ColumnStats, TableParseError, TableSummary};
pub use tools::{Checkpoint, CheckpointStatus, Tool, ToolContext, ToolError, ToolRegistry, TOOL_NAMES};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::knowledge::{ingest_dir, ChunkConfig, HashEmbedder, KnowledgeError, SidecarExtractor};
use crate::spec::{ModelSpec, SpecError};
use crate::validator::DEFAULT_ENERGY_THRESHOLD;

pub const SYSTEM_INSTRUCTIONS: &str = include_str!("../../assets/system_instructions_v1.md");
pub const INSTRUCTIONS_VERSION: &str = "v1";

pub const WRITE_SPEC: &str = "write_spec";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const DEFAULT_MAX_ITERATIONS: usize = 20;

/// Task documents and images ingested at the start of a run.
pub const DOCS_DIR: &str = "docs";
pub const IMAGES_DIR: &str = "images";

#[derive(Debug, Clone, PartialEq)]
pub struct CodeExecConfig {
    pub enabled: bool,
    pub interpreter: String,
    pub timeout_s: f64,
}

impl Default for CodeExecConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            interpreter: "python3".into(),
            timeout_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub max_iterations: usize,
    /// Approve a written spec immediately instead of halting.
    pub auto_approve: bool,
    pub code_exec: CodeExecConfig,
    /// Persistent store of solver manuals.
    pub static_store: Option<PathBuf>,
    pub retrieval_k: usize,
    pub chunk: ChunkConfig,
    pub energy_threshold: f64,
    pub geometry_tolerance: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            auto_approve: false,
            code_exec: CodeExecConfig::default(),
            static_store: None,
            retrieval_k: 5,
            chunk: ChunkConfig::default(),
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            geometry_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub id: String,
    pub tool: String,
    pub arguments: Value,
    pub observation: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTurn {
    /// 1-based.
    pub index: usize,
    pub thought: String,
    pub actions: Vec<ActionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub after_turn: usize,
    #[serde(flatten)]
    pub checkpoint: Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Running,
    Completed,
    AwaitingApproval,
    IterationLimit,
    ProviderFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub prompt: String,
    /// First message sent to the provider: the prompt and the file list.
    pub user_message: String,
    pub system_instructions: String,
    pub turns: Vec<AgentTurn>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub final_answer: Option<String>,
    /// Files written by the run, relative to the working directory.
    pub artifacts: Vec<String>,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
enum Event {
    Start {
        instructions_version: String,
        system_instructions: String,
        prompt: String,
        user_message: String,
    },
    Turn(AgentTurn),
    Checkpoint(CheckpointRecord),
    End {
        status: RunStatus,
        #[serde(default)]
        final_answer: Option<String>,
        artifacts: Vec<String>,
    },
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        let mut events = vec![Event::Start {
            instructions_version: INSTRUCTIONS_VERSION.into(),
            system_instructions: self.system_instructions.clone(),
            prompt: self.prompt.clone(),
            user_message: self.user_message.clone(),
        }];
        let mut cps = self.checkpoints.iter().peekable();
        for t in &self.turns {
            events.push(Event::Turn(t.clone()));
            while let Some(c) = cps.next_if(|c| c.after_turn <= t.index) {
                events.push(Event::Checkpoint(c.clone()));
            }
        }
        events.extend(cps.cloned().map(Event::Checkpoint));
        events.push(Event::End {
            status: self.status,
            final_answer: self.final_answer.clone(),
            artifacts: self.artifacts.clone(),
        });
        events
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut t: Option<Transcript> = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let event: Event = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            match (event, t.as_mut()) {
                (
                    Event::Start {
                        system_instructions,
                        prompt,
                        user_message,
                        ..
                    },
                    None,
                ) => {
                    t = Some(Transcript {
                        prompt,
                        user_message,
                        system_instructions,
                        turns: Vec::new(),
                        checkpoints: Vec::new(),
                        final_answer: None,
                        artifacts: Vec::new(),
                        status: RunStatus::Running,
                    })
                }
                (Event::Turn(turn), Some(t)) => t.turns.push(turn),
                (Event::Checkpoint(c), Some(t)) => t.checkpoints.push(c),
                (
                    Event::End {
                        status,
                        final_answer,
                        artifacts,
                    },
                    Some(t),
                ) => {
                    t.status = status;
                    t.final_answer = final_answer;
                    t.artifacts = artifacts;
                }
                _ => return Err(format!("line {}: unexpected event", i + 1)),
            }
        }
        t.ok_or_else(|| "transcript has no start event".to_string())
    }

    /// Conversation as the provider sees it.
    pub fn history(&self) -> Vec<Message> {
        let mut msgs = vec![Message::new(Role::User, self.user_message.clone())];
        let mut cps = self.checkpoints.iter().peekable();
        let approvals = |c: &CheckpointRecord, msgs: &mut Vec<Message>| {
            if c.checkpoint.status.is_approved() {
                msgs.push(Message::new(Role::User, approval_message(&c.checkpoint)));
            }
        };
        for t in &self.turns {
            let mut m = Message::new(Role::Assistant, t.thought.clone());
            m.tool_calls = t
                .actions
                .iter()
                .map(|a| ToolCall {
                    id: a.id.clone(),
                    name: a.tool.clone(),
                    arguments: a.arguments.clone(),
                })
                .collect();
            msgs.push(m);
            for a in &t.actions {
                let mut m = Message::new(Role::Tool, observation_text(&a.observation));
                m.tool_call_id = Some(a.id.clone());
                msgs.push(m);
            }
            while let Some(c) = cps.next_if(|c| c.after_turn <= t.index) {
                approvals(c, &mut msgs);
            }
        }
        for c in cps {
            approvals(c, &mut msgs);
        }
        msgs
    }

    /// Observation of the most recent call to `tool`.
    pub fn last_observation(&self, tool: &str) -> Option<&Value> {
        self.turns
            .iter()
            .flat_map(|t| &t.actions)
            .filter(|a| a.tool == tool)
            .last()
            .map(|a| &a.observation)
    }
}

fn approval_message(c: &Checkpoint) -> String {
    match c.status {
        CheckpointStatus::ApprovedAfterEdit => format!(
            "The reviewer edited and approved {}. Use the file as it is now; input_creator may run on it.",
            c.spec
        ),
        _ => format!("{} is approved; input_creator may run on it.", c.spec),
    }
}

fn observation_text(v: &Value) -> String {
    serde_json::to_string(v).expect("observation serializes")
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("no final answer after {max} iterations; transcript at {transcript}")]
    IterationLimit { max: usize, transcript: String },
    #[error("{source}; transcript at {transcript}")]
    ProviderFailure { source: ProviderError, transcript: String },
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error("invalid transcript: {0}")]
    Transcript(String),
    #[error("nothing to resume: {0}")]
    NothingToResume(String),
    #[error("approved spec is invalid: {0}")]
    Spec(#[from] SpecError),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> AgentError + '_ {
    move |e| AgentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files of the working directory, relative and sorted, leaving out run
/// bookkeeping and stores.
fn list_files(workdir: &Path) -> Vec<String> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) {
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().into_owned();
            let path = e.path();
            let rel = path
                .strip_prefix(root)
                .map(|p| p.to_string_lossy().replace('\\', "/"))
                .unwrap_or_default();
            if name.starts_with('.') || rel == "store" || rel == TRANSCRIPT_FILE || rel == CHECKPOINT_FILE {
                continue;
            }
            match e.file_type() {
                Ok(t) if t.is_dir() => walk(root, &path, out),
                Ok(t) if t.is_file() => out.push(rel),
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    walk(workdir, workdir, &mut out);
    out.sort();
    out
}

fn user_message(prompt: &str, files: &[String]) -> String {
    let mut m = format!("{prompt}\n\nFiles in the working directory:\n");
    if files.is_empty() {
        m.push_str("(none)\n");
    }
    for f in files {
        m.push_str(&format!("- {f}\n"));
    }
    m
}

fn write_spec_schema() -> ToolSchema {
    ToolSchema {
        name: WRITE_SPEC.into(),
        description: "Writes the model specification (*.spec.yaml) for review. Deck creation waits for approval.".into(),
        parameters: json!({
            "type": "object",
            "properties": {"path": {"type": "string"}, "content": {"type": "string"}},
            "required": ["path", "content"]
        }),
    }
}

fn write_spec(ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
    let get = |k: &str| {
        args.get(k)
            .and_then(Value::as_str)
            .ok_or_else(|| ToolError::InvalidArguments(format!("`{k}` must be a string")))
    };
    let rel = get("path")?;
    let content = get("content")?;
    if !rel.ends_with(".spec.yaml") {
        return Err(ToolError::InvalidArguments("spec path must end in .spec.yaml".into()));
    }
    let path = ctx.resolve(rel)?;
    let mut spec = ModelSpec::from_yaml(content)?;
    spec.resolve_topology(path.parent().unwrap_or(&ctx.workdir), Default::default())?;
    let io = |e: std::io::Error| ToolError::Io {
        path: rel.to_string(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(&path, content).map_err(io)?;
    ctx.add_artifact(rel);
    ctx.checkpoint = Some(Checkpoint {
        spec: rel.to_string(),
        sha256: sha256_hex(content.as_bytes()),
        status: CheckpointStatus::Pending,
    });
    Ok(json!({
        "written": rel,
        "entries": spec.entry_count(),
        "gaps": spec.gaps.len(),
        "checkpoint": "pending-approval",
    }))
}

struct Run<'a> {
    transcript: Transcript,
    ctx: ToolContext<'a>,
    registry: ToolRegistry,
}

impl Run<'_> {
    fn transcript_path(&self) -> PathBuf {
        self.ctx.workdir.join(TRANSCRIPT_FILE)
    }

    fn persist(&mut self) -> Result<(), AgentError> {
        self.transcript.artifacts = self.ctx.artifacts.clone();
        let path = self.transcript_path();
        std::fs::write(&path, self.transcript.to_jsonl()).map_err(io_error(&path))
    }

    fn write_checkpoint(&self, c: &Checkpoint) -> Result<(), AgentError> {
        let path = self.ctx.workdir.join(CHECKPOINT_FILE);
        let text = serde_json::to_string_pretty(c).expect("checkpoint serializes") + "\n";
        std::fs::write(&path, text).map_err(io_error(&path))
    }

    fn drive(mut self) -> Result<Transcript, AgentError> {
        let max = self.ctx.config.max_iterations;
        let mut tools = self.registry.schemas();
        tools.push(write_spec_schema());
        loop {
            if self.transcript.turns.len() >= max {
                self.transcript.status = RunStatus::IterationLimit;
                self.persist()?;
                return Err(AgentError::IterationLimit {
                    max,
                    transcript: TRANSCRIPT_FILE.into(),
                });
            }
            let request = ChatRequest {
                purpose: Purpose::Agent,
                system: self.transcript.system_instructions.clone(),
                messages: self.transcript.history(),
                tools: tools.clone(),
            };
            let response = match self.ctx.provider.complete(&request) {
                Ok(r) => r,
                Err(source) => {
                    self.transcript.status = RunStatus::ProviderFailure;
                    self.persist()?;
                    return Err(AgentError::ProviderFailure {
                        source,
                        transcript: TRANSCRIPT_FILE.into(),
                    });
                }
            };
            let index = self.transcript.turns.len() + 1;
            if response.tool_calls.is_empty() {
                self.transcript.turns.push(AgentTurn {
                    index,
                    thought: response.content.clone(),
                    actions: Vec::new(),
                });
                self.transcript.final_answer = Some(response.content);
                self.transcript.status = RunStatus::Completed;
                self.persist()?;
                return Ok(self.transcript);
            }

            let before = self.ctx.checkpoint.clone();
            // calls within one turn run one after another, in request order
            let mut actions = Vec::new();
            for call in response.tool_calls {
                let result = if call.name == WRITE_SPEC {
                    write_spec(&mut self.ctx, &call.arguments)
                } else {
                    self.registry.call(&mut self.ctx, &call.name, &call.arguments)
                };
                actions.push(ActionRecord {
                    id: call.id,
                    tool: call.name,
                    arguments: call.arguments,
                    observation: result.unwrap_or_else(|e| e.observation()),
                });
            }
            self.transcript.turns.push(AgentTurn {
                index,
                thought: response.content,
                actions,
            });

            let written = self.ctx.checkpoint.clone().filter(|c| Some(c) != before.as_ref());
            if let Some(mut c) = written {
                if self.ctx.config.auto_approve {
                    c.status = CheckpointStatus::AutoApproved;
                    self.ctx.checkpoint = Some(c.clone());
                }
                self.write_checkpoint(&c)?;
                self.transcript.checkpoints.push(CheckpointRecord {
                    after_turn: index,
                    checkpoint: c.clone(),
                });
                if !c.status.is_approved() {
                    self.transcript.status = RunStatus::AwaitingApproval;
                    self.persist()?;
                    return Ok(self.transcript);
                }
            }
            self.persist()?;
        }
    }
}

fn ingest_inputs(workdir: &Path, config: &AgentConfig) -> Result<(), AgentError> {
    let embedder = HashEmbedder::default();
    for (dir, store) in [(DOCS_DIR, tools::DOCUMENT_STORE), (IMAGES_DIR, tools::IMAGE_STORE)] {
        let folder = workdir.join(dir);
        if folder.is_dir() {
            let store_dir = workdir.join(store);
            std::fs::create_dir_all(&store_dir).map_err(io_error(&store_dir))?;
            ingest_dir(&folder, &store_dir, &SidecarExtractor, &embedder, config.chunk)?;
        }
    }
    Ok(())
}

/// Runs the agent on a fresh working directory.
///
/// Returns when the provider gives a final answer, or with status
/// `AwaitingApproval` right after a spec is written unless
/// `config.auto_approve` is set. The transcript is persisted in every
/// case, including iteration-limit and provider failures.
pub fn run_agent(
    prompt: &str,
    workdir: &Path,
    provider: &dyn ChatProvider,
    config: &AgentConfig,
) -> Result<Transcript, AgentError> {
    if !workdir.is_dir() {
        return Err(AgentError::Io {
            path: workdir.display().to_string(),
            message: "working directory does not exist".into(),
        });
    }
    ingest_inputs(workdir, config)?;
    let files = list_files(workdir);
    let transcript = Transcript {
        prompt: prompt.to_string(),
        user_message: user_message(prompt, &files),
        system_instructions: SYSTEM_INSTRUCTIONS.to_string(),
        turns: Vec::new(),
        checkpoints: Vec::new(),
        final_answer: None,
        artifacts: Vec::new(),
        status: RunStatus::Running,
    };
    Run {
        transcript,
        ctx: ToolContext::new(workdir, config, provider),
        registry: ToolRegistry::standard(),
    }
    .drive()
}

/// Approves the pending spec and continues a halted run.
///
/// The model spec file is re-read and checked; if it changed since it was
/// written the approval is recorded as `approved-after-edit`, and the
/// edited content is what the deck is built from.
pub fn resume_agent(workdir: &Path, provider: &dyn ChatProvider, config: &AgentConfig) -> Result<Transcript, AgentError> {
    let tpath = workdir.join(TRANSCRIPT_FILE);
    let text = std::fs::read_to_string(&tpath).map_err(io_error(&tpath))?;
    let mut transcript = Transcript::from_jsonl(&text).map_err(AgentError::Transcript)?;
    if transcript.status != RunStatus::AwaitingApproval {
        return Err(AgentError::NothingToResume(format!(
            "run status is {}",
            serde_json::to_value(transcript.status).expect("status serializes")
        )));
    }
    let cpath = workdir.join(CHECKPOINT_FILE);
    let ctext = std::fs::read_to_string(&cpath).map_err(io_error(&cpath))?;
    let mut checkpoint: Checkpoint =
        serde_json::from_str(&ctext).map_err(|e| AgentError::Transcript(format!("{CHECKPOINT_FILE}: {e}")))?;
    let spec_path = workdir.join(&checkpoint.spec);
    let spec_bytes = std::fs::read(&spec_path).map_err(io_error(&spec_path))?;
    ModelSpec::load_file(&spec_path)?;
    let sha = sha256_hex(&spec_bytes);
    checkpoint.status = if sha == checkpoint.sha256 {
        CheckpointStatus::Approved
    } else {
        CheckpointStatus::ApprovedAfterEdit
    };
    checkpoint.sha256 = sha;
    transcript.checkpoints.push(CheckpointRecord {
        after_turn: transcript.turns.len(),
        checkpoint: checkpoint.clone(),
    });
    transcript.status = RunStatus::Running;

    let mut ctx = ToolContext::new(workdir, config, provider);
    ctx.artifacts = transcript.artifacts.clone();
    ctx.checkpoint = Some(checkpoint.clone());
    let run = Run {
        transcript,
        ctx,
        registry: ToolRegistry::standard(),
    };
    run.write_checkpoint(&checkpoint)?;
    run.drive()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::provider::{Decision, ScriptedAction};

    const SPEC: &str = "title: One pipe\nsections:\n  GlobalParams:\n    - key: global_init_T\n      value: 628.15\n      provenance: {kind: structured-file, source: t.csv}\n";

    fn decision(thought: &str, tool: &str, arguments: Value) -> Decision {
        Decision {
            thought: thought.into(),
            actions: vec![ScriptedAction {
                tool: tool.into(),
                arguments,
                content_from: None,
            }],
            final_answer: None,
        }
    }

    fn done(text: &str) -> Decision {
        Decision {
            thought: String::new(),
            actions: Vec::new(),
            final_answer: Some(text.into()),
        }
    }

    fn provider(decisions: Vec<Decision>) -> ScriptedProvider {
        ScriptedProvider::new(DecisionScript {
            decisions,
            replies: Default::default(),
        })
    }

    #[test]
    fn never_finishing_hits_iteration_limit() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "x").unwrap();
        let p = provider((0..30).map(|_| decision("look", "text_reader", json!({"file": "a.txt"}))).collect());
        let err = run_agent("loop", dir.path(), &p, &AgentConfig::default()).unwrap_err();
        assert!(matches!(err, AgentError::IterationLimit { max: 20, .. }));
        let t = Transcript::from_jsonl(&std::fs::read_to_string(dir.path().join(TRANSCRIPT_FILE)).unwrap()).unwrap();
        assert_eq!(t.turns.len(), 20);
        assert_eq!(t.status, RunStatus::IterationLimit);
    }

    #[test]
    fn empty_store_is_observed_and_run_finishes() {
        let dir = tempfile::tempdir().unwrap();
        let p = provider(vec![decision("search", "pdf_query", json!({"query": "pipe length"})), done("no data")]);
        let t = run_agent("q", dir.path(), &p, &AgentConfig::default()).unwrap();
        assert_eq!(t.status, RunStatus::Completed);
        assert_eq!(t.turns[0].actions[0].observation["error"], "EmptyStore");
    }

    #[test]
    fn checkpoint_halts_and_resume_continues() {
        let dir = tempfile::tempdir().unwrap();
        let p = provider(vec![
            decision("record", WRITE_SPEC, json!({"path": "m.spec.yaml", "content": SPEC})),
            decision("build", "input_creator", json!({"spec": "m.spec.yaml"})),
            done("finished"),
        ]);
        let t = run_agent("go", dir.path(), &p, &AgentConfig::default()).unwrap();
        assert_eq!(t.status, RunStatus::AwaitingApproval);
        assert!(dir.path().join("m.spec.yaml").exists());
        assert!(!dir.path().join("m.i").exists());

        let edited = SPEC.replace("628.15", "700.0");
        std::fs::write(dir.path().join("m.spec.yaml"), edited).unwrap();
        let t = resume_agent(dir.path(), &p, &AgentConfig::default()).unwrap();
        assert_eq!(t.status, RunStatus::Completed);
        assert_eq!(
            t.checkpoints.last().unwrap().checkpoint.status,
            CheckpointStatus::ApprovedAfterEdit
        );
        let deck = std::fs::read_to_string(dir.path().join("m.i")).unwrap();
        assert!(deck.contains("global_init_T = 700"), "{deck}");
        assert!(resume_agent(dir.path(), &p, &AgentConfig::default()).is_err());
    }

    #[test]
    fn invalid_spec_is_not_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = provider(vec![
            decision("record", WRITE_SPEC, json!({"path": "m.spec.yaml", "content": "title: x\nsections: {Solver: []}\n"})),
            done("gave up"),
        ]);
        let t = run_agent("go", dir.path(), &p, &AgentConfig::default()).unwrap();
        assert_eq!(t.turns[0].actions[0].observation["error"], "SpecError");
        assert!(!dir.path().join("m.spec.yaml").exists());
        assert!(t.checkpoints.is_empty());
    }

    #[test]
    fn transcript_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = provider(vec![
            decision("record", WRITE_SPEC, json!({"path": "m.spec.yaml", "content": SPEC})),
            done("ok"),
        ]);
        let cfg = AgentConfig {
            auto_approve: true,
            ..Default::default()
        };
        let t = run_agent("go", dir.path(), &p, &cfg).unwrap();
        let text = std::fs::read_to_string(dir.path().join(TRANSCRIPT_FILE)).unwrap();
        assert_eq!(Transcript::from_jsonl(&text).unwrap(), t);
        assert_eq!(t.to_jsonl(), text);
        let h = t.history();
        assert_eq!(h.iter().filter(|m| m.role == Role::Assistant).count(), 2);
        assert!(h.iter().any(|m| m.role == Role::User && m.content.contains("approved")));
    }
}

use std::io::Read;
use std::path::{Component, Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::creator::{create_deck, CreatorError};
use super::provider::{ChatProvider, ToolSchema};
use super::table::{summarize_table, TableParseError};
use super::AgentConfig;
use crate::deck::{parse_deck, serialize_deck, BlockRegistry};
use crate::knowledge::{answer, HashEmbedder, KnowledgeError, StoreKind, VectorStore};
use crate::spec::{ModelSpec, SpecError};
use crate::topology::{load_topology, BuildOptions};
use crate::validator::{semantic_instructions, validate_with, ValidateOptions};

/// The only tool names a registry accepts.
pub const TOOL_NAMES: [&str; 7] = [
    "spreadsheet_reader",
    "text_reader",
    "pdf_query",
    "image_query",
    "input_creator",
    "input_validator",
    "code_exec",
];

/// Store of the task's own documents, relative to the working directory.
pub const DOCUMENT_STORE: &str = "store/documents";
/// Store of image descriptions, relative to the working directory.
pub const IMAGE_STORE: &str = "store/images";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointStatus {
    Pending,
    AutoApproved,
    Approved,
    ApprovedAfterEdit,
}

impl CheckpointStatus {
    pub fn is_approved(self) -> bool {
        self != CheckpointStatus::Pending
    }
}

/// The model spec awaiting or holding approval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Spec path relative to the working directory.
    pub spec: String,
    pub sha256: String,
    pub status: CheckpointStatus,
}

/// State shared by the tools of one agent run.
pub struct ToolContext<'a> {
    pub workdir: PathBuf,
    pub config: &'a AgentConfig,
    pub provider: &'a dyn ChatProvider,
    pub embedder: HashEmbedder,
    pub registry: BlockRegistry,
    pub checkpoint: Option<Checkpoint>,
    /// Files written during the run, relative to the working directory.
    pub artifacts: Vec<String>,
}

impl<'a> ToolContext<'a> {
    pub fn new(workdir: &Path, config: &'a AgentConfig, provider: &'a dyn ChatProvider) -> Self {
        Self {
            workdir: workdir.to_path_buf(),
            config,
            provider,
            embedder: HashEmbedder::default(),
            registry: BlockRegistry::default(),
            checkpoint: None,
            artifacts: Vec::new(),
        }
    }

    /// Resolves a path argument inside the working directory.
    pub fn resolve(&self, rel: &str) -> Result<PathBuf, ToolError> {
        let p = Path::new(rel);
        let inside = !rel.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
        if !inside {
            return Err(ToolError::PathOutsideWorkdir(rel.to_string()));
        }
        Ok(self.workdir.join(p))
    }

    pub fn add_artifact(&mut self, rel: &str) {
        if !self.artifacts.iter().any(|a| a == rel) {
            self.artifacts.push(rel.to_string());
        }
    }

    fn read_text(&self, rel: &str) -> Result<String, ToolError> {
        let path = self.resolve(rel)?;
        std::fs::read_to_string(&path).map_err(|e| ToolError::Io {
            path: rel.to_string(),
            message: e.to_string(),
        })
    }

    fn write_text(&mut self, rel: &str, text: &str) -> Result<(), ToolError> {
        let path = self.resolve(rel)?;
        let io = |e: std::io::Error| ToolError::Io {
            path: rel.to_string(),
            message: e.to_string(),
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        std::fs::write(&path, text).map_err(io)?;
        self.add_artifact(rel);
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("no tool named `{0}`")]
    UnknownTool(String),
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error("path `{0}` is not inside the working directory")]
    PathOutsideWorkdir(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {source}")]
    TableParse { path: String, source: TableParseError },
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error("{0}")]
    CheckpointRequired(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Creator(#[from] CreatorError),
    #[error("{path}: {message}")]
    DeckSyntax { path: String, message: String },
    #[error("{0}")]
    Topology(String),
    #[error("tool `{0}` is disabled by configuration")]
    ToolDisabled(&'static str),
    #[error("script exceeded its {0} s time limit and was killed")]
    Timeout(f64),
}

impl ToolError {
    /// Short error name used in observations.
    pub fn code(&self) -> &'static str {
        match self {
            ToolError::UnknownTool(_) => "UnknownTool",
            ToolError::InvalidArguments(_) => "InvalidArguments",
            ToolError::PathOutsideWorkdir(_) => "PathOutsideWorkdir",
            ToolError::Io { .. } => "IoError",
            ToolError::TableParse { .. } => "TableParseError",
            ToolError::Knowledge(KnowledgeError::EmptyStore) => "EmptyStore",
            ToolError::Knowledge(_) => "KnowledgeError",
            ToolError::CheckpointRequired(_) => "CheckpointRequired",
            ToolError::Spec(_) => "SpecError",
            ToolError::Creator(CreatorError::CreatorOutputUnparseable(_)) => "CreatorOutputUnparseable",
            ToolError::Creator(_) => "CreatorError",
            ToolError::DeckSyntax { .. } => "DeckSyntaxError",
            ToolError::Topology(_) => "TopologyError",
            ToolError::ToolDisabled(_) => "ToolDisabled",
            ToolError::Timeout(_) => "Timeout",
        }
    }

    /// Observation text for a failed call.
    pub fn observation(&self) -> Value {
        json!({"error": self.code(), "message": self.to_string()})
    }
}

pub trait Tool: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// JSON schema of the arguments object.
    fn parameters(&self) -> Value;
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("`{0}` is not one of the seven supported tools")]
    UnknownName(String),
    #[error("tool `{0}` is already registered")]
    Duplicate(String),
}

#[derive(Default)]
pub struct ToolRegistry {
    tools: Vec<Box<dyn Tool>>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// All seven tools.
    pub fn standard() -> Self {
        let mut r = Self::new();
        let all: [Box<dyn Tool>; 7] = [
            Box::new(SpreadsheetReader),
            Box::new(TextReader),
            Box::new(PdfQuery),
            Box::new(ImageQuery),
            Box::new(InputCreator),
            Box::new(InputValidator),
            Box::new(CodeExec),
        ];
        for t in all {
            r.register(t).expect("standard tools are distinct");
        }
        r
    }

    pub fn register(&mut self, tool: Box<dyn Tool>) -> Result<(), RegistryError> {
        let name = tool.name();
        if !TOOL_NAMES.contains(&name) {
            return Err(RegistryError::UnknownName(name.to_string()));
        }
        if self.get(name).is_some() {
            return Err(RegistryError::Duplicate(name.to_string()));
        }
        self.tools.push(tool);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn Tool> {
        self.tools.iter().find(|t| t.name() == name).map(|t| t.as_ref())
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.tools.iter().map(|t| t.name()).collect()
    }

    pub fn schemas(&self) -> Vec<ToolSchema> {
        self.tools
            .iter()
            .map(|t| ToolSchema {
                name: t.name().to_string(),
                description: t.description().to_string(),
                parameters: t.parameters(),
            })
            .collect()
    }

    pub fn call(&self, ctx: &mut ToolContext, name: &str, args: &Value) -> Result<Value, ToolError> {
        let tool = self.get(name).ok_or_else(|| ToolError::UnknownTool(name.to_string()))?;
        tool.call(ctx, args)
    }
}

fn str_arg<'v>(args: &'v Value, key: &str) -> Result<&'v str, ToolError> {
    args.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| ToolError::InvalidArguments(format!("`{key}` must be a string")))
}

fn opt_str_arg<'v>(args: &'v Value, key: &str) -> Result<Option<&'v str>, ToolError> {
    match args.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ToolError::InvalidArguments(format!("`{key}` must be a string"))),
    }
}

fn k_arg(args: &Value, default: usize) -> Result<usize, ToolError> {
    match args.get("k") {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_u64()
            .filter(|k| *k >= 1)
            .map(|k| k as usize)
            .ok_or_else(|| ToolError::InvalidArguments("`k` must be a positive integer".into())),
    }
}

fn file_schema(what: &str) -> Value {
    json!({
        "type": "object",
        "properties": {"file": {"type": "string", "description": what}},
        "required": ["file"]
    })
}

fn query_schema() -> Value {
    json!({
        "type": "object",
        "properties": {
            "query": {"type": "string"},
            "k": {"type": "integer", "minimum": 1}
        },
        "required": ["query"]
    })
}

pub struct SpreadsheetReader;

impl Tool for SpreadsheetReader {
    fn name(&self) -> &'static str {
        "spreadsheet_reader"
    }
    fn description(&self) -> &'static str {
        "Reads a delimited table with a header row and returns column names, all rows and statistics per numeric column."
    }
    fn parameters(&self) -> Value {
        file_schema("table file relative to the working directory")
    }
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
        let file = str_arg(args, "file")?;
        let text = ctx.read_text(file)?;
        let summary = summarize_table(&text).map_err(|source| ToolError::TableParse {
            path: file.to_string(),
            source,
        })?;
        let mut out = serde_json::to_value(summary).expect("summary serializes");
        out["file"] = json!(file);
        Ok(out)
    }
}

pub struct TextReader;

impl Tool for TextReader {
    fn name(&self) -> &'static str {
        "text_reader"
    }
    fn description(&self) -> &'static str {
        "Returns the full text of a file with its byte length and line count."
    }
    fn parameters(&self) -> Value {
        file_schema("text file relative to the working directory")
    }
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
        let file = str_arg(args, "file")?;
        let content = ctx.read_text(file)?;
        Ok(json!({
            "file": file,
            "content": content,
            "bytes": content.len(),
            "lines": content.lines().count(),
        }))
    }
}

fn open_store(dir: &Path, ctx: &ToolContext) -> Result<VectorStore, ToolError> {
    Ok(VectorStore::open(dir, &ctx.embedder)?)
}

fn answer_value(a: crate::knowledge::Answer) -> Value {
    let citations: Vec<Value> = a
        .hits
        .iter()
        .map(|h| {
            json!({
                "citation": h.chunk.citation(),
                "store": h.store,
                "score": h.score,
            })
        })
        .collect();
    json!({"answer": a.markdown, "citations": citations})
}

pub struct PdfQuery;

impl Tool for PdfQuery {
    fn name(&self) -> &'static str {
        "pdf_query"
    }
    fn description(&self) -> &'static str {
        "Answers a question from the solver manuals and the task documents, with page citations."
    }
    fn parameters(&self) -> Value {
        query_schema()
    }
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
        let q = str_arg(args, "query")?;
        let k = k_arg(args, ctx.config.retrieval_k)?;
        let static_store = match &ctx.config.static_store {
            Some(dir) => open_store(dir, ctx)?,
            None => VectorStore::new(&ctx.embedder),
        };
        let dynamic = open_store(&ctx.workdir.join(DOCUMENT_STORE), ctx)?;
        let a = answer(
            &[(StoreKind::Static, &static_store), (StoreKind::Dynamic, &dynamic)],
            q,
            k,
            &ctx.embedder,
            ctx.provider,
        )?;
        Ok(answer_value(a))
    }
}

pub struct ImageQuery;

impl Tool for ImageQuery {
    fn name(&self) -> &'static str {
        "image_query"
    }
    fn description(&self) -> &'static str {
        "Answers a question from the descriptions of the task's images and schematics."
    }
    fn parameters(&self) -> Value {
        query_schema()
    }
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
        let q = str_arg(args, "query")?;
        let k = k_arg(args, ctx.config.retrieval_k)?;
        let images = open_store(&ctx.workdir.join(IMAGE_STORE), ctx)?;
        let a = answer(&[(StoreKind::Dynamic, &images)], q, k, &ctx.embedder, ctx.provider)?;
        Ok(answer_value(a))
    }
}

/// Default deck path for a spec path: `x.spec.yaml` becomes `x.i`.
pub fn default_deck_path(spec: &str) -> String {
    let stem = spec
        .strip_suffix(".spec.yaml")
        .or_else(|| spec.strip_suffix(".yaml"))
        .unwrap_or(spec);
    format!("{stem}.i")
}

fn normalize(rel: &str) -> String {
    Path::new(rel)
        .components()
        .filter(|c| matches!(c, Component::Normal(_)))
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

pub struct InputCreator;

impl Tool for InputCreator {
    fn name(&self) -> &'static str {
        "input_creator"
    }
    fn description(&self) -> &'static str {
        "Compiles the approved model specification into a complete input deck, filling remaining gaps with labelled assumptions."
    }
    fn parameters(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "spec": {"type": "string", "description": "approved *.spec.yaml file"},
                "output": {"type": "string", "description": "deck path, default derived from the model spec name"}
            },
            "required": ["spec"]
        })
    }
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
        let spec_rel = str_arg(args, "spec")?;
        let output = match opt_str_arg(args, "output")? {
            Some(o) => o.to_string(),
            None => default_deck_path(spec_rel),
        };
        ctx.resolve(&output)?;
        let approved = ctx
            .checkpoint
            .as_ref()
            .is_some_and(|c| c.status.is_approved() && normalize(&c.spec) == normalize(spec_rel));
        if !approved {
            return Err(ToolError::CheckpointRequired(format!(
                "`{spec_rel}` has not been approved; write it with write_spec and wait for approval"
            )));
        }
        let spec = ModelSpec::load_file(&ctx.resolve(spec_rel)?)?;
        let out = create_deck(&spec, &ctx.registry, ctx.provider)?;
        let deck_text = serialize_deck(&out.deck);
        ctx.write_text(&output, &deck_text)?;
        let trace_path = format!("{output}.trace.json");
        let trace = json!({"deck": output, "spec": spec_rel, "parameters": out.trace});
        ctx.write_text(&trace_path, &(serde_json::to_string_pretty(&trace).expect("trace serializes") + "\n"))?;
        Ok(json!({
            "deck": output,
            "trace": trace_path,
            "provider_called": out.provider_called,
            "filled": out.filled,
            "residual_gaps": out.residual_gaps,
        }))
    }
}

pub struct InputValidator;

impl Tool for InputValidator {
    fn name(&self) -> &'static str {
        "input_validator"
    }
    fn description(&self) -> &'static str {
        "Checks a deck for completeness, references, boundary conditions, geometry, units and functions, and lists what to fix."
    }
    fn parameters(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "deck": {"type": "string"},
                "topology": {"type": "string", "description": "optional topology JSON to compare against"}
            },
            "required": ["deck"]
        })
    }
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
        let deck_rel = str_arg(args, "deck")?;
        let text = ctx.read_text(deck_rel)?;
        let deck = parse_deck(&text).map_err(|e| ToolError::DeckSyntax {
            path: deck_rel.to_string(),
            message: e.to_string(),
        })?;
        let topology = match opt_str_arg(args, "topology")? {
            Some(t) => Some(
                load_topology(&ctx.resolve(t)?, BuildOptions::default()).map_err(|e| ToolError::Topology(e.to_string()))?,
            ),
            None => None,
        };
        let report = validate_with(
            &deck,
            &ctx.registry,
            &ValidateOptions {
                topology: topology.as_ref(),
                energy_threshold: ctx.config.energy_threshold,
                geometry_tolerance: ctx.config.geometry_tolerance,
            },
        );
        let instructions = semantic_instructions(&report);
        Ok(json!({
            "deck": deck_rel,
            "passed": report.passed,
            "report": report,
            "instructions": instructions,
        }))
    }
}

pub struct CodeExec;

impl Tool for CodeExec {
    fn name(&self) -> &'static str {
        "code_exec"
    }
    fn description(&self) -> &'static str {
        "Runs a Python script in a scratch directory and returns stdout, stderr and the exit code."
    }
    fn parameters(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "script": {"type": "string"},
                "timeout_s": {"type": "number", "exclusiveMinimum": 0}
            },
            "required": ["script"]
        })
    }
    fn call(&self, ctx: &mut ToolContext, args: &Value) -> Result<Value, ToolError> {
        let cfg = &ctx.config.code_exec;
        if !cfg.enabled {
            return Err(ToolError::ToolDisabled("code_exec"));
        }
        let script = str_arg(args, "script")?;
        let timeout = match args.get("timeout_s") {
            None | Some(Value::Null) => cfg.timeout_s,
            Some(v) => v
                .as_f64()
                .filter(|t| *t > 0.0 && t.is_finite())
                .ok_or_else(|| ToolError::InvalidArguments("`timeout_s` must be a positive number".into()))?,
        };
        run_script(&cfg.interpreter, script, timeout)
    }
}

fn run_script(interpreter: &str, script: &str, timeout_s: f64) -> Result<Value, ToolError> {
    let io = |e: std::io::Error| ToolError::Io {
        path: "<scratch>".into(),
        message: e.to_string(),
    };
    let scratch = tempfile::tempdir().map_err(io)?;
    std::fs::write(scratch.path().join("script.py"), script).map_err(io)?;
    let mut child = Command::new(interpreter)
        .arg("script.py")
        .current_dir(scratch.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| ToolError::Io {
            path: interpreter.to_string(),
            message: e.to_string(),
        })?;
    let drain = |mut r: Box<dyn Read + Send>| {
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = r.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        })
    };
    let out = drain(Box::new(child.stdout.take().expect("piped stdout")));
    let err = drain(Box::new(child.stderr.take().expect("piped stderr")));
    let deadline = Instant::now() + Duration::from_secs_f64(timeout_s);
    let status = loop {
        if let Some(s) = child.try_wait().map_err(io)? {
            break s;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ToolError::Timeout(timeout_s));
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    Ok(json!({
        "stdout": out.join().unwrap_or_default(),
        "stderr": err.join().unwrap_or_default(),
        "exit_code": status.code(),
    }))
}

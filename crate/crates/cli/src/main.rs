//! `deckforge` command-line interface.
//!
//! Exit codes: 0 success, 1 tool failure (unreadable input, bad
//! configuration, internal error), 2 the command ran and found errors
//! (validation failures, empty stores, an agent that hit its iteration
//! limit).

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use deckforge::agent::{self, AgentError, ChatProvider, DecisionScript, RunStatus, ScriptedProvider, Transcript};
use deckforge::deck::{parse_deck, serialize_deck, BlockRegistry, InputDeck};
use deckforge::knowledge::{self, HashEmbedder, KnowledgeError, SidecarExtractor, StoreKind, VectorStore};
use deckforge::metrics::{summarize, CoverageManifest};
use deckforge::spec::{compile_spec, load_overrides, merge_overrides, ModelSpec};
use deckforge::topology::{check_closure, load_topology, to_components, BuildOptions};
use deckforge::validator::{validate_with, ValidateOptions};

use config::{FileConfig, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "deckforge", version, about = "Build and check simulation input decks from engineering documents")]
struct Cli {
    /// Configuration file (default: $DECKFORGE_CONFIG, then ./deckforge.toml)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working directory holding the task files and stores
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Directory of the static (solver manual) store
    #[arg(long, global = true)]
    static_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Add a folder of documents to the task store
    Ingest {
        dir: PathBuf,
        /// Ingest image descriptions into the image store
        #[arg(long)]
        images: bool,
        /// Store directory (default: <workdir>/store/documents or store/images)
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Answer a question from the static and task stores with citations
    Ask {
        query: String,
        #[arg(short, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    #[command(subcommand)]
    Topology(TopologyCommand),
    #[command(subcommand)]
    Spec(SpecCommand),
    /// Check a deck and report findings
    Validate {
        deck: PathBuf,
        /// Topology JSON to compare component geometry against
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    #[command(subcommand)]
    Agent(AgentCommand),
    /// Coverage metrics from a directory of manifest files
    Metrics {
        dir: PathBuf,
        /// Print the JSON summary instead of the table
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand, Debug)]
enum TopologyCommand {
    /// Print component definitions and the flow-path closure report
    Compile {
        graph: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand, Debug)]
enum SpecCommand {
    /// Compile a spec into a deck; residual gaps go to stderr
    Compile {
        spec: PathBuf,
        /// Deck output path (default: stdout). A trace file is written next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply an overrides file to a spec
    Merge {
        spec: PathBuf,
        overrides: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct ProviderArgs {
    /// Replay a decision script instead of calling a chat endpoint
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum AgentCommand {
    /// Start a run; halts for approval after the model spec is written
    Run {
        prompt: String,
        #[arg(long)]
        auto_approve: bool,
        #[arg(long)]
        enable_code_exec: bool,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Approve the reviewed spec and continue a halted run
    Resume {
        dir: PathBuf,
        #[arg(long)]
        enable_code_exec: bool,
        #[command(flatten)]
        provider: ProviderArgs,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    ErrorsFound,
}

type CmdResult = Result<Outcome, String>;

fn env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ErrorsFound) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let file = FileConfig::discover(cli.config.as_deref(), &env)?;
    let mut flags = Overrides {
        workdir: cli.workdir.clone(),
        static_store: cli.static_dir.clone(),
        ..Default::default()
    };
    match &cli.command {
        Command::Agent(AgentCommand::Run {
            auto_approve,
            enable_code_exec,
            max_iterations,
            ..
        }) => {
            flags.auto_approve = *auto_approve;
            flags.code_exec = *enable_code_exec;
            flags.max_iterations = *max_iterations;
        }
        Command::Agent(AgentCommand::Resume { enable_code_exec, .. }) => flags.code_exec = *enable_code_exec,
        _ => {}
    }
    let rc = RunConfig::resolve(&file, &env, &flags)?;

    match cli.command {
        Command::Ingest { dir, images, store } => ingest(&rc, &dir, images, store),
        Command::Ask { query, k, provider } => ask(&rc, &query, k, &provider),
        Command::Topology(TopologyCommand::Compile { graph, json }) => topology_compile(&graph, json),
        Command::Spec(SpecCommand::Compile { spec, output }) => spec_compile(&spec, output.as_deref()),
        Command::Spec(SpecCommand::Merge { spec, overrides, output }) => spec_merge(&spec, &overrides, output.as_deref()),
        Command::Validate { deck, topology, json } => validate(&rc, &deck, topology.as_deref(), json),
        Command::Agent(AgentCommand::Run { prompt, provider, .. }) => agent_run(&rc, &prompt, &provider),
        Command::Agent(AgentCommand::Resume { dir, provider, .. }) => agent_resume(&rc, &dir, &provider),
        Command::Metrics { dir, json } => metrics(&dir, json),
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn ingest(rc: &RunConfig, dir: &Path, images: bool, store: Option<PathBuf>) -> CmdResult {
    if !dir.is_dir() {
        return Err(format!("{}: not a directory", dir.display()));
    }
    let store = store.unwrap_or_else(|| {
        rc.workdir
            .join(if images { agent::tools::IMAGE_STORE } else { agent::tools::DOCUMENT_STORE })
    });
    std::fs::create_dir_all(&store).map_err(|e| format!("{}: {e}", store.display()))?;
    let report = knowledge::ingest_dir(dir, &store, &SidecarExtractor, &HashEmbedder::default(), rc.agent.chunk)
        .map_err(|e| e.to_string())?;
    for (name, reason) in &report.failures {
        eprintln!("failed: {name}: {reason}");
    }
    println!(
        "{} new chunks ({} documents ingested, {} unchanged, {} failed)",
        report.added_chunks,
        report.ingested.len(),
        report.unchanged.len(),
        report.failures.len()
    );
    if !report.failures.is_empty() && report.ingested.is_empty() && report.unchanged.is_empty() {
        return Err("no document could be ingested".into());
    }
    Ok(Outcome::Ok)
}

/// Scripted replay, else the configured endpoint, else `fallback`.
fn provider(
    rc: &RunConfig,
    args: &ProviderArgs,
    fallback: Option<ScriptedProvider>,
) -> Result<Box<dyn ChatProvider>, String> {
    if let Some(path) = &args.script {
        let script = DecisionScript::load(path).map_err(|e| e.to_string())?;
        return Ok(Box::new(ScriptedProvider::new(script)));
    }
    if let Some(p) = &rc.provider {
        return Ok(Box::new(p.http()));
    }
    match fallback {
        Some(f) => Ok(Box::new(f)),
        None => Err("no chat provider: pass --script or configure [provider] endpoint and model".into()),
    }
}

fn ask(rc: &RunConfig, query: &str, k: usize, args: &ProviderArgs) -> CmdResult {
    let embedder = HashEmbedder::default();
    let open = |dir: &Path| VectorStore::open(dir, &embedder).map_err(|e| e.to_string());
    let static_store = match &rc.static_store {
        Some(dir) => open(dir)?,
        None => VectorStore::new(&embedder),
    };
    let dynamic = open(&rc.workdir.join(agent::tools::DOCUMENT_STORE))?;
    // without a provider the answer quotes the best matching passage
    let provider = provider(rc, args, Some(ScriptedProvider::new(DecisionScript::default())))?;
    match knowledge::answer(
        &[(StoreKind::Static, &static_store), (StoreKind::Dynamic, &dynamic)],
        query,
        k,
        &embedder,
        provider.as_ref(),
    ) {
        Ok(a) => {
            print!("{}", a.markdown);
            Ok(Outcome::Ok)
        }
        Err(KnowledgeError::EmptyStore) => {
            eprintln!("EmptyStore: no documents have been ingested");
            Ok(Outcome::ErrorsFound)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn topology_compile(path: &Path, json: bool) -> CmdResult {
    let graph = load_topology(path, BuildOptions::default()).map_err(|e| e.to_string())?;
    let deck = InputDeck {
        blocks: vec![deckforge::deck::Block {
            children: to_components(&graph),
            ..deckforge::deck::Block::new("Components")
        }],
        ..Default::default()
    };
    let components = serialize_deck(&deck);
    let report = check_closure(&graph);
    if json {
        let closure = match &report {
            Ok(r) => serde_json::to_value(r).expect("report serializes"),
            Err(e) => serde_json::json!({"closed": false, "error": e.to_string()}),
        };
        let v = serde_json::json!({"components": components, "closure": closure});
        println!("{}", serde_json::to_string_pretty(&v).expect("report serializes"));
        return Ok(Outcome::Ok);
    }
    print!("{components}");
    println!();
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            println!("closed loop: no ({e})");
            return Ok(Outcome::Ok);
        }
    };
    println!("closed loop: {}", if report.closed { "yes" } else { "no" });
    println!("flow path: {}", report.summary());
    if !report.unreachable.is_empty() {
        println!("not on the path: {}", report.unreachable.join(", "));
    }
    if let Some(m) = report.matches_declared {
        println!("matches declared path: {}", if m { "yes" } else { "no" });
    }
    Ok(Outcome::Ok)
}

fn spec_compile(path: &Path, output: Option<&Path>) -> CmdResult {
    let spec = ModelSpec::load_file(path).map_err(|e| e.to_string())?;
    let out = compile_spec(&spec, &BlockRegistry::default()).map_err(|e| e.to_string())?;
    let text = serialize_deck(&out.deck);
    match output {
        Some(o) => {
            write(o, &text)?;
            let trace = serde_json::json!({
                "deck": o.display().to_string(),
                "spec": path.display().to_string(),
                "parameters": out.trace,
            });
            let trace_path = PathBuf::from(format!("{}.trace.json", o.display()));
            write(&trace_path, &(serde_json::to_string_pretty(&trace).expect("trace serializes") + "\n"))?;
        }
        None => print!("{text}"),
    }
    for g in &out.residual_gaps {
        eprintln!("gap: {}/{}: {}", g.section, g.key, g.reason);
    }
    Ok(Outcome::Ok)
}

fn spec_merge(spec: &Path, overrides: &Path, output: Option<&Path>) -> CmdResult {
    let base = ModelSpec::from_yaml(&read(spec)?).map_err(|e| format!("{}: {e}", spec.display()))?;
    let ov = load_overrides(&read(overrides)?).map_err(|e| format!("{}: {e}", overrides.display()))?;
    let merged = merge_overrides(&base, &ov);
    let added = merged.superseded.len().saturating_sub(base.superseded.len());
    let text = merged.to_yaml();
    match output {
        Some(o) => write(o, &text)?,
        None => print!("{text}"),
    }
    eprintln!("{} overrides read, {} entries superseded", ov.len(), added);
    Ok(Outcome::Ok)
}

fn validate(rc: &RunConfig, path: &Path, topology: Option<&Path>, json: bool) -> CmdResult {
    let text = read(path)?;
    let deck = match parse_deck(&text) {
        Ok(d) => d,
        Err(e) => {
            println!("error SYNTAX at {}: {e}", path.display());
            return Ok(Outcome::ErrorsFound);
        }
    };
    let graph = match topology {
        Some(t) => Some(load_topology(t, BuildOptions::default()).map_err(|e| e.to_string())?),
        None => None,
    };
    let report = validate_with(
        &deck,
        &BlockRegistry::default(),
        &ValidateOptions {
            topology: graph.as_ref(),
            energy_threshold: rc.agent.energy_threshold,
            geometry_tolerance: rc.agent.geometry_tolerance,
        },
    );
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(if report.passed { Outcome::Ok } else { Outcome::ErrorsFound })
}

fn print_transcript(t: &Transcript, workdir: &Path) {
    match t.status {
        RunStatus::AwaitingApproval => {
            let spec = t.checkpoints.last().map(|c| c.checkpoint.spec.as_str()).unwrap_or("the model spec");
            println!("Specification written to {}.", workdir.join(spec).display());
            println!("Review and edit it if needed, then continue with:");
            println!("  deckforge agent resume {}", workdir.display());
        }
        _ => {
            if let Some(a) = &t.final_answer {
                println!("{a}");
            }
        }
    }
    println!("turns: {}", t.turns.len());
    for a in &t.artifacts {
        println!("wrote {}", workdir.join(a).display());
    }
}

fn agent_outcome(result: Result<Transcript, AgentError>, workdir: &Path) -> CmdResult {
    match result {
        Ok(t) => {
            print_transcript(&t, workdir);
            Ok(Outcome::Ok)
        }
        Err(e @ AgentError::IterationLimit { .. }) => {
            eprintln!("IterationLimit: {e}");
            Ok(Outcome::ErrorsFound)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn agent_run(rc: &RunConfig, prompt: &str, args: &ProviderArgs) -> CmdResult {
    if !rc.workdir.is_dir() {
        return Err(format!("{}: working directory does not exist", rc.workdir.display()));
    }
    let p = provider(rc, args, None)?;
    agent_outcome(agent::run_agent(prompt, &rc.workdir, p.as_ref(), &rc.agent), &rc.workdir)
}

fn agent_resume(rc: &RunConfig, dir: &Path, args: &ProviderArgs) -> CmdResult {
    let p = provider(rc, args, None)?;
    agent_outcome(agent::resume_agent(dir, p.as_ref(), &rc.agent), dir)
}

fn metrics(dir: &Path, json: bool) -> CmdResult {
    let entries = std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("{}: no manifest files", dir.display()));
    }
    let manifests = paths
        .iter()
        .map(|p| CoverageManifest::load(p).map_err(|e| format!("{}: {e}", p.display())))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&manifests).map_err(|e| e.to_string())?;
    if json {
        println!("{}", summary.to_json());
    } else {
        print!("{}", summary.to_table());
    }
    Ok(Outcome::Ok)
}

//! Document knowledge stores: ingest extracted text, embed it, persist it,
//! and answer similarity queries with page citations.
//!
//! A store directory holds `chunks.jsonl` (one chunk per line) and
//! `manifest.json` (dimension, embedder tag and the content hash of every
//! ingested document). Writers hold a `.lock` file in the directory.

mod chunk;
mod embed;
mod extract;

pub use chunk::{chunk_text, ChunkConfig};
pub use embed::{cosine, tokens, EmbeddingProvider, HashEmbedder};
pub use extract::{discover, DocumentExtractor, DocumentFiles, Extracted, SidecarExtractor};

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::provider::{ChatProvider, ChatRequest, Message, Purpose, Role, BLOCK_BEGIN, BLOCK_END};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChunkKind {
    Text,
    FigureDescription,
    ImageDescription,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeChunk {
    pub id: String,
    pub source_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<u32>,
    pub kind: ChunkKind,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

impl KnowledgeChunk {
    /// `file` or `file p. N`.
    pub fn citation(&self) -> String {
        match self.page {
            Some(p) => format!("{} p. {p}", self.source_file),
            None => self.source_file.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: corrupt store: {message}")]
    Corrupt { path: String, message: String },
    #[error("store {0} is locked by another writer")]
    Locked(String),
    #[error("embedder mismatch: store uses {store} (dimension {store_dim}), embedder is {embedder} (dimension {embedder_dim})")]
    EmbedderMismatch {
        store: String,
        store_dim: usize,
        embedder: String,
        embedder_dim: usize,
    },
    #[error("no chunks to search")]
    EmptyStore,
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Provider(#[from] crate::agent::provider::ProviderError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KnowledgeError + '_ {
    move |source| KnowledgeError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    dimension: usize,
    provider_tag: String,
    /// Document name → sha256 of its files.
    documents: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    pub dimension: usize,
    pub provider_tag: String,
    pub chunks: Vec<KnowledgeChunk>,
    pub documents: BTreeMap<String, String>,
}

pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";

impl VectorStore {
    pub fn new(embedder: &dyn EmbeddingProvider) -> Self {
        Self {
            dimension: embedder.dimension(),
            provider_tag: embedder.tag(),
            chunks: Vec::new(),
            documents: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Loads a store directory; a directory without a manifest is an empty
    /// store for `embedder`.
    pub fn open(dir: &Path, embedder: &dyn EmbeddingProvider) -> Result<Self, KnowledgeError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.exists() {
            return Ok(Self::new(embedder));
        }
        let store = Self::load(dir)?;
        if store.provider_tag != embedder.tag() || store.dimension != embedder.dimension() {
            return Err(KnowledgeError::EmbedderMismatch {
                store: store.provider_tag,
                store_dim: store.dimension,
                embedder: embedder.tag(),
                embedder_dim: embedder.dimension(),
            });
        }
        Ok(store)
    }

    /// Reads a persisted store and checks its invariants.
    pub fn load(dir: &Path) -> Result<Self, KnowledgeError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let corrupt = |path: &Path, message: String| KnowledgeError::Corrupt {
            path: path.display().to_string(),
            message,
        };
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| corrupt(&manifest_path, e.to_string()))?;
        let chunks_path = dir.join(CHUNKS_FILE);
        let mut chunks = Vec::new();
        if chunks_path.exists() {
            let f = File::open(&chunks_path).map_err(io_err(&chunks_path))?;
            for (n, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(io_err(&chunks_path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let c: KnowledgeChunk = serde_json::from_str(&line)
                    .map_err(|e| corrupt(&chunks_path, format!("line {}: {e}", n + 1)))?;
                match &c.embedding {
                    Some(e) if e.len() == manifest.dimension => {}
                    _ => {
                        return Err(corrupt(
                            &chunks_path,
                            format!("line {}: embedding missing or not of dimension {}", n + 1, manifest.dimension),
                        ))
                    }
                }
                chunks.push(c);
            }
        }
        Ok(Self {
            dimension: manifest.dimension,
            provider_tag: manifest.provider_tag,
            chunks,
            documents: manifest.documents,
        })
    }

    /// Writes the store, replacing chunk and manifest files atomically.
    pub fn persist(&self, dir: &Path) -> Result<(), KnowledgeError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut lines = String::new();
        for c in &self.chunks {
            lines.push_str(&serde_json::to_string(c).expect("chunk serializes"));
            lines.push('\n');
        }
        let manifest = Manifest {
            dimension: self.dimension,
            provider_tag: self.provider_tag.clone(),
            documents: self.documents.clone(),
        };
        let manifest = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        for (name, body) in [(CHUNKS_FILE, lines), (MANIFEST_FILE, manifest)] {
            let tmp = dir.join(format!(".{name}.tmp"));
            std::fs::write(&tmp, body).map_err(io_err(&tmp))?;
            let target = dir.join(name);
            std::fs::rename(&tmp, &target).map_err(io_err(&target))?;
        }
        Ok(())
    }
}

/// Exclusive writer role on a store directory, released on drop.
#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

impl StoreLock {
    pub fn acquire(dir: &Path) -> Result<Self, KnowledgeError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(KnowledgeError::Locked(dir.display().to_string()))
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IngestReport {
    pub added_chunks: usize,
    pub ingested: Vec<String>,
    pub unchanged: Vec<String>,
    /// Documents skipped because extraction failed, with the reason.
    pub failures: Vec<(String, String)>,
}

fn document_hash(doc: &DocumentFiles) -> std::io::Result<String> {
    let mut h = Sha256::new();
    for f in &doc.files {
        h.update(f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
        h.update([0]);
        h.update(std::fs::read(f)?);
        h.update([0]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Adds every new or changed document in `folder` to `store`.
///
/// Documents are keyed by the hash of their files: unchanged documents are
/// skipped, changed ones replace their previous chunks. A document whose
/// extraction fails is reported and left out; the store stays valid.
pub fn ingest(
    folder: &Path,
    extractor: &dyn DocumentExtractor,
    embedder: &dyn EmbeddingProvider,
    store: &mut VectorStore,
    cfg: ChunkConfig,
) -> Result<IngestReport, KnowledgeError> {
    let mut report = IngestReport::default();
    for doc in discover(folder).map_err(io_err(folder))? {
        let hash = match document_hash(&doc) {
            Ok(h) => h,
            Err(e) => {
                report.failures.push((doc.name.clone(), e.to_string()));
                continue;
            }
        };
        if store.documents.get(&doc.name) == Some(&hash) {
            report.unchanged.push(doc.name);
            continue;
        }
        let extracted = match extractor.extract(&doc) {
            Ok(x) => x,
            Err(e) => {
                report.failures.push((doc.name.clone(), e));
                continue;
            }
        };
        let mut new_chunks = Vec::new();
        for (page, kind, text) in &extracted.sections {
            for content in chunk_text(text, cfg) {
                new_chunks.push(KnowledgeChunk {
                    id: format!("{}-{:04}", &hash[..12], new_chunks.len()),
                    source_file: doc.name.clone(),
                    page: *page,
                    kind: *kind,
                    content,
                    embedding: None,
                });
            }
        }
        let texts: Vec<&str> = new_chunks.iter().map(|c| c.content.as_str()).collect();
        let vectors = embedder.embed(&texts);
        for (c, v) in new_chunks.iter_mut().zip(vectors) {
            c.embedding = Some(v);
        }
        store.chunks.retain(|c| c.source_file != doc.name);
        report.added_chunks += new_chunks.len();
        store.chunks.extend(new_chunks);
        store.documents.insert(doc.name.clone(), hash);
        report.ingested.push(doc.name);
    }
    Ok(report)
}

/// Opens the store in `store_dir`, ingests `folder` under the writer lock
/// and persists the result.
pub fn ingest_dir(
    folder: &Path,
    store_dir: &Path,
    extractor: &dyn DocumentExtractor,
    embedder: &dyn EmbeddingProvider,
    cfg: ChunkConfig,
) -> Result<IngestReport, KnowledgeError> {
    let _lock = StoreLock::acquire(store_dir)?;
    let mut store = VectorStore::open(store_dir, embedder)?;
    let report = ingest(folder, extractor, embedder, &mut store, cfg)?;
    if report.added_chunks > 0 || !report.ingested.is_empty() || !store_dir.join(MANIFEST_FILE).exists() {
        store.persist(store_dir)?;
    }
    Ok(report)
}

/// Solver-manual knowledge shared across tasks, plus the task's own
/// documents.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreSet {
    pub static_store: VectorStore,
    pub dynamic_store: VectorStore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub chunk: KnowledgeChunk,
    pub score: f64,
    pub store: StoreKind,
}

/// Top-`k` chunks by cosine similarity over the given stores, highest
/// first; equal scores are ordered by (source file, page, id).
pub fn query_stores(
    stores: &[(StoreKind, &VectorStore)],
    q: &str,
    k: usize,
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<Hit>, KnowledgeError> {
    if k == 0 {
        return Err(KnowledgeError::InvalidK);
    }
    for (_, s) in stores {
        if !s.is_empty() && (s.provider_tag != embedder.tag() || s.dimension != embedder.dimension()) {
            return Err(KnowledgeError::EmbedderMismatch {
                store: s.provider_tag.clone(),
                store_dim: s.dimension,
                embedder: embedder.tag(),
                embedder_dim: embedder.dimension(),
            });
        }
    }
    let qv = embedder.embed(&[q]).pop().unwrap_or_default();
    let mut hits: Vec<Hit> = stores
        .iter()
        .flat_map(|(kind, s)| s.chunks.iter().map(move |c| (*kind, c)))
        .map(|(store, c)| Hit {
            score: cosine(&qv, c.embedding.as_deref().unwrap_or_default()),
            chunk: c.clone(),
            store,
        })
        .collect();
    if hits.is_empty() {
        return Err(KnowledgeError::EmptyStore);
    }
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.chunk.source_file.cmp(&b.chunk.source_file))
            .then_with(|| a.chunk.page.cmp(&b.chunk.page))
            .then_with(|| a.chunk.id.cmp(&b.chunk.id))
    });
    hits.truncate(k);
    Ok(hits)
}

/// [`query_stores`] over both members of a store set.
pub fn query(stores: &StoreSet, q: &str, k: usize, embedder: &dyn EmbeddingProvider) -> Result<Vec<Hit>, KnowledgeError> {
    query_stores(
        &[(StoreKind::Static, &stores.static_store), (StoreKind::Dynamic, &stores.dynamic_store)],
        q,
        k,
        embedder,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    /// Provider explanation followed by a `References` section.
    pub markdown: String,
    pub hits: Vec<Hit>,
}

const ANSWER_INSTRUCTIONS: &str = "Answer the question using only the numbered context blocks below. \
Quote numeric values with their units exactly as written and say which block each value came from. \
If the context does not contain the answer, say so.";

/// Prompt sent to the chat provider for a retrieval answer.
pub fn answer_prompt(q: &str, hits: &[Hit]) -> String {
    let mut prompt = format!("{ANSWER_INSTRUCTIONS}\n\nQuestion: {q}\n\n");
    for (i, h) in hits.iter().enumerate() {
        prompt.push_str(&format!("{BLOCK_BEGIN} {} {}>>>\n{}\n{BLOCK_END}\n", i + 1, h.chunk.citation(), h.chunk.content));
    }
    prompt
}

/// `References` section: one line per file with the cited pages.
pub fn references(hits: &[Hit]) -> String {
    let mut files: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for h in hits {
        let pages = files.entry(&h.chunk.source_file).or_default();
        if let Some(p) = h.chunk.page {
            if !pages.contains(&p) {
                pages.push(p);
            }
        }
    }
    let mut out = String::from("## References\n");
    for (file, mut pages) in files {
        pages.sort_unstable();
        if pages.is_empty() {
            out.push_str(&format!("- {file}\n"));
        } else {
            let list: Vec<String> = pages.iter().map(u32::to_string).collect();
            out.push_str(&format!("- {file}: p. {}\n", list.join(", ")));
        }
    }
    out
}

/// Answers a question from retrieved chunks and lists the cited sources.
pub fn answer(
    stores: &[(StoreKind, &VectorStore)],
    q: &str,
    k: usize,
    embedder: &dyn EmbeddingProvider,
    provider: &dyn ChatProvider,
) -> Result<Answer, KnowledgeError> {
    let hits = query_stores(stores, q, k, embedder)?;
    let request = ChatRequest {
        purpose: Purpose::Answer,
        system: "You answer questions about engineering documents and cite your sources.".into(),
        messages: vec![Message::new(Role::User, answer_prompt(q, &hits))],
        tools: Vec::new(),
    };
    let reply = provider.complete(&request)?;
    let markdown = format!("{}\n\n{}", reply.content.trim_end(), references(&hits));
    Ok(Answer { markdown, hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::provider::{DecisionScript, ScriptedProvider};

    fn chunk(id: &str, file: &str, page: Option<u32>, content: &str) -> KnowledgeChunk {
        KnowledgeChunk {
            id: id.into(),
            source_file: file.into(),
            page,
            kind: ChunkKind::Text,
            content: content.into(),
            embedding: Some(HashEmbedder::default().embed_one(content)),
        }
    }

    fn store(chunks: Vec<KnowledgeChunk>) -> VectorStore {
        let mut s = VectorStore::new(&HashEmbedder::default());
        s.chunks = chunks;
        s
    }

    #[test]
    fn three_page_document_yields_pages_one_to_three() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("manual.pdf.pages.txt"),
            "Page one text.\u{c}Page two text.\u{c}Page three text.",
        )
        .unwrap();
        let e = HashEmbedder::default();
        let mut s = VectorStore::new(&e);
        let r = ingest(dir.path(), &SidecarExtractor, &e, &mut s, ChunkConfig::default()).unwrap();
        assert_eq!(r.added_chunks, 3);
        let pages: Vec<Option<u32>> = s.chunks.iter().map(|c| c.page).collect();
        assert_eq!(pages, [Some(1), Some(2), Some(3)]);
        let again = ingest(dir.path(), &SidecarExtractor, &e, &mut s, ChunkConfig::default()).unwrap();
        assert_eq!(again.added_chunks, 0);
        assert_eq!(again.unchanged, ["manual.pdf"]);
    }

    #[test]
    fn empty_folder_leaves_store_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let e = HashEmbedder::default();
        let mut s = VectorStore::new(&e);
        let before = s.clone();
        ingest(dir.path(), &SidecarExtractor, &e, &mut s, ChunkConfig::default()).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn persist_round_trip_and_lock() {
        let dir = tempfile::tempdir().unwrap();
        let s = store(vec![chunk("a", "f.pdf", Some(2), "primary sodium pump head 0.1 MPa")]);
        s.persist(dir.path()).unwrap();
        assert_eq!(VectorStore::load(dir.path()).unwrap(), s);
        let lock = StoreLock::acquire(dir.path()).unwrap();
        assert!(matches!(StoreLock::acquire(dir.path()), Err(KnowledgeError::Locked(_))));
        drop(lock);
        assert!(StoreLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn k_larger_than_store_returns_all_and_ties_are_ordered() {
        let s = store(vec![
            chunk("z", "b.pdf", Some(1), "same words"),
            chunk("y", "a.pdf", Some(2), "same words"),
            chunk("x", "a.pdf", Some(1), "same words"),
        ]);
        let hits = query_stores(&[(StoreKind::Dynamic, &s)], "same words", 10, &HashEmbedder::default()).unwrap();
        let ids: Vec<&str> = hits.iter().map(|h| h.chunk.id.as_str()).collect();
        assert_eq!(ids, ["x", "y", "z"]);
        assert!(hits.iter().all(|h| h.score == 1.0));
    }

    #[test]
    fn empty_union_is_an_error() {
        let s = store(vec![]);
        let e = HashEmbedder::default();
        assert!(matches!(
            query_stores(&[(StoreKind::Static, &s), (StoreKind::Dynamic, &s)], "q", 3, &e),
            Err(KnowledgeError::EmptyStore)
        ));
    }

    #[test]
    fn answer_cites_files_and_pages() {
        let s = store(vec![
            chunk("1", "a.pdf", Some(1), "inlet velocity 3.25 m/s"),
            chunk("2", "a.pdf", Some(4), "inlet temperature 628 K"),
            chunk("3", "b.pdf", Some(2), "outlet pressure 1e5 Pa"),
        ]);
        let provider = ScriptedProvider::new(DecisionScript::default());
        let a = answer(&[(StoreKind::Dynamic, &s)], "inlet velocity", 3, &HashEmbedder::default(), &provider).unwrap();
        assert!(a.markdown.starts_with("inlet velocity 3.25 m/s\n"));
        let refs: Vec<&str> = a.markdown.lines().filter(|l| l.starts_with("- ")).collect();
        assert_eq!(refs, ["- a.pdf: p. 1, 4", "- b.pdf: p. 2"]);
    }
}

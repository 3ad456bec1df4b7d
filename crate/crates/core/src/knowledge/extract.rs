use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::ChunkKind;

pub const PAGES_SUFFIX: &str = ".pages.txt";
pub const FIGURES_SUFFIX: &str = ".figures.txt";
pub const DESCRIPTION_SUFFIX: &str = ".description.txt";

/// A source document and the files that carry its content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentFiles {
    /// Identifier used in citations, e.g. `report.pdf`.
    pub name: String,
    pub files: Vec<PathBuf>,
}

/// Extracted text with 1-based page numbers where they apply.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extracted {
    pub sections: Vec<(Option<u32>, ChunkKind, String)>,
}

pub trait DocumentExtractor {
    fn extract(&self, doc: &DocumentFiles) -> Result<Extracted, String>;
}

/// Reads plain-text sidecars produced by an external converter:
///
/// * `doc.pdf.pages.txt`: page text, pages separated by form feeds (`\f`)
/// * `doc.pdf.figures.txt`: figure descriptions, same page convention
/// * `img.png.description.txt`: a description of an image
/// * any other `.txt` or `.md` file: text, form feeds separating pages
#[derive(Debug, Clone, Copy, Default)]
pub struct SidecarExtractor;

fn paged(text: &str, kind: ChunkKind, out: &mut Extracted) {
    for (i, page) in text.split('\u{c}').enumerate() {
        if !page.trim().is_empty() {
            out.sections.push((Some(i as u32 + 1), kind, page.to_string()));
        }
    }
}

impl DocumentExtractor for SidecarExtractor {
    fn extract(&self, doc: &DocumentFiles) -> Result<Extracted, String> {
        let mut out = Extracted::default();
        for f in &doc.files {
            let text = std::fs::read_to_string(f).map_err(|e| format!("{}: {e}", f.display()))?;
            let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.ends_with(PAGES_SUFFIX) {
                paged(&text, ChunkKind::Text, &mut out);
            } else if name.ends_with(FIGURES_SUFFIX) {
                paged(&text, ChunkKind::FigureDescription, &mut out);
            } else if name.ends_with(DESCRIPTION_SUFFIX) {
                if !text.trim().is_empty() {
                    out.sections.push((None, ChunkKind::ImageDescription, text));
                }
            } else if name.ends_with(".txt") || name.ends_with(".md") {
                paged(&text, ChunkKind::Text, &mut out);
            } else {
                return Err(format!("{name}: no text sidecar for this file"));
            }
        }
        out.sections.sort_by_key(|s| s.0.unwrap_or(u32::MAX));
        Ok(out)
    }
}

fn document_name(file_name: &str) -> String {
    for suffix in [PAGES_SUFFIX, FIGURES_SUFFIX, DESCRIPTION_SUFFIX] {
        if let Some(base) = file_name.strip_suffix(suffix) {
            return base.to_string();
        }
    }
    file_name.to_string()
}

/// Groups the regular files of a folder into documents, sorted by name.
/// Hidden files are ignored. A binary original next to its sidecars is
/// folded into the same document and not read.
pub fn discover(folder: &Path) -> std::io::Result<Vec<DocumentFiles>> {
    let mut docs: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for entry in std::fs::read_dir(folder)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        docs.entry(document_name(&name)).or_default().push(entry.path());
    }
    Ok(docs
        .into_iter()
        .map(|(name, mut files)| {
            files.sort();
            let has_sidecar = files.iter().any(|f| {
                let n = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                n != name
            });
            if has_sidecar {
                files.retain(|f| f.file_name().and_then(|n| n.to_str()) != Some(name.as_str()));
            }
            DocumentFiles { name, files }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecars_group_by_document() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("r.pdf"), b"%PDF").unwrap();
        std::fs::write(dir.path().join("r.pdf.pages.txt"), "one\u{c}two\u{c}\u{c}four").unwrap();
        std::fs::write(dir.path().join("r.pdf.figures.txt"), "fig on page one").unwrap();
        std::fs::write(dir.path().join("loop.png.description.txt"), "a loop").unwrap();
        std::fs::write(dir.path().join(".hidden"), "x").unwrap();
        let docs = discover(dir.path()).unwrap();
        let names: Vec<&str> = docs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["loop.png", "r.pdf"]);
        assert_eq!(docs[1].files.len(), 2);
        let ex = SidecarExtractor.extract(&docs[1]).unwrap();
        let pages: Vec<Option<u32>> = ex.sections.iter().map(|s| s.0).collect();
        assert_eq!(pages, [Some(1), Some(1), Some(2), Some(4)]);
        let img = SidecarExtractor.extract(&docs[0]).unwrap();
        assert_eq!(img.sections[0].1, ChunkKind::ImageDescription);
    }

    #[test]
    fn binary_without_sidecar_fails() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("scan.pdf"), b"%PDF").unwrap();
        let docs = discover(dir.path()).unwrap();
        assert!(SidecarExtractor.extract(&docs[0]).is_err());
    }
}

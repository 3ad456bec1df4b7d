/// Chunking parameters, in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    pub target: usize,
    pub overlap: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            target: 1000,
            overlap: 100,
        }
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte offset of the `n`-th char, or the string length.
fn byte_at(s: &str, n: usize) -> usize {
    s.char_indices().nth(n).map_or(s.len(), |(i, _)| i)
}

/// Splits an over-long paragraph into pieces of at most `target` chars,
/// breaking at the last whitespace when there is one.
fn split_long(par: &str, target: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = par;
    while char_len(rest) > target {
        let cut = byte_at(rest, target);
        let head = &rest[..cut];
        let at = head
            .rfind(char::is_whitespace)
            .filter(|&i| i > 0)
            .unwrap_or(cut);
        out.push(rest[..at].trim_end().to_string());
        rest = rest[at..].trim_start();
    }
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

/// Tail of `s` of at most `n` chars, starting at a word boundary when
/// possible.
fn tail(s: &str, n: usize) -> &str {
    let len = char_len(s);
    if len <= n {
        return s;
    }
    let start = byte_at(s, len - n);
    let t = &s[start..];
    match t.find(char::is_whitespace) {
        Some(i) if i + 1 < t.len() => t[i..].trim_start(),
        _ => t,
    }
}

/// Splits text into chunks of about `target` chars.
///
/// Paragraphs (separated by blank lines) are packed greedily; a paragraph
/// longer than the target is split at whitespace. Each chunk after the
/// first begins with up to `overlap` trailing chars of its predecessor.
/// Whitespace-only text gives no chunks.
pub fn chunk_text(text: &str, cfg: ChunkConfig) -> Vec<String> {
    let target = cfg.target.max(1);
    let mut pieces: Vec<String> = Vec::new();
    for par in text.split("\n\n").map(str::trim).filter(|p| !p.is_empty()) {
        pieces.extend(split_long(par, target));
    }
    let mut bodies: Vec<String> = Vec::new();
    let mut current = String::new();
    for p in pieces {
        if !current.is_empty() && char_len(&current) + 2 + char_len(&p) > target {
            bodies.push(std::mem::take(&mut current));
        }
        if !current.is_empty() {
            current.push_str("\n\n");
        }
        current.push_str(&p);
    }
    if !current.is_empty() {
        bodies.push(current);
    }
    let mut out = Vec::with_capacity(bodies.len());
    for (i, body) in bodies.iter().enumerate() {
        if i == 0 || cfg.overlap == 0 {
            out.push(body.clone());
        } else {
            out.push(format!("{} {}", tail(&bodies[i - 1], cfg.overlap), body));
        }
    }
    out
}

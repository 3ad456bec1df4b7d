/// Turns texts into fixed-length vectors.
pub trait EmbeddingProvider {
    /// Identifies the embedder and its parameters; stores built with
    /// different tags cannot be mixed.
    fn tag(&self) -> String;
    fn dimension(&self) -> usize;
    /// One vector per input text, in input order.
    fn embed(&self, texts: &[&str]) -> Vec<Vec<f64>>;
}

/// Offline embedder: signed hashed bag of lowercase alphanumeric tokens,
/// L2-normalized. Fully deterministic across runs and platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dimension: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dimension: 256 }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl HashEmbedder {
    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension.max(1)];
        let dim = v.len() as u64;
        for t in tokens(text) {
            let h = fnv1a(t.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % dim) as usize] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn tag(&self) -> String {
        format!("hash-bow-fnv1a-{}", self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Vec<Vec<f64>> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}

/// Cosine similarity, clamped to [-1, 1]; zero vectors score 0.
///
/// Computed as `a·b / sqrt(|a|²|b|²)`, which is exactly 1 for identical
/// vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64-bit test vectors
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn embedding_is_normalized_and_case_insensitive() {
        let e = HashEmbedder::default();
        let v = e.embed_one("Sodium flows UP the core");
        let n: f64 = v.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(v, e.embed_one("sodium, flows up; the CORE"));
        assert!(e.embed_one("").iter().all(|x| *x == 0.0));
    }

    #[test]
    fn identical_text_scores_exactly_one() {
        let e = HashEmbedder::default();
        let v = e.embed_one("the downcomer annulus feeds the lower plenum");
        assert_eq!(cosine(&v, &v), 1.0);
    }
}

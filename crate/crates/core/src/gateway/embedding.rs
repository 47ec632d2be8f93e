use super::{BackendError, Embedder};

/// Identifies the feature-hashing scheme below. Bump when it changes.
pub const HASH_EMBEDDING_VERSION: &str = "char3-fnv1a64-signed-l2/v1";

/// Deterministic embedding by feature hashing of character trigrams.
///
/// The text is lowercased and padded with one space on each side. Every
/// character trigram is hashed with 64-bit FNV-1a; the low bits pick a bucket
/// (`hash % dimension`) and the top bit picks the sign. The bucket vector is
/// L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashEmbedder { dimension }
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        let chars: Vec<char> = std::iter::once(' ')
            .chain(text.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once(' '))
            .collect();
        let mut buf = [0u8; 12];
        for window in chars.windows(3) {
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for c in window {
                for b in c.encode_utf8(&mut buf).bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
            let bucket = (h % self.dimension as u64) as usize;
            v[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        Ok(self.embed_text(text))
    }
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let e = HashEmbedder::new(64);
        for s in ["a", "hello world", "ünïcödé ✓", "x".repeat(500).as_str()] {
            let a = e.embed_text(s);
            assert_eq!(a.len(), 64);
            assert_eq!(a, e.embed_text(s));
            assert!((cosine(&a, &a) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn similar_texts_score_higher() {
        let e = HashEmbedder::new(256);
        let q = e.embed_text("window seat on long flights");
        let near = e.embed_text("prefers a window seat on flights");
        let far = e.embed_text("balance the chemical equation");
        assert!(cosine(&q, &near) > cosine(&q, &far));
    }

    #[test]
    fn zero_vector_cosine() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }
}

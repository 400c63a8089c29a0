//! Dense embeddings behind a pluggable provider, cosine similarity, and a
//! content-addressed embedding cache.
//!
//! The bundled [`HashedBagEmbedder`] is a deterministic offline provider
//! (hashed bag of tokens, 64 buckets, L2-normalized) so the full pipeline
//! runs and tests without a model or network.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lexical::tokenize;

/// A fixed-length dense vector. All vectors from one provider share the
/// provider's dimension and contain only finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Contract for anything that can turn texts into embeddings: an HTTP
/// service, a local model, or the offline stub. Implementations must be
/// deterministic (same text, same vector) and order-aligned.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Dimension the provider promises up front, when known. Providers
    /// that learn it from their first response return `None`.
    fn declared_dimension(&self) -> Option<usize> {
        None
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

/// Cosine similarity ⟨u,v⟩ / (‖u‖·‖v‖), clamped to [−1, 1] to absorb
/// floating-point drift.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    if u.dimension() != v.dimension() {
        return Err(Error::DimensionMismatch {
            expected: u.dimension(),
            got: v.dimension(),
        });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.values().iter().zip(v.values()) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    // √(nu·nv) rather than √nu·√nv: for u = v the square root of the
    // squared product is exact, so the identity cosine is exactly 1.
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

/// Affine map from cosine range [−1, 1] onto [0, 1]: (c + 1)/2.
/// Strictly order-preserving, so ranking by it equals ranking by cosine.
pub fn semantic_norm(c: f64) -> Result<f64> {
    if !c.is_finite() || !(-1.0..=1.0).contains(&c) {
        return Err(Error::OutOfRange {
            value: c,
            lo: -1.0,
            hi: 1.0,
        });
    }
    Ok((c + 1.0) / 2.0)
}

const STUB_DIMENSION: usize = 64;

/// Deterministic offline embedding provider: tokenize, hash each token
/// into one of 64 buckets, count, L2-normalize. Identical token multisets
/// map to identical vectors (cosine 1.0). Texts with no word tokens map
/// to a fixed unit basis vector so the provider never emits a zero vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashedBagEmbedder;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl HashedBagEmbedder {
    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut buckets = [0.0f64; STUB_DIMENSION];
        let tokens = tokenize(text);
        if tokens.is_empty() {
            buckets[0] = 1.0;
            return EmbeddingVector::new(buckets.to_vec());
        }
        for token in &tokens {
            let bucket = (fnv1a64(token.as_bytes()) % STUB_DIMENSION as u64) as usize;
            buckets[bucket] += 1.0;
        }
        let norm = buckets.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut buckets {
            *x /= norm;
        }
        EmbeddingVector::new(buckets.to_vec())
    }
}

impl EmbeddingProvider for HashedBagEmbedder {
    fn name(&self) -> &str {
        "hashed-bag-64"
    }

    fn declared_dimension(&self) -> Option<usize> {
        Some(STUB_DIMENSION)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Default)]
struct CacheInner {
    entries: HashMap<[u8; 32], EmbeddingVector>,
    /// First dimension observed from the provider; later vectors must match.
    dimension: Option<usize>,
}

/// Content-hash-keyed embedding cache, safe for concurrent use.
///
/// Keys are SHA-256 of the exact text bytes; hits return the stored
/// vector bit-identically and never alter stored values.
#[derive(Default)]
pub struct EmbedCache {
    inner: Mutex<CacheInner>,
}

impl EmbedCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Embed `texts`, serving repeats from the cache and fetching only the
    /// misses from `provider`. Results are order-aligned with the input
    /// and identical to calling the provider directly.
    pub fn embed_cached(
        &self,
        provider: &dyn EmbeddingProvider,
        texts: &[String],
    ) -> Result<Vec<EmbeddingVector>> {
        let keys: Vec<[u8; 32]> = texts
            .iter()
            .map(|t| Sha256::digest(t.as_bytes()).into())
            .collect();

        // Unique misses, in first-appearance order.
        let mut miss_texts: Vec<String> = Vec::new();
        let mut miss_keys: Vec<[u8; 32]> = Vec::new();
        {
            let inner = self.inner.lock().expect("cache lock");
            for (text, key) in texts.iter().zip(&keys) {
                if !inner.entries.contains_key(key) && !miss_keys.contains(key) {
                    miss_texts.push(text.clone());
                    miss_keys.push(*key);
                }
            }
        }

        // Provider call happens outside the lock; a concurrent duplicate
        // fetch stores the same deterministic value.
        if !miss_texts.is_empty() {
            let fresh = provider.embed_batch(&miss_texts)?;
            if fresh.len() != miss_texts.len() {
                return Err(Error::ProviderUnavailable {
                    message: format!(
                        "provider \"{}\" returned {} vectors for {} texts",
                        provider.name(),
                        fresh.len(),
                        miss_texts.len()
                    ),
                });
            }
            let mut inner = self.inner.lock().expect("cache lock");
            for (key, vector) in miss_keys.into_iter().zip(fresh) {
                let expected = provider
                    .declared_dimension()
                    .or(inner.dimension)
                    .unwrap_or(vector.dimension());
                if vector.dimension() != expected {
                    return Err(Error::DimensionMismatch {
                        expected,
                        got: vector.dimension(),
                    });
                }
                inner.dimension.get_or_insert(expected);
                inner.entries.entry(key).or_insert(vector);
            }
        }

        let inner = self.inner.lock().expect("cache lock");
        Ok(keys
            .iter()
            .map(|key| inner.entries[key].clone())
            .collect())
    }
}

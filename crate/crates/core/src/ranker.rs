//! Hybrid score fusion and top-k evidence selection.
//!
//! Each document gets a lexical score (max-normalized BM25), a semantic
//! score (cosine mapped onto [0, 1]), and a multiplicative region bonus
//! when the evidence text mentions the question's region:
//!
//! ```text
//! final = (w_bm25 · bm25_norm + w_sem · sem_norm) · (1 + region_bonus_weight · region_hit)
//! ```
//!
//! Ties are broken by ascending doc_id so ranking is fully deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentSet, Question, RegionGazetteer};
use crate::error::{Error, Result};
use crate::lexical::{bm25_scores, tokenize, Bm25Index};
use crate::semantic::{cosine, semantic_norm, EmbedCache, EmbeddingProvider};

/// Fusion weights and cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerConfig {
    pub w_bm25: f64,
    pub w_sem: f64,
    pub region_bonus_weight: f64,
    pub top_k: usize,
    /// Append the four choice texts to the query for both the lexical and
    /// the semantic channel. Off by default: questions are the query.
    pub append_choices_to_query: bool,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            w_bm25: 0.4,
            w_sem: 0.6,
            region_bonus_weight: 0.3,
            top_k: 5,
            append_choices_to_query: false,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w_bm25", self.w_bm25),
            ("w_sem", self.w_sem),
            ("region_bonus_weight", self.region_bonus_weight),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        if self.w_bm25 + self.w_sem <= 0.0 {
            return Err(Error::InvalidConfig(
                "w_bm25 + w_sem must be positive".into(),
            ));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Per-(question, document) score breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEvidence {
    pub doc_id: String,
    /// Document text, carried along for prompting and audit dumps.
    pub text: String,
    pub bm25_raw: f64,
    pub bm25_norm: f64,
    pub sem_norm: f64,
    pub region_hit: bool,
    pub final_score: f64,
}

/// The ranked evidence handed to the inference stage.
///
/// `ranked` holds at most `top_k` entries in descending `final_score`
/// order (ascending doc_id on ties). `parametric_fallback` is true iff
/// `ranked` is empty: no corpus, or nothing scored above zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub question_id: String,
    pub ranked: Vec<ScoredEvidence>,
    pub parametric_fallback: bool,
}

/// Divide every value by the map's maximum. An empty map stays empty; an
/// all-zero map stays all-zero.
pub fn normalize_bm25(raw: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let mut max = 0.0f64;
    for (doc_id, value) in raw {
        if !value.is_finite() || *value < 0.0 {
            return Err(Error::NegativeScore {
                doc_id: doc_id.clone(),
                value: *value,
            });
        }
        max = max.max(*value);
    }
    Ok(raw
        .iter()
        .map(|(doc_id, value)| {
            let norm = if max > 0.0 { value / max } else { 0.0 };
            (doc_id.clone(), norm)
        })
        .collect())
}

/// True iff some alias of `question_region` occurs in the tokenized
/// document text as a contiguous token run (case-folded, word-boundary
/// respecting). "US" never matches inside "USefulness".
pub fn region_bonus(
    question_region: &str,
    doc_text: &str,
    gazetteer: &RegionGazetteer,
) -> Result<bool> {
    let aliases = gazetteer
        .aliases(question_region)
        .ok_or_else(|| Error::UnknownRegion(question_region.to_string()))?;
    let doc_tokens = tokenize(doc_text);
    for alias in aliases {
        let alias_tokens = tokenize(alias);
        if alias_tokens.is_empty() || alias_tokens.len() > doc_tokens.len() {
            continue;
        }
        if doc_tokens
            .windows(alias_tokens.len())
            .any(|window| window == alias_tokens.as_slice())
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The fusion formula. With default weights the range is [0, 1.3].
pub fn fuse(bm25_norm: f64, sem_norm: f64, region_hit: bool, config: &RankerConfig) -> f64 {
    let combined = config.w_bm25 * bm25_norm + config.w_sem * sem_norm;
    let bonus = config.region_bonus_weight * f64::from(u8::from(region_hit));
    combined * (1.0 + bonus)
}

/// Everything needed to rank evidence for questions: the corpus, its
/// index, an embedding provider with cache, the gazetteer, and weights.
///
/// Ranking is pure given these immutable inputs, so one `Ranker` may be
/// shared across threads and questions ranked concurrently.
pub struct Ranker<'a> {
    docs: &'a DocumentSet,
    index: &'a Bm25Index,
    provider: &'a dyn EmbeddingProvider,
    cache: &'a EmbedCache,
    gazetteer: &'a RegionGazetteer,
    config: RankerConfig,
}

impl<'a> Ranker<'a> {
    pub fn new(
        docs: &'a DocumentSet,
        index: &'a Bm25Index,
        provider: &'a dyn EmbeddingProvider,
        cache: &'a EmbedCache,
        gazetteer: &'a RegionGazetteer,
        config: RankerConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            docs,
            index,
            provider,
            cache,
            gazetteer,
            config,
        })
    }

    pub fn config(&self) -> &RankerConfig {
        &self.config
    }

    fn query_text(&self, question: &Question) -> String {
        if self.config.append_choices_to_query {
            format!("{} {}", question.text, question.choices.join(" "))
        } else {
            question.text.clone()
        }
    }

    /// Score every document for `question`, in corpus order. Documents
    /// absent from the BM25 map score 0 on the lexical channel.
    pub fn score_all(&self, question: &Question) -> Result<Vec<ScoredEvidence>> {
        let query_text = self.query_text(question);
        let raw = bm25_scores(self.index, &tokenize(&query_text));
        let norm = normalize_bm25(&raw)?;

        let mut texts = Vec::with_capacity(self.docs.len() + 1);
        texts.push(query_text);
        texts.extend(self.docs.iter().map(|d| d.text.clone()));
        let vectors = self.cache.embed_cached(self.provider, &texts)?;
        let (question_vec, doc_vecs) = vectors.split_first().expect("query vector present");

        let mut scored = Vec::with_capacity(self.docs.len());
        for (doc, doc_vec) in self.docs.iter().zip(doc_vecs) {
            let bm25_raw = raw.get(&doc.doc_id).copied().unwrap_or(0.0);
            let bm25_norm = norm.get(&doc.doc_id).copied().unwrap_or(0.0);
            let sem_norm = semantic_norm(cosine(question_vec, doc_vec)?)?;
            let region_hit = region_bonus(&question.region, &doc.text, self.gazetteer)?;
            let final_score = fuse(bm25_norm, sem_norm, region_hit, &self.config);
            scored.push(ScoredEvidence {
                doc_id: doc.doc_id.clone(),
                text: doc.text.clone(),
                bm25_raw,
                bm25_norm,
                sem_norm,
                region_hit,
                final_score,
            });
        }
        Ok(scored)
    }

    /// Rank all documents and keep the best `top_k`. Falls back to the
    /// model's parametric knowledge (empty bundle) when the corpus is
    /// empty or nothing scores above zero.
    pub fn rank_top_k(&self, question: &Question) -> Result<EvidenceBundle> {
        let mut scored = self.score_all(question)?;
        if scored.is_empty() || scored.iter().all(|s| s.final_score == 0.0) {
            return Ok(EvidenceBundle {
                question_id: question.question_id.clone(),
                ranked: Vec::new(),
                parametric_fallback: true,
            });
        }
        scored.sort_by(|a, b| {
            b.final_score
                .total_cmp(&a.final_score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        scored.truncate(self.config.top_k);
        Ok(EvidenceBundle {
            question_id: question.question_id.clone(),
            ranked: scored,
            parametric_fallback: false,
        })
    }
}

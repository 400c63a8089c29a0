//! Word-boundary tokenization and BM25 scoring over an in-memory
//! inverted index.
//!
//! Tokenization follows Unicode default word-boundary segmentation with
//! case folding. Scripts written without spaces (e.g. Chinese) therefore
//! segment coarsely; the dense channel carries semantics there.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::DocumentSet;
use crate::error::{Error, Result};

/// Split on Unicode word boundaries, keep segments containing a letter or
/// digit, and case-fold each token. Order is preserved; empty input yields
/// an empty stream.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(|w| w.to_lowercase()).collect()
}

/// BM25 free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    /// Term-frequency saturation, k1 ≥ 0.
    pub k1: f64,
    /// Length normalization, 0 ≤ b ≤ 1.
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !self.k1.is_finite() || self.k1 < 0.0 {
            return Err(Error::InvalidConfig(format!("k1 must be ≥ 0, got {}", self.k1)));
        }
        if !self.b.is_finite() || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!(
                "b must be in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// Immutable inverted index over a document set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    /// term → (doc_id, term frequency), in document order.
    postings: BTreeMap<String, Vec<(String, u32)>>,
    /// doc_id → token count.
    doc_lengths: BTreeMap<String, usize>,
    avg_doc_length: f64,
    doc_count: usize,
    params: Bm25Params,
}

impl Bm25Index {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<usize> {
        self.doc_lengths.get(doc_id).copied()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    #[cfg(test)]
    pub(crate) fn postings(&self, term: &str) -> Option<&[(String, u32)]> {
        self.postings.get(term).map(Vec::as_slice)
    }
}

/// Build an inverted index over `docs`. An empty set yields an empty
/// index with `doc_count` 0.
pub fn build_index(docs: &DocumentSet, params: Bm25Params) -> Bm25Index {
    let mut postings: BTreeMap<String, Vec<(String, u32)>> = BTreeMap::new();
    let mut doc_lengths = BTreeMap::new();
    let mut total_len = 0usize;

    for doc in docs.iter() {
        let tokens = tokenize(&doc.text);
        total_len += tokens.len();
        doc_lengths.insert(doc.doc_id.clone(), tokens.len());

        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for token in tokens {
            *tf.entry(token).or_insert(0) += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push((doc.doc_id.clone(), count));
        }
    }

    let doc_count = docs.len();
    let avg_doc_length = if doc_count > 0 {
        total_len as f64 / doc_count as f64
    } else {
        0.0
    };

    Bm25Index {
        postings,
        doc_lengths,
        avg_doc_length,
        doc_count,
        params,
    }
}

/// BM25 scores for a tokenized query.
///
/// Per document: Σ over distinct query terms t of
/// `IDF(t) · tf·(k1+1) / (tf + k1·(1 − b + b·len/avgdl))` with
/// `IDF(t) = ln(1 + (N − df + 0.5)/(df + 0.5))`. Duplicate query terms
/// contribute once. Documents matching no term are omitted from the map.
pub fn bm25_scores(index: &Bm25Index, query: &[String]) -> BTreeMap<String, f64> {
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    let n = index.doc_count as f64;
    let Bm25Params { k1, b } = index.params;

    let mut seen = Vec::new();
    for term in query {
        if seen.iter().any(|s| s == term) {
            continue;
        }
        seen.push(term.clone());

        let Some(postings) = index.postings.get(term) else {
            continue;
        };
        let df = postings.len() as f64;
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        for (doc_id, tf) in postings {
            let len = index.doc_lengths[doc_id] as f64;
            let tf = f64::from(*tf);
            let norm = tf + k1 * (1.0 - b + b * len / index.avg_doc_length);
            *scores.entry(doc_id.clone()).or_insert(0.0) += idf * tf * (k1 + 1.0) / norm;
        }
    }
    scores
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct IndexSnapshot {
    version: u32,
    index: Bm25Index,
}

/// Persist the index as a versioned JSON snapshot.
pub fn save_index(path: impl AsRef<Path>, index: &Bm25Index) -> Result<()> {
    let path = path.as_ref();
    let snapshot = IndexSnapshot {
        version: SNAPSHOT_VERSION,
        index: index.clone(),
    };
    let json = serde_json::to_string(&snapshot).expect("index serializes");
    fs::write(path, json).map_err(|e| Error::from_io(path, e))
}

/// Reload a snapshot written by [`save_index`]. The reloaded index
/// compares equal to the one saved.
pub fn load_index(path: impl AsRef<Path>) -> Result<Bm25Index> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::from_io(path, e))?;
    let snapshot: IndexSnapshot = serde_json::from_str(&content).map_err(|e| {
        Error::MalformedRecord {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        }
    })?;
    if snapshot.version != SNAPSHOT_VERSION {
        return Err(Error::SnapshotVersion(snapshot.version));
    }
    Ok(snapshot.index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            text: text.into(),
            language: "en".into(),
            regions: vec![],
        }
    }

    #[test]
    fn tokenize_splits_on_word_boundaries_and_folds_case() {
        assert_eq!(tokenize("Eid al-Fitr sweets!"), ["eid", "al", "fitr", "sweets"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("ABC abc"), ["abc", "abc"]);
    }

    #[test]
    fn tokenize_keeps_digits_and_drops_punctuation_runs() {
        assert_eq!(tokenize("top 5 chunks…"), ["top", "5", "chunks"]);
        assert_eq!(tokenize("!!! ---"), Vec::<String>::new());
    }

    #[test]
    fn index_counts_terms_and_lengths() {
        let docs = DocumentSet::new(vec![doc("d1", "a b"), doc("d2", "b b")]);
        let index = build_index(&docs, Bm25Params::default());
        assert_eq!(index.doc_count(), 2);
        assert_eq!(index.avg_doc_length(), 2.0);
        assert_eq!(index.doc_length("d1"), Some(2));
        assert_eq!(index.doc_length("d2"), Some(2));
        assert_eq!(index.postings("a").unwrap(), [("d1".to_string(), 1)]);
        assert_eq!(
            index.postings("b").unwrap(),
            [("d1".to_string(), 1), ("d2".to_string(), 2)]
        );
    }

    #[test]
    fn empty_set_builds_empty_index() {
        let index = build_index(&DocumentSet::default(), Bm25Params::default());
        assert_eq!(index.doc_count(), 0);
        assert_eq!(index.vocabulary_size(), 0);
        assert!(bm25_scores(&index, &tokenize("anything")).is_empty());
    }

    #[test]
    fn single_doc_average_length_is_its_own_length() {
        let docs = DocumentSet::new(vec![doc("d1", "one two three")]);
        let index = build_index(&docs, Bm25Params::default());
        assert_eq!(index.avg_doc_length(), 3.0);
    }

    #[test]
    fn single_doc_single_term_score_matches_closed_form() {
        // N=1, df=1, tf=1, len=avgdl=1:
        //   idf = ln(1 + 0.5/1.5) = ln(4/3)
        //   tf part = 1·(k1+1) / (1 + k1·(1−b+b)) = 2.2/2.2 = 1
        let docs = DocumentSet::new(vec![doc("d1", "x")]);
        let index = build_index(&docs, Bm25Params { k1: 1.2, b: 0.75 });
        let scores = bm25_scores(&index, &tokenize("x"));
        let expected = (4.0f64 / 3.0).ln();
        assert!((scores["d1"] - expected).abs() < 1e-12);
        assert!((scores["d1"] - 0.287_682_072_451_780_9).abs() < 1e-12);
    }

    #[test]
    fn absent_query_term_yields_empty_map() {
        let docs = DocumentSet::new(vec![doc("d1", "a b")]);
        let index = build_index(&docs, Bm25Params::default());
        assert!(bm25_scores(&index, &tokenize("zzz")).is_empty());
        assert!(bm25_scores(&index, &[]).is_empty());
    }

    #[test]
    fn duplicate_query_terms_count_once() {
        let docs = DocumentSet::new(vec![doc("d1", "a b"), doc("d2", "b b")]);
        let index = build_index(&docs, Bm25Params::default());
        let once = bm25_scores(&index, &tokenize("b a"));
        let twice = bm25_scores(&index, &tokenize("b a b b"));
        assert_eq!(once, twice);
    }

    #[test]
    fn snapshot_round_trips_exactly() {
        let docs = DocumentSet::new(vec![doc("d1", "tea and scones"), doc("d2", "tea twice tea")]);
        let index = build_index(&docs, Bm25Params::default());
        let f = tempfile::NamedTempFile::new().unwrap();
        save_index(f.path(), &index).unwrap();
        let reloaded = load_index(f.path()).unwrap();
        assert_eq!(index, reloaded);
    }

    #[test]
    fn snapshot_version_is_checked() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(
            f.path(),
            r#"{"version":99,"index":{"postings":{},"doc_lengths":{},"avg_doc_length":0.0,"doc_count":0,"params":{"k1":1.2,"b":0.75}}}"#,
        )
        .unwrap();
        match load_index(f.path()) {
            Err(Error::SnapshotVersion(99)) => {}
            other => panic!("expected SnapshotVersion, got {other:?}"),
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(Bm25Params { k1: -0.1, b: 0.5 }.validate().is_err());
        assert!(Bm25Params { k1: 1.0, b: 1.5 }.validate().is_err());
        assert!(Bm25Params::default().validate().is_ok());
    }

    fn small_corpus() -> impl Strategy<Value = Vec<String>> {
        // Up to 6 docs over a 8-term alphabet, 0..12 tokens each.
        prop::collection::vec(
            prop::collection::vec(0usize..8, 0..12).prop_map(|ids| {
                ids.iter()
                    .map(|i| format!("t{i}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            }),
            1..6,
        )
    }

    proptest! {
        #[test]
        fn scores_are_nonnegative_finite_and_deterministic(
            texts in small_corpus(),
            query_ids in prop::collection::vec(0usize..8, 1..5),
        ) {
            let docs = DocumentSet::new(
                texts.iter().enumerate().map(|(i, t)| doc(&format!("d{i}"), if t.is_empty() { "pad" } else { t })).collect(),
            );
            let index = build_index(&docs, Bm25Params::default());
            let query: Vec<String> = query_ids.iter().map(|i| format!("t{i}")).collect();
            let a = bm25_scores(&index, &query);
            let b = bm25_scores(&index, &query);
            prop_assert_eq!(&a, &b);
            for score in a.values() {
                prop_assert!(score.is_finite());
                prop_assert!(*score >= 0.0);
            }
        }

        #[test]
        fn extra_term_occurrence_never_lowers_score_when_b_is_zero(
            texts in small_corpus(),
            target in 0usize..6,
            query_ids in prop::collection::vec(0usize..8, 1..5),
        ) {
            let target = target % texts.len();
            let term = format!("t{}", query_ids[0]);
            let query: Vec<String> = query_ids.iter().map(|i| format!("t{i}")).collect();
            let params = Bm25Params { k1: 1.2, b: 0.0 };

            let base_docs: Vec<_> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| doc(&format!("d{i}"), if t.is_empty() { "pad" } else { t }))
                .collect();
            let mut bumped_docs = base_docs.clone();
            bumped_docs[target].text = format!("{} {}", bumped_docs[target].text, term);

            let before = bm25_scores(&build_index(&DocumentSet::new(base_docs), params), &query);
            let after = bm25_scores(&build_index(&DocumentSet::new(bumped_docs), params), &query);
            let id = format!("d{target}");
            let s_before = before.get(&id).copied().unwrap_or(0.0);
            let s_after = after.get(&id).copied().unwrap_or(0.0);
            prop_assert!(s_after >= s_before - 1e-12);
        }
    }
}

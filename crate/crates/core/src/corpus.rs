//! Evidence documents, question sets, and the region-alias gazetteer.
//!
//! All three inputs are line-delimited JSON (one object per line, UTF-8).
//! Loading is order-preserving and side-effect free; every returned
//! structure is immutable after load and safe to share across threads.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evidence chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub language: String,
    /// Optional region tags, kept for corpus auditing only. Region
    /// relevance at ranking time is detected from the text itself.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<String>,
}

/// An ordered, id-unique collection of documents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentSet {
    docs: Vec<Document>,
}

impl DocumentSet {
    pub fn new(docs: Vec<Document>) -> Self {
        Self { docs }
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }
}

/// A multiple-choice question with exactly four ordered choices.
///
/// Choice index `i` corresponds to letter `'A' + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub question_id: String,
    pub text: String,
    pub choices: [String; 4],
    pub region: String,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_index: Option<usize>,
}

/// An ordered collection of questions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuestionSet {
    questions: Vec<Question>,
}

impl QuestionSet {
    pub fn new(questions: Vec<Question>) -> Self {
        Self { questions }
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Question> {
        self.questions.iter()
    }
}

/// Region code → alias surface forms (country names, demonyms, endonyms).
///
/// Aliases are case-folded at load time and deduplicated per region.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionGazetteer {
    entries: BTreeMap<String, Vec<String>>,
}

impl RegionGazetteer {
    /// Build from (region, aliases) pairs; folds case and drops duplicates.
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<S>)>,
        S: Into<String>,
    {
        let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (region, aliases) in entries {
            let slot = map.entry(region.into()).or_default();
            for alias in aliases {
                let folded = alias.into().to_lowercase();
                if !slot.contains(&folded) {
                    slot.push(folded);
                }
            }
        }
        Self { entries: map }
    }

    /// Case-folded aliases for a region, if the region is known.
    pub fn aliases(&self, region: &str) -> Option<&[String]> {
        self.entries.get(region).map(Vec::as_slice)
    }

    pub fn contains(&self, region: &str) -> bool {
        self.entries.contains_key(region)
    }

    pub fn regions(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// Raw line shapes. Unknown fields are tolerated so benchmark files with
// extra metadata load as-is; validation happens after parse.

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    text: String,
    language: String,
    #[serde(default)]
    regions: Vec<String>,
}

#[derive(Deserialize)]
struct RawQuestion {
    question_id: String,
    text: String,
    choices: Vec<String>,
    region: String,
    language: String,
    #[serde(default)]
    gold_index: Option<i64>,
}

#[derive(Deserialize)]
struct RawGazetteerEntry {
    region: String,
    aliases: Vec<String>,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content = fs::read_to_string(path).map_err(|e| Error::from_io(path, e))?;
    Ok(content.lines().map(str::to_owned).collect())
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::MalformedRecord {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Load a JSONL document file, preserving file order.
///
/// Every line must be a valid record; doc ids must be unique.
pub fn load_documents(path: impl AsRef<Path>) -> Result<DocumentSet> {
    let path = path.as_ref();
    let mut docs = Vec::new();
    let mut seen_at: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        let lineno = idx + 1;
        let raw: RawDocument =
            serde_json::from_str(line).map_err(|e| malformed(path, lineno, e.to_string()))?;
        if raw.doc_id.trim().is_empty() {
            return Err(malformed(path, lineno, "doc_id must be non-empty"));
        }
        if raw.text.trim().is_empty() {
            return Err(malformed(path, lineno, "text must be non-empty"));
        }
        if seen_at.insert(raw.doc_id.clone(), lineno).is_some() {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: lineno,
                doc_id: raw.doc_id,
            });
        }
        docs.push(Document {
            doc_id: raw.doc_id,
            text: raw.text,
            language: raw.language,
            regions: raw.regions,
        });
    }
    Ok(DocumentSet::new(docs))
}

/// Write a document set back to JSONL, one record per line.
///
/// Reloading the written file yields a set equal to the input.
pub fn write_documents(path: impl AsRef<Path>, docs: &DocumentSet) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for doc in docs.iter() {
        // Serialization of this plain struct cannot fail.
        out.push_str(&serde_json::to_string(doc).expect("document serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::from_io(path, e))
}

/// Load a JSONL question file, preserving file order.
pub fn load_questions(path: impl AsRef<Path>) -> Result<QuestionSet> {
    let path = path.as_ref();
    let mut questions = Vec::new();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        let lineno = idx + 1;
        let raw: RawQuestion =
            serde_json::from_str(line).map_err(|e| malformed(path, lineno, e.to_string()))?;
        if raw.question_id.trim().is_empty() {
            return Err(malformed(path, lineno, "question_id must be non-empty"));
        }
        if raw.choices.len() != 4 {
            return Err(Error::ChoiceCount {
                path: path.to_path_buf(),
                line: lineno,
                found: raw.choices.len(),
            });
        }
        if raw.choices.iter().any(|c| c.trim().is_empty()) {
            return Err(malformed(path, lineno, "choices must be non-empty"));
        }
        let gold_index = match raw.gold_index {
            None => None,
            Some(g @ 0..=3) => Some(g as usize),
            Some(g) => {
                return Err(Error::GoldIndexRange {
                    path: path.to_path_buf(),
                    line: lineno,
                    value: g,
                })
            }
        };
        let choices: [String; 4] = raw
            .choices
            .try_into()
            .expect("length checked above");
        questions.push(Question {
            question_id: raw.question_id,
            text: raw.text,
            choices,
            region: raw.region,
            language: raw.language,
            gold_index,
        });
    }
    Ok(QuestionSet::new(questions))
}

/// Load a JSONL gazetteer file.
///
/// Aliases are case-folded and deduplicated. A region appearing on more
/// than one line has its alias lists merged.
pub fn load_gazetteer(path: impl AsRef<Path>) -> Result<RegionGazetteer> {
    let path = path.as_ref();
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        let lineno = idx + 1;
        let raw: RawGazetteerEntry =
            serde_json::from_str(line).map_err(|e| malformed(path, lineno, e.to_string()))?;
        if raw.region.trim().is_empty() {
            return Err(malformed(path, lineno, "region must be non-empty"));
        }
        if raw.aliases.is_empty() {
            return Err(Error::EmptyAliasList {
                path: path.to_path_buf(),
                line: lineno,
                region: raw.region,
            });
        }
        if raw.aliases.iter().any(|a| a.trim().is_empty()) {
            return Err(malformed(path, lineno, "aliases must be non-empty"));
        }
        let slot = entries.entry(raw.region).or_default();
        for alias in raw.aliases {
            let folded = alias.to_lowercase();
            if !slot.contains(&folded) {
                slot.push(folded);
            }
        }
    }
    Ok(RegionGazetteer { entries })
}

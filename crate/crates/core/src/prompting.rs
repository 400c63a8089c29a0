//! Rendering of evidence bundles and questions into scoring prompts.
//!
//! Templates are plain text files with three named placeholders —
//! `{evidence}`, `{question}`, `{choices}` — each required exactly once.
//! The default template ships in-repo (`templates/default_prompt.txt`)
//! so runs are reproducible; wording is configurable.

use std::fs;
use std::path::Path;

use crate::corpus::Question;
use crate::error::{Error, Result};
use crate::ranker::EvidenceBundle;

/// Sentence substituted for the evidence section when retrieval returns
/// nothing and the model must answer from its own (parametric) knowledge.
pub const PARAMETRIC_FALLBACK_SENTENCE: &str =
    "No retrieved evidence is available. Answer from your own knowledge.";

const DEFAULT_TEMPLATE: &str = include_str!("../templates/default_prompt.txt");

/// Letter for a choice index: 0→A, 1→B, 2→C, 3→D.
pub fn choice_letter(index: usize) -> char {
    debug_assert!(index < 4);
    (b'A' + index as u8) as char
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Literal(String),
    Evidence,
    Question,
    Choices,
}

/// A parsed prompt template.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    segments: Vec<Segment>,
    /// Per-evidence-block character budget; `None` means unlimited and
    /// evidence is embedded verbatim.
    pub max_evidence_chars: Option<usize>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("bundled template is well-formed")
    }
}

impl PromptTemplate {
    /// Parse template text, requiring each placeholder exactly once.
    pub fn parse(text: &str) -> Result<Self> {
        const MARKERS: [(&str, Segment); 3] = [
            ("{evidence}", Segment::Evidence),
            ("{question}", Segment::Question),
            ("{choices}", Segment::Choices),
        ];
        let mut segments = Vec::new();
        let mut counts = [0usize; 3];
        let mut rest = text;
        loop {
            // Earliest placeholder in the remaining text.
            let next = MARKERS
                .iter()
                .enumerate()
                .filter_map(|(i, (marker, _))| rest.find(marker).map(|pos| (pos, i)))
                .min();
            match next {
                Some((pos, which)) => {
                    if pos > 0 {
                        segments.push(Segment::Literal(rest[..pos].to_string()));
                    }
                    segments.push(MARKERS[which].1.clone());
                    counts[which] += 1;
                    rest = &rest[pos + MARKERS[which].0.len()..];
                }
                None => {
                    if !rest.is_empty() {
                        segments.push(Segment::Literal(rest.to_string()));
                    }
                    break;
                }
            }
        }
        for ((marker, _), count) in MARKERS.iter().zip(counts) {
            if count != 1 {
                return Err(Error::MalformedTemplate(format!(
                    "placeholder {marker} must appear exactly once, found {count}"
                )));
            }
        }
        Ok(Self {
            segments,
            max_evidence_chars: None,
        })
    }

    /// Load a template from a UTF-8 text file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::from_io(path, e))?;
        Self::parse(&text)
    }

    pub fn with_max_evidence_chars(mut self, budget: Option<usize>) -> Self {
        self.max_evidence_chars = budget;
        self
    }
}

/// A rendered prompt, plus the structured pieces it was rendered from
/// (used by the offline stub scorer and by tests; the wire contract
/// ships only `text`).
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub text: String,
    pub question_id: String,
    pub parametric_fallback: bool,
    /// Number of evidence blocks embedded in `text`.
    pub evidence_count: usize,
    /// The block texts exactly as embedded (post-budget).
    pub evidence_texts: Vec<String>,
    pub choices: [String; 4],
}

/// Render `question` and its evidence bundle through `template`.
///
/// Layout of the default template, top to bottom: role preamble, numbered
/// evidence blocks in bundle order (or the parametric-knowledge sentence
/// when the bundle is empty), the question, the four lettered choices,
/// and the single-letter answer instruction.
pub fn build_prompt(
    question: &Question,
    bundle: &EvidenceBundle,
    template: &PromptTemplate,
) -> Result<Prompt> {
    if bundle.question_id != question.question_id {
        return Err(Error::IdMismatch {
            bundle: bundle.question_id.clone(),
            question: question.question_id.clone(),
        });
    }

    let evidence_texts: Vec<String> = bundle
        .ranked
        .iter()
        .map(|ev| match template.max_evidence_chars {
            Some(budget) => ev.text.chars().take(budget).collect(),
            None => ev.text.clone(),
        })
        .collect();

    let evidence_section = if evidence_texts.is_empty() {
        PARAMETRIC_FALLBACK_SENTENCE.to_string()
    } else {
        evidence_texts
            .iter()
            .enumerate()
            .map(|(i, text)| format!("Evidence {}: {}", i + 1, text))
            .collect::<Vec<_>>()
            .join("\n\n")
    };

    let choices_section = question
        .choices
        .iter()
        .enumerate()
        .map(|(i, choice)| format!("{}. {}", choice_letter(i), choice))
        .collect::<Vec<_>>()
        .join("\n");

    let mut text = String::new();
    for segment in &template.segments {
        match segment {
            Segment::Literal(s) => text.push_str(s),
            Segment::Evidence => text.push_str(&evidence_section),
            Segment::Question => text.push_str(&question.text),
            Segment::Choices => text.push_str(&choices_section),
        }
    }

    Ok(Prompt {
        text,
        question_id: question.question_id.clone(),
        parametric_fallback: evidence_texts.is_empty(),
        evidence_count: evidence_texts.len(),
        evidence_texts,
        choices: question.choices.clone(),
    })
}

//! One-hot export, exact-match accuracy, and per-language reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::QuestionSet;
use crate::error::{Error, Result};
use crate::inference::Prediction;

/// One exported prediction: exactly one cell is 1, the rest 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotRow {
    pub question_id: String,
    pub cells: [u8; 4],
}

impl OneHotRow {
    /// Index of the single 1 cell.
    pub fn chosen_index(&self) -> usize {
        self.cells.iter().position(|c| *c == 1).expect("one-hot row")
    }

    /// Reconstruct a prediction from an exported row. The logits are the
    /// one-hot cells themselves, which preserve the argmax.
    pub fn to_prediction(&self) -> Prediction {
        Prediction {
            question_id: self.question_id.clone(),
            chosen_index: self.chosen_index(),
            logits: self.cells.map(f64::from),
        }
    }
}

/// Encode the chosen index as a one-hot row.
pub fn to_one_hot(prediction: &Prediction) -> OneHotRow {
    let mut cells = [0u8; 4];
    cells[prediction.chosen_index] = 1;
    OneHotRow {
        question_id: prediction.question_id.clone(),
        cells,
    }
}

/// Counts and accuracy for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageStats {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Exact-match results, overall and per language.
///
/// `macro_avg` is the unweighted mean of per-language accuracies — an
/// artifact extension beyond plain overall accuracy, since cross-language
/// comparison is the evaluation axis of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub per_language: BTreeMap<String, LanguageStats>,
    pub macro_avg: f64,
}

/// Count predictions whose chosen index equals the gold index, overall
/// and per question language.
pub fn exact_match_report(predictions: &[Prediction], questions: &QuestionSet) -> Result<EvalReport> {
    let by_id: BTreeMap<&str, &crate::corpus::Question> = questions
        .iter()
        .map(|q| (q.question_id.as_str(), q))
        .collect();

    let mut total = 0usize;
    let mut correct = 0usize;
    let mut per_language: BTreeMap<String, (usize, usize)> = BTreeMap::new();

    for prediction in predictions {
        let question = by_id
            .get(prediction.question_id.as_str())
            .ok_or_else(|| Error::UnmatchedPrediction(prediction.question_id.clone()))?;
        let gold = question
            .gold_index
            .ok_or_else(|| Error::MissingGold(prediction.question_id.clone()))?;
        let hit = prediction.chosen_index == gold;
        total += 1;
        correct += usize::from(hit);
        let slot = per_language.entry(question.language.clone()).or_insert((0, 0));
        slot.0 += 1;
        slot.1 += usize::from(hit);
    }

    let per_language: BTreeMap<String, LanguageStats> = per_language
        .into_iter()
        .map(|(lang, (t, c))| {
            (
                lang,
                LanguageStats {
                    total: t,
                    correct: c,
                    accuracy: c as f64 / t as f64,
                },
            )
        })
        .collect();

    let accuracy = if total > 0 {
        correct as f64 / total as f64
    } else {
        0.0
    };
    let macro_avg = if per_language.is_empty() {
        0.0
    } else {
        per_language.values().map(|s| s.accuracy).sum::<f64>() / per_language.len() as f64
    };

    Ok(EvalReport {
        total,
        correct,
        accuracy,
        per_language,
        macro_avg,
    })
}

const CSV_HEADER: [&str; 5] = ["question_id", "A", "B", "C", "D"];

/// Write rows as CSV (`question_id,A,B,C,D`), UTF-8 with LF line endings,
/// in input order. Re-exporting the same rows is byte-identical.
pub fn export_predictions(path: impl AsRef<Path>, rows: &[OneHotRow]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    writer.write_record(CSV_HEADER).map_err(io_err)?;
    for row in rows {
        let mut record = vec![row.question_id.clone()];
        record.extend(row.cells.iter().map(u8::to_string));
        writer.write_record(&record).map_err(io_err)?;
    }
    let bytes = writer.into_inner().expect("in-memory csv writer");
    fs::write(path, bytes).map_err(|e| Error::from_io(path, e))
}

/// Read back a file written by [`export_predictions`], validating the
/// header and the one-hot property of every row.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<OneHotRow>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::from_io(path, e))?;
    let malformed = |line: usize, message: String| Error::MalformedRecord {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    {
        let headers = reader
            .headers()
            .map_err(|e| malformed(1, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(malformed(1, format!("unexpected header {headers:?}")));
        }
    }

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let lineno = idx + 2;
        let record = record.map_err(|e| malformed(lineno, e.to_string()))?;
        if record.len() != 5 {
            return Err(malformed(lineno, format!("expected 5 fields, found {}", record.len())));
        }
        let mut cells = [0u8; 4];
        for (i, cell) in record.iter().skip(1).enumerate() {
            cells[i] = match cell {
                "0" => 0,
                "1" => 1,
                other => return Err(malformed(lineno, format!("cell must be 0 or 1, found {other:?}"))),
            };
        }
        if cells.iter().map(|c| usize::from(*c)).sum::<usize>() != 1 {
            return Err(malformed(lineno, "row must contain exactly one 1".into()));
        }
        rows.push(OneHotRow {
            question_id: record[0].to_string(),
            cells,
        });
    }
    Ok(rows)
}

/// Serialize an [`EvalReport`] to pretty JSON on disk.
pub fn write_report(path: impl AsRef<Path>, report: &EvalReport) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(path, json).map_err(|e| Error::from_io(path, e))
}

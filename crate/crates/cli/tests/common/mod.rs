//! Shared helpers for driving the built binary against generated
//! fixture files.

use std::path::PathBuf;
use std::process::Command;

use serde_json::json;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub documents: PathBuf,
    pub questions: PathBuf,
    pub gazetteer: PathBuf,
}

impl Fixture {
    pub fn out_dir(&self) -> PathBuf {
        self.dir.path().join("out")
    }
}

/// Dataset where question i's correct choice text occurs verbatim in
/// exactly one region-tagged document and wrong choices share no tokens
/// with any document, so the stub pipeline answers every question
/// correctly.
pub fn planted_fixture(n: usize) -> Fixture {
    let languages = ["en", "am", "es"];
    let regions = ["GB", "ET", "ES"];
    let aliases = ["United Kingdom", "Ethiopia", "Spain"];

    let dir = tempfile::tempdir().unwrap();
    let mut documents = String::new();
    let mut questions = String::new();
    for i in 0..n {
        let slot = i % 3;
        let correct = format!("plok{i} trem{i}");
        documents.push_str(
            &json!({
                "doc_id": format!("doc{i:02}"),
                "text": format!("In the {} custom{i} involves {correct}.", aliases[slot]),
                "language": languages[slot],
                "regions": [regions[slot]],
            })
            .to_string(),
        );
        documents.push('\n');

        let gold = i % 4;
        let mut choices = vec![
            format!("fargle{i}a wumbo{i}a"),
            format!("fargle{i}b wumbo{i}b"),
            format!("fargle{i}c wumbo{i}c"),
            format!("fargle{i}d wumbo{i}d"),
        ];
        choices[gold] = correct;
        questions.push_str(
            &json!({
                "question_id": format!("q{i:02}"),
                "text": format!("What does custom{i} involve in the {}?", aliases[slot]),
                "choices": choices,
                "region": regions[slot],
                "language": languages[slot],
                "gold_index": gold,
            })
            .to_string(),
        );
        questions.push('\n');
    }

    let gazetteer = [
        json!({"region": "GB", "aliases": ["United Kingdom", "British"]}),
        json!({"region": "ET", "aliases": ["Ethiopia", "Ethiopian"]}),
        json!({"region": "ES", "aliases": ["Spain", "Spanish"]}),
    ]
    .map(|v| v.to_string())
    .join("\n")
        + "\n";

    let documents_path = dir.path().join("documents.jsonl");
    let questions_path = dir.path().join("questions.jsonl");
    let gazetteer_path = dir.path().join("gazetteer.jsonl");
    std::fs::write(&documents_path, documents).unwrap();
    std::fs::write(&questions_path, questions).unwrap();
    std::fs::write(&gazetteer_path, gazetteer).unwrap();

    Fixture {
        dir,
        documents: documents_path,
        questions: questions_path,
        gazetteer: gazetteer_path,
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_culturank")
}

/// Run the binary with `args`; returns (exit code, stdout, stderr).
pub fn run(args: &[&str]) -> (Option<i32>, String, String) {
    let output = Command::new(bin())
        .args(args)
        .env_remove("CULTURANK_CONFIG")
        .output()
        .expect("binary runs");
    (
        output.status.code(),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

/// Convenience for `<fixture flags> answer --stub-embeddings --stub-scorer`.
pub fn answer_args<'a>(fixture: &'a Fixture, out_dir: &'a str) -> Vec<String> {
    vec![
        "answer".into(),
        "--documents".into(),
        fixture.documents.display().to_string(),
        "--questions".into(),
        fixture.questions.display().to_string(),
        "--gazetteer".into(),
        fixture.gazetteer.display().to_string(),
        "--stub-embeddings".into(),
        "--stub-scorer".into(),
        "--output-dir".into(),
        out_dir.into(),
    ]
}

pub fn run_owned(args: &[String]) -> (Option<i32>, String, String) {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

//! Choice scoring and deterministic answer selection.
//!
//! A [`ChoiceScorer`] backend maps a batch of prompts to one logit per
//! letter A–D; the answer is the argmax, ties resolved toward A. Runs are
//! atomic: either every question gets a prediction or the run fails.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Question, QuestionSet};
use crate::error::{Error, Result};
use crate::lexical::tokenize;
use crate::prompting::{build_prompt, Prompt, PromptTemplate};
use crate::ranker::Ranker;

/// Per-letter logits for one question, indexed 0–3 ↔ A–D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceLogits {
    pub question_id: String,
    pub logits: [f64; 4],
}

/// A selected answer together with the logits it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub chosen_index: usize,
    pub logits: [f64; 4],
}

/// Backend contract: a batch of prompts in, an order-aligned batch of
/// letter logits out. Deterministic for a fixed backend configuration.
pub trait ChoiceScorer: Send + Sync {
    fn name(&self) -> &str;

    fn score_batch(&self, prompts: &[Prompt]) -> Result<Vec<ChoiceLogits>>;
}

/// Argmax over the four logits; ties resolve to the smallest index
/// (A before B before C before D).
pub fn select_answer(logits: &ChoiceLogits) -> Result<Prediction> {
    if logits.logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFiniteLogit {
            question_id: logits.question_id.clone(),
        });
    }
    let mut chosen = 0;
    for (i, value) in logits.logits.iter().enumerate().skip(1) {
        if *value > logits.logits[chosen] {
            chosen = i;
        }
    }
    Ok(Prediction {
        question_id: logits.question_id.clone(),
        chosen_index: chosen,
        logits: logits.logits,
    })
}

/// Offline deterministic scorer: the logit for letter L is the number of
/// tokens of choice L found in the concatenated evidence of the prompt.
/// With no evidence all logits are zero and the tie resolves to A.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapStubScorer;

impl ChoiceScorer for OverlapStubScorer {
    fn name(&self) -> &str {
        "token-overlap-stub"
    }

    fn score_batch(&self, prompts: &[Prompt]) -> Result<Vec<ChoiceLogits>> {
        Ok(prompts
            .iter()
            .map(|prompt| {
                let evidence_tokens: BTreeSet<String> = prompt
                    .evidence_texts
                    .iter()
                    .flat_map(|t| tokenize(t))
                    .collect();
                let mut logits = [0.0f64; 4];
                for (i, choice) in prompt.choices.iter().enumerate() {
                    logits[i] = tokenize(choice)
                        .iter()
                        .filter(|token| evidence_tokens.contains(*token))
                        .count() as f64;
                }
                ChoiceLogits {
                    question_id: prompt.question_id.clone(),
                    logits,
                }
            })
            .collect())
    }
}

/// Immutable per-run state shared by every batch: the ranker and the
/// prompt template.
pub struct PipelineContext<'a> {
    pub ranker: Ranker<'a>,
    pub template: &'a PromptTemplate,
}

impl PipelineContext<'_> {
    /// Rank evidence for one question and render its prompt.
    pub fn build_prompt_for(&self, question: &Question) -> Result<Prompt> {
        let bundle = self.ranker.rank_top_k(question)?;
        build_prompt(question, &bundle, self.template)
    }
}

fn process_batch(
    ctx: &PipelineContext<'_>,
    scorer: &dyn ChoiceScorer,
    batch: &[Question],
) -> Result<Vec<Prediction>> {
    let prompts = batch
        .iter()
        .map(|q| ctx.build_prompt_for(q))
        .collect::<Result<Vec<_>>>()?;

    let batch_ids = || batch.iter().map(|q| q.question_id.clone()).collect();
    let logits = scorer.score_batch(&prompts).map_err(|e| match e {
        Error::ScorerUnavailable { message, .. } => Error::ScorerUnavailable {
            message,
            question_ids: batch_ids(),
        },
        other => other,
    })?;
    if logits.len() != prompts.len() {
        return Err(Error::ScorerUnavailable {
            message: format!(
                "scorer \"{}\" returned {} logit rows for {} prompts",
                scorer.name(),
                logits.len(),
                prompts.len()
            ),
            question_ids: batch_ids(),
        });
    }
    for (prompt, row) in prompts.iter().zip(&logits) {
        if row.question_id != prompt.question_id {
            return Err(Error::ScorerUnavailable {
                message: format!(
                    "scorer \"{}\" misaligned output: expected {}, got {}",
                    scorer.name(),
                    prompt.question_id,
                    row.question_id
                ),
                question_ids: batch_ids(),
            });
        }
    }
    logits.iter().map(select_answer).collect()
}

/// Rank, prompt, and score `questions` in consecutive batches of
/// `batch_size` (the final batch may be smaller). Predictions come back
/// in input order and are identical for every batch size.
///
/// Up to `max_in_flight` batches are dispatched concurrently; results
/// are still assembled in batch order, so output never depends on
/// completion order. The run is atomic: any failing batch aborts the
/// whole run with that batch's question ids attached.
pub fn run_batched(
    questions: &QuestionSet,
    ctx: &PipelineContext<'_>,
    scorer: &dyn ChoiceScorer,
    batch_size: usize,
    max_in_flight: usize,
) -> Result<Vec<Prediction>> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be ≥ 1".into()));
    }
    if max_in_flight == 0 {
        return Err(Error::InvalidConfig("max_in_flight must be ≥ 1".into()));
    }

    let batches: Vec<&[Question]> = questions.questions().chunks(batch_size).collect();
    let mut predictions = Vec::with_capacity(questions.len());

    for wave in batches.chunks(max_in_flight) {
        if wave.len() == 1 {
            predictions.extend(process_batch(ctx, scorer, wave[0])?);
        } else {
            let results: Vec<Result<Vec<Prediction>>> = std::thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| scope.spawn(move || process_batch(ctx, scorer, batch)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("batch worker panicked"))
                    .collect()
            });
            for result in results {
                predictions.extend(result?);
            }
        }
    }
    Ok(predictions)
}

//! Region-aware hybrid retrieval and logit-based answer selection for
//! multiple-choice question answering.
//!
//! The pipeline ranks evidence documents for each question by fusing
//! max-normalized BM25 with normalized dense cosine similarity,
//!
//! ```text
//! final = (0.4 · bm25 + 0.6 · semantic) · (1 + 0.3 · region_hit)
//! ```
//!
//! applies a multiplicative bonus when the evidence text mentions the
//! question's region, renders the top-5 evidence into a structured
//! prompt, obtains per-letter logits from a pluggable scoring backend,
//! and selects the answer by argmax over A–D. Every step is
//! deterministic; offline stub backends make the whole pipeline runnable
//! without a model or network.

pub mod backend;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod inference;
pub mod lexical;
pub mod prompting;
pub mod ranker;
pub mod semantic;

pub use backend::{HttpChoiceScorer, HttpEmbedder, RetryPolicy};
pub use corpus::{
    load_documents, load_gazetteer, load_questions, write_documents, Document, DocumentSet,
    Question, QuestionSet, RegionGazetteer,
};
pub use error::{Error, Result};
pub use eval::{
    exact_match_report, export_predictions, load_predictions, to_one_hot, write_report,
    EvalReport, LanguageStats, OneHotRow,
};
pub use inference::{
    run_batched, select_answer, ChoiceLogits, ChoiceScorer, OverlapStubScorer, PipelineContext,
    Prediction,
};
pub use lexical::{bm25_scores, build_index, load_index, save_index, tokenize, Bm25Index, Bm25Params};
pub use prompting::{build_prompt, choice_letter, Prompt, PromptTemplate};
pub use ranker::{
    fuse, normalize_bm25, region_bonus, EvidenceBundle, Ranker, RankerConfig, ScoredEvidence,
};
pub use semantic::{cosine, semantic_norm, EmbedCache, EmbeddingProvider, EmbeddingVector, HashedBagEmbedder};

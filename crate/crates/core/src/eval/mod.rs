//! Measurement machinery: token-level precision/recall/F1, sentence-level
//! scores and rank correlation, inter-annotator agreement, corpus-level
//! hallucination rates and the similarity-alignment baseline.

mod agreement;
mod align;
mod corpus_level;
mod prf;
mod report;
mod sentence;

pub use agreement::{fleiss_kappa, RatingMatrix};
pub use align::{align_score, align_score_matrix, ExactMatch, SimilarityProvider};
pub use corpus_level::{
    corpus_counts, corpus_hallucination_pct, ingest_external_score, record_labels, LabelSource, PctCounts, ENTAILMENT,
};
pub use prf::{corpus_prf, token_prf, PrfCounts, TokenPrf};
pub use report::{evaluate, evaluate_records, join_predictions, EvalReport};
pub use sentence::{
    average_ranks, sentence_score_prob, sentence_score_ratio, sentence_score_ratio_from_probs, spearman,
    threshold_probs, DECISION_THRESHOLD,
};

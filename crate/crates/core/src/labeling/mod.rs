//! Pseudo labels from edit-distance backtraces, subword-to-word projection,
//! and assembly of training examples from synthetic data.

mod dataset;
mod edit;
mod example;
mod subword;

pub use dataset::{
    build_synthetic_dataset, synthesize_record, MlmLine, SynthesisSettings, SynthesisStats, SyntheticRecord,
    TrainingLine,
};
pub use edit::{assign_labels, edit_script, edit_script_by, EditOp, EditScript, OpCounts};
pub use example::{make_mlm_example, make_training_example, MlmExample, Segment, TrainConfig, TrainingExample};
pub use subword::{project_word_labels, project_word_probs, SubwordMap};

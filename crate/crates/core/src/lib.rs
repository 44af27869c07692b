//! Token-level hallucination toolkit: synthetic hallucinated training data
//! built from bitext, edit-distance pseudo labels, and evaluation of
//! token/sentence/corpus-level hallucination predictions.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod infill;
pub mod labeling;
pub mod noising;
pub mod pipeline;
pub mod remote;
pub mod rng;

pub use error::{Error, Result};

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Caption hallucination rates (CHAIR) and yes/no probing scores (POPE).

mod chair;
mod pope;
mod vocab;

use thiserror::Error;

pub use chair::{chair_scores, load_caption_records, CaptionRecord, CaptionResult, ChairReport};
pub use pope::{parse_pope_jsonl, pope_scores, PopeAverage, PopeMetrics, PopeRecord, PopeReport, PopeSplit};
pub use vocab::{ObjectVocabulary, DEFAULT_VOCAB_JSON};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("vocabulary: {0}")]
    Vocab(String),
    #[error("synonym {synonym:?} maps to both {first:?} and {second:?}")]
    Conflict {
        synonym: String,
        first: String,
        second: String,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("no {0} to score")]
    Empty(&'static str),
    #[error("image {image_id}: {object:?} is not in the vocabulary")]
    UnknownObject { image_id: String, object: String },
    #[error("no ground truth for image {0}")]
    MissingTruth(String),
    #[error("line {line}: cannot read {text:?} as yes/no")]
    Answer { line: usize, text: String },
    #[error("line {line}: unknown split {text:?}")]
    Split { line: usize, text: String },
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Labeled residual-stream samples and the code that produces them.

mod balance;
mod dump;
mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::FormatError;

pub use balance::{build_balanced_dataset, BalancedSplit, DEFAULT_SPLIT_RATIO};
pub use dump::{read_dump, write_dump, DUMP_MAGIC};
pub use synth::{synth_generate, SynthConfig, SynthOutput};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("dataset is empty")]
    Empty,
    #[error("sample {index} has {actual} dimensions, dataset declares {expected}")]
    Dimension {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("sample {index} has subword_count 0")]
    SubwordCount { index: usize },
    #[error("no samples survive balancing ({dropped_multi_token} multi-token records dropped, {images} images seen)")]
    EmptyAfterBalancing { dropped_multi_token: usize, images: usize },
    #[error("split ratio {0} outside (0, 1)")]
    SplitRatio(f64),
    #[error("invalid synthetic config: {0}")]
    Config(String),
}

/// Whether an object token was hallucinated or grounded in the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Hall,
    Faithful,
}

impl Label {
    /// Dump encoding: 1 for hallucinated, 0 for faithful.
    pub fn bit(self) -> u8 {
        match self {
            Label::Hall => 1,
            Label::Faithful => 0,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            1 => Some(Label::Hall),
            0 => Some(Label::Faithful),
            _ => None,
        }
    }
}

/// One residual vector captured at an object token.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    pub vector: Vec<f32>,
    pub label: Label,
    pub image_id: String,
    pub token_text: String,
    pub token_position: u32,
    /// Number of tokenizer pieces the object word was split into.
    pub subword_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
    Unsplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDataset {
    pub d: usize,
    pub layer: u32,
    pub model_id: String,
    pub samples: Vec<ResidualSample>,
    pub split: Split,
}

impl ResidualDataset {
    pub fn new(d: usize, layer: u32, model_id: impl Into<String>) -> Self {
        Self {
            d,
            layer,
            model_id: model_id.into(),
            samples: Vec::new(),
            split: Split::Unsplit,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn is_balanced(&self) -> bool {
        self.count(Label::Hall) == self.count(Label::Faithful)
    }

    pub fn with_label(&self, label: Label) -> impl Iterator<Item = &ResidualSample> {
        self.samples.iter().filter(move |s| s.label == label)
    }

    /// Checks the per-sample invariants (shared `d`, positive subword count).
    pub fn validate(&self) -> Result<(), StoreError> {
        for (index, s) in self.samples.iter().enumerate() {
            if s.vector.len() != self.d {
                return Err(StoreError::Dimension {
                    index,
                    expected: self.d,
                    actual: s.vector.len(),
                });
            }
            if s.subword_count == 0 {
                return Err(StoreError::SubwordCount { index });
            }
        }
        Ok(())
    }
}

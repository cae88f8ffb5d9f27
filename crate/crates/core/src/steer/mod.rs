// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment-wise steering of residual token streams.
//!
//! A [`TokenStream`] is split into system, prompt, visual and output spans.
//! Forward steering pushes visual tokens toward the faithful direction and
//! output tokens away from the hallucination direction; reverse steering
//! flips both signs. System and prompt tokens are never touched.

mod alpha;
mod apply;
mod plan;
mod simulate;
mod stream;

use thiserror::Error;

pub use alpha::{adaptive_alpha, l2_norm};
pub use apply::{apply_plan, apply_reverse_ssl, apply_ssl, steering_deltas, Polarity, Steered, TokenDelta};
pub use plan::{
    export_plan, import_plan, preset, Preset, SteeringMode, SteeringPlan, DEFAULT_EPS, PRESETS, STEER_MAGIC,
};
pub use simulate::{simulate_generation, simulate_unsteered, Dynamics};
pub use stream::{read_stream, write_stream, Segments, TokenStream, STREAM_MAGIC};

use crate::container::FormatError;

#[derive(Debug, Error)]
pub enum SteerError {
    #[error("{what}: expected length {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid steering plan: {0}")]
    Plan(String),
    #[error("invalid segments: {0}")]
    Segments(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

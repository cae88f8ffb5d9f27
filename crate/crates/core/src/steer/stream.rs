// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segmented token streams and the `TSTRM001` fixture format.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::SteerError;
use crate::container::{self, FormatError};

pub const STREAM_MAGIC: &[u8; 8] = b"TSTRM001";

/// Half-open `[start, end)` spans, serialized as two-element arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segments {
    pub system: [usize; 2],
    pub prompt: [usize; 2],
    pub visual: [usize; 2],
    pub output: [usize; 2],
}

impl Segments {
    /// Contiguous spans from per-segment lengths.
    pub fn from_lengths(system: usize, prompt: usize, visual: usize, output: usize) -> Self {
        let a = system;
        let b = a + prompt;
        let c = b + visual;
        Self {
            system: [0, a],
            prompt: [a, b],
            visual: [b, c],
            output: [c, c + output],
        }
    }

    pub fn visual_range(&self) -> Range<usize> {
        self.visual[0]..self.visual[1]
    }

    pub fn output_range(&self) -> Range<usize> {
        self.output[0]..self.output[1]
    }

    /// Total token count covered.
    pub fn len(&self) -> usize {
        self.output[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), SteerError> {
        let spans = [
            ("system", self.system),
            ("prompt", self.prompt),
            ("visual", self.visual),
            ("output", self.output),
        ];
        if self.system[0] != 0 {
            return Err(SteerError::Segments("system segment must start at 0".into()));
        }
        for (name, [a, b]) in spans {
            if a > b {
                return Err(SteerError::Segments(format!("{name} span [{a}, {b}) is reversed")));
            }
        }
        for pair in spans.windows(2) {
            let (prev, [_, end]) = pair[0];
            let (next, [start, _]) = pair[1];
            if end != start {
                return Err(SteerError::Segments(format!(
                    "{prev} ends at {end} but {next} starts at {start}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenStream {
    pub d: usize,
    pub tokens: Vec<Vec<f32>>,
    pub segments: Segments,
}

impl TokenStream {
    pub fn new(d: usize, tokens: Vec<Vec<f32>>, segments: Segments) -> Result<Self, SteerError> {
        let s = Self { d, tokens, segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SteerError> {
        self.segments.validate()?;
        if self.segments.len() != self.tokens.len() {
            return Err(SteerError::Segments(format!(
                "segments cover {} tokens but stream has {}",
                self.segments.len(),
                self.tokens.len()
            )));
        }
        for t in &self.tokens {
            if t.len() != self.d {
                return Err(SteerError::Shape {
                    what: "token",
                    expected: self.d,
                    actual: t.len(),
                });
            }
        }
        Ok(())
    }

    pub fn visual(&self) -> &[Vec<f32>] {
        &self.tokens[self.segments.visual_range()]
    }

    pub fn output(&self) -> &[Vec<f32>] {
        &self.tokens[self.segments.output_range()]
    }

    /// Appends a token to the end of the output segment.
    pub fn push_output(&mut self, token: Vec<f32>) -> Result<(), SteerError> {
        if token.len() != self.d {
            return Err(SteerError::Shape {
                what: "token",
                expected: self.d,
                actual: token.len(),
            });
        }
        self.tokens.push(token);
        self.segments.output[1] += 1;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct StreamHeader {
    d: usize,
    segments: Segments,
}

pub fn write_stream(stream: &TokenStream) -> Result<Vec<u8>, SteerError> {
    stream.validate()?;
    for (index, t) in stream.tokens.iter().enumerate() {
        if t.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite { what: "token", index }.into());
        }
    }
    let header = StreamHeader {
        d: stream.d,
        segments: stream.segments,
    };
    let payload = stream.tokens.iter().flat_map(|t| t.iter().copied());
    Ok(container::encode(STREAM_MAGIC, &header, payload)?)
}

pub fn read_stream(bytes: &[u8]) -> Result<TokenStream, SteerError> {
    let (h, payload): (StreamHeader, _) = container::decode(STREAM_MAGIC, bytes)?;
    h.segments.validate()?;
    let n = h.segments.len();
    let count = n
        .checked_mul(h.d)
        .ok_or_else(|| FormatError::Validation("token count overflows".into()))?;
    let flat = container::read_f32s(payload, count)?;
    container::check_finite("token", &flat)?;
    let tokens = if h.d == 0 {
        vec![Vec::new(); n]
    } else {
        flat.chunks_exact(h.d).map(<[f32]>::to_vec).collect()
    };
    TokenStream::new(h.d, tokens, h.segments)
}

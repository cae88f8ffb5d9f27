// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared layout of the binary containers.
//!
//! Every container is `magic (8 bytes) | u32-LE header length H | H bytes of
//! UTF-8 JSON | payload of 32-bit little-endian floats`. Each format fixes its
//! own magic, header schema and payload size.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

/// Errors raised while encoding or decoding a container.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("truncated {what}: need {expected} bytes, have {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("malformed header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("inconsistent container: {0}")]
    Consistency(String),
    #[error("invalid container: {0}")]
    Validation(String),
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
}

const PREFIX_LEN: usize = 12;

/// Serializes `header` as JSON and lays out the full container.
pub(crate) fn encode<H: Serialize>(
    magic: &[u8; 8],
    header: &H,
    payload: impl IntoIterator<Item = f32>,
) -> Result<Vec<u8>, FormatError> {
    let header = serde_json::to_vec(header)?;
    let header_len = u32::try_from(header.len()).map_err(|_| FormatError::Validation("header exceeds 4 GiB".into()))?;
    let mut out = Vec::with_capacity(PREFIX_LEN + header.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Checks the magic, parses the header and returns it with the raw payload.
pub(crate) fn decode<'a, H: DeserializeOwned>(magic: &[u8; 8], bytes: &'a [u8]) -> Result<(H, &'a [u8]), FormatError> {
    if bytes.len() < 8 {
        return Err(FormatError::Length {
            what: "magic",
            expected: 8,
            actual: bytes.len(),
        });
    }
    if &bytes[..8] != magic {
        return Err(FormatError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&bytes[..8]).into_owned(),
        });
    }
    if bytes.len() < PREFIX_LEN {
        return Err(FormatError::Length {
            what: "header length",
            expected: PREFIX_LEN,
            actual: bytes.len(),
        });
    }
    let header_len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    let header_end = PREFIX_LEN + header_len;
    if bytes.len() < header_end {
        return Err(FormatError::Length {
            what: "header",
            expected: header_end,
            actual: bytes.len(),
        });
    }
    let header = serde_json::from_slice(&bytes[PREFIX_LEN..header_end])?;
    Ok((header, &bytes[header_end..]))
}

/// Reads exactly `count` floats from the front of `payload`.
///
/// A short payload is a length error; trailing bytes are a consistency error
/// since the header then disagrees with what was written.
pub(crate) fn read_f32s(payload: &[u8], count: usize) -> Result<Vec<f32>, FormatError> {
    let expected = count
        .checked_mul(4)
        .ok_or_else(|| FormatError::Validation("payload size overflows".into()))?;
    if payload.len() < expected {
        return Err(FormatError::Length {
            what: "payload",
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(FormatError::Consistency(format!(
            "header declares {expected} payload bytes but {} follow",
            payload.len()
        )));
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub(crate) fn check_finite(what: &'static str, values: &[f32]) -> Result<(), FormatError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(FormatError::NonFinite { what, index }),
        None => Ok(()),
    }
}

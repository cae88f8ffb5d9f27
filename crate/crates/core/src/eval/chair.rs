// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EvalError, ObjectVocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionRecord {
    pub image_id: String,
    pub caption: String,
    pub ground_truth: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionResult {
    pub image_id: String,
    pub mentioned: BTreeSet<String>,
    pub hallucinated: BTreeSet<String>,
    pub words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChairReport {
    pub chair_s: f64,
    pub chair_i: f64,
    pub avg_len: f64,
    pub captions: usize,
    pub mentioned_total: usize,
    pub hallucinated_total: usize,
    /// No objects mentioned anywhere; `chair_i` is reported as 0.
    pub degenerate: bool,
    pub per_caption: Vec<CaptionResult>,
}

impl ChairReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,mentioned,hallucinated,words\n");
        for r in &self.per_caption {
            let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(";");
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.image_id,
                join(&r.mentioned),
                join(&r.hallucinated),
                r.words
            ));
        }
        out
    }
}

/// Distinct objects per caption count once toward both sides of CHAIR_I.
pub fn chair_scores(records: &[CaptionRecord], vocab: &ObjectVocabulary) -> Result<ChairReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty("captions"));
    }
    let mut per_caption = Vec::with_capacity(records.len());
    let (mut with_hall, mut mentioned_total, mut hallucinated_total, mut words_total) = (0usize, 0, 0, 0);
    for r in records {
        if let Some(object) = r.ground_truth.iter().find(|o| !vocab.contains(o)) {
            return Err(EvalError::UnknownObject {
                image_id: r.image_id.clone(),
                object: object.clone(),
            });
        }
        let mentioned = vocab.extract_objects(&r.caption);
        let hallucinated: BTreeSet<String> = mentioned.difference(&r.ground_truth).cloned().collect();
        let words = r.caption.split_whitespace().count();
        with_hall += usize::from(!hallucinated.is_empty());
        mentioned_total += mentioned.len();
        hallucinated_total += hallucinated.len();
        words_total += words;
        per_caption.push(CaptionResult {
            image_id: r.image_id.clone(),
            mentioned,
            hallucinated,
            words,
        });
    }
    let n = records.len() as f64;
    let degenerate = mentioned_total == 0;
    Ok(ChairReport {
        chair_s: with_hall as f64 / n,
        chair_i: if degenerate {
            0.0
        } else {
            hallucinated_total as f64 / mentioned_total as f64
        },
        avg_len: words_total as f64 / n,
        captions: records.len(),
        mentioned_total,
        hallucinated_total,
        degenerate,
        per_caption,
    })
}

#[derive(Deserialize)]
struct CaptionLine {
    image_id: String,
    caption: String,
}

/// Joins JSON-lines captions with a `{image_id: [objects]}` truth map.
/// Truth objects may be given by any synonym and are canonicalized.
pub fn load_caption_records(
    captions_jsonl: &str,
    truth_json: &str,
    vocab: &ObjectVocabulary,
) -> Result<Vec<CaptionRecord>, EvalError> {
    let truth: BTreeMap<String, Vec<String>> = serde_json::from_str(truth_json)?;
    let mut out = Vec::new();
    for (i, line) in captions_jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: CaptionLine = serde_json::from_str(line).map_err(|source| EvalError::Line { line: i + 1, source })?;
        let objects = truth
            .get(&c.image_id)
            .ok_or_else(|| EvalError::MissingTruth(c.image_id.clone()))?;
        let ground_truth = objects
            .iter()
            .map(|o| {
                vocab
                    .canonicalize(o)
                    .map(str::to_string)
                    .ok_or_else(|| EvalError::UnknownObject {
                        image_id: c.image_id.clone(),
                        object: o.clone(),
                    })
            })
            .collect::<Result<_, _>>()?;
        out.push(CaptionRecord {
            image_id: c.image_id,
            caption: c.caption,
            ground_truth,
        });
    }
    Ok(out)
}

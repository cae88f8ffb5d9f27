// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopeSplit {
    Random,
    Popular,
    Adversarial,
}

impl PopeSplit {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Some(Self::Random),
            "popular" => Some(Self::Popular),
            "adversarial" => Some(Self::Adversarial),
            _ => None,
        }
    }
}

/// `label` and `answer` are true for "yes".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopeRecord {
    pub image_id: String,
    pub object: String,
    pub split: PopeSplit,
    pub label: bool,
    pub answer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopeMetrics {
    pub n: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No "yes" answers; precision reported as 0.
    pub precision_undefined: bool,
    /// No "yes" labels; recall reported as 0.
    pub recall_undefined: bool,
}

impl PopeMetrics {
    fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let n = tp + fp + tn + fn_;
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            n,
            tp,
            fp,
            tn,
            fn_,
            accuracy: ratio(tp + tn, n),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            // same value as 2PR/(P+R), with a single rounding
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            precision_undefined: tp + fp == 0,
            recall_undefined: tp + fn_ == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopeAverage {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopeReport {
    pub splits: BTreeMap<PopeSplit, PopeMetrics>,
    /// Unweighted mean over the splits present.
    pub average: PopeAverage,
}

impl PopeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,n,accuracy,precision,recall,f1\n");
        for (split, m) in &self.splits {
            let name = serde_json::to_value(split).expect("enum serializes");
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                name.as_str().unwrap_or_default(),
                m.n,
                m.accuracy,
                m.precision,
                m.recall,
                m.f1
            ));
        }
        let a = &self.average;
        out.push_str(&format!(
            "average,,{},{},{},{}\n",
            a.accuracy, a.precision, a.recall, a.f1
        ));
        out
    }
}

pub fn pope_scores(records: &[PopeRecord]) -> Result<PopeReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty("POPE answers"));
    }
    let mut counts: BTreeMap<PopeSplit, [usize; 4]> = BTreeMap::new();
    for r in records {
        let c = counts.entry(r.split).or_default();
        let slot = match (r.label, r.answer) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        c[slot] += 1;
    }
    let splits: BTreeMap<PopeSplit, PopeMetrics> = counts
        .into_iter()
        .map(|(s, [tp, fp, tn, fn_])| (s, PopeMetrics::from_counts(tp, fp, tn, fn_)))
        .collect();
    let k = splits.len() as f64;
    let mean = |f: fn(&PopeMetrics) -> f64| splits.values().map(f).sum::<f64>() / k;
    let average = PopeAverage {
        accuracy: mean(|m| m.accuracy),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    };
    Ok(PopeReport { splits, average })
}

#[derive(Deserialize)]
struct PopeLine {
    image_id: serde_json::Value,
    object: String,
    split: String,
    label: String,
    answer: String,
}

/// Reads the leading yes/no word of a free-text answer.
fn yes_no(text: &str) -> Option<bool> {
    let first: String = text
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    match first.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

pub fn parse_pope_jsonl(text: &str) -> Result<Vec<PopeRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let p: PopeLine = serde_json::from_str(raw).map_err(|source| EvalError::Line { line, source })?;
        let split = PopeSplit::parse(&p.split).ok_or_else(|| EvalError::Split {
            line,
            text: p.split.clone(),
        })?;
        let label = yes_no(&p.label).ok_or_else(|| EvalError::Answer {
            line,
            text: p.label.clone(),
        })?;
        let answer = yes_no(&p.answer).ok_or_else(|| EvalError::Answer {
            line,
            text: p.answer.clone(),
        })?;
        let image_id = match p.image_id {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        out.push(PopeRecord {
            image_id,
            object: p.object,
            split,
            label,
            answer,
        });
    }
    Ok(out)
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Welch's unequal-variance t-test and Cohen's d.

use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use super::{check_finite, mean, sample_var, StatsError};

/// Degenerate outcomes of the t-test when both groups have zero spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degeneracy {
    None,
    /// Constant groups with equal means: `t = 0`, `p = 1`.
    IdenticalConstant,
    /// Constant groups with different means: `t = +-inf`, `p = 0`.
    InfiniteT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t_statistic: f64,
    pub p_value: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub degeneracy: Degeneracy,
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    for (what, xs) in [("group a", a), ("group b", b)] {
        if xs.len() < 2 {
            return Err(StatsError::TooFew {
                what,
                need: 2,
                got: xs.len(),
            });
        }
        check_finite(xs)?;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (sample_var(a) / na, sample_var(b) / nb);
    let se2 = sa + sb;
    let diff = ma - mb;

    let (t, p, df, degeneracy) = if se2 == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0, na + nb - 2.0, Degeneracy::IdenticalConstant)
        } else {
            (f64::INFINITY.copysign(diff), 0.0, na + nb - 2.0, Degeneracy::InfiniteT)
        }
    } else {
        let t = diff / se2.sqrt();
        let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
        (t, student_t_two_sided(t, df), df, Degeneracy::None)
    };
    Ok(WelchResult {
        t_statistic: t,
        p_value: p,
        df,
        n_a: a.len(),
        n_b: b.len(),
        degeneracy,
    })
}

/// Standardized mean difference with the pooled (n - 1) standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    for (what, xs) in [("group a", a), ("group b", b)] {
        if xs.len() < 2 {
            return Err(StatsError::TooFew {
                what,
                need: 2,
                got: xs.len(),
            });
        }
        check_finite(xs)?;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * sample_var(a) + (nb - 1.0) * sample_var(b)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(StatsError::ZeroSpread);
    }
    Ok((mean(a) - mean(b)) / pooled)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: f64,
    /// `None` when the pooled spread is zero.
    pub cohens_d: Option<f64>,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub degeneracy: Degeneracy,
}

/// Welch test plus effect size in one record.
pub fn two_sample(a: &[f64], b: &[f64]) -> Result<TwoSampleResult, StatsError> {
    let w = welch_t_test(a, b)?;
    let d = match cohens_d(a, b) {
        Ok(d) => Some(d),
        Err(StatsError::ZeroSpread) => None,
        Err(e) => return Err(e),
    };
    Ok(TwoSampleResult {
        t_statistic: w.t_statistic,
        p_value: w.p_value,
        df: w.df,
        cohens_d: d,
        n_a: w.n_a,
        n_b: w.n_b,
        mean_a: mean(a),
        mean_b: mean(b),
        degeneracy: w.degeneracy,
    })
}

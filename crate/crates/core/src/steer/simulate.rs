// SPDX-License-Identifier: MIT OR Apache-2.0

//! Toy autoregression: each step steers the stream, averages it, and maps the
//! average through a fixed linear map to produce the next output token.

use super::{apply_plan, SteerError, SteeringPlan, TokenStream};

/// Row-major `d x d` linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub d: usize,
    pub matrix: Vec<f64>,
}

impl Dynamics {
    pub fn new(d: usize, matrix: Vec<f64>) -> Result<Self, SteerError> {
        if matrix.len() != d * d {
            return Err(SteerError::Shape {
                what: "dynamics matrix",
                expected: d * d,
                actual: matrix.len(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(SteerError::NonFinite("dynamics matrix"));
        }
        Ok(Self { d, matrix })
    }

    pub fn identity(d: usize) -> Self {
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            matrix[i * d + i] = 1.0;
        }
        Self { d, matrix }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.d)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn mean_token(tokens: &[Vec<f32>], d: usize) -> Vec<f64> {
    let mut acc = vec![0.0; d];
    for t in tokens {
        for (a, &v) in acc.iter_mut().zip(t) {
            *a += f64::from(v);
        }
    }
    let n = tokens.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

fn run(
    stream: &TokenStream,
    steps: usize,
    dynamics: &Dynamics,
    mut steer: impl FnMut(&TokenStream) -> Result<TokenStream, SteerError>,
) -> Result<TokenStream, SteerError> {
    stream.validate()?;
    if dynamics.d != stream.d {
        return Err(SteerError::Shape {
            what: "dynamics",
            expected: stream.d,
            actual: dynamics.d,
        });
    }
    let mut base = stream.clone();
    for _ in 0..steps {
        let steered = steer(&base)?;
        let next = dynamics.apply(&mean_token(&steered.tokens, base.d));
        base.push_output(next.into_iter().map(|v| v as f32).collect())?;
    }
    Ok(base)
}

/// Appends `steps` generated tokens to the output segment. Steering is
/// re-applied to the visual and every current output token on each step;
/// the returned stream holds the unsteered states, as a cache would.
pub fn simulate_generation(
    stream: &TokenStream,
    plan: &SteeringPlan,
    steps: usize,
    dynamics: &Dynamics,
) -> Result<TokenStream, SteerError> {
    run(stream, steps, dynamics, |s| Ok(apply_plan(s, plan)?.stream))
}

pub fn simulate_unsteered(stream: &TokenStream, steps: usize, dynamics: &Dynamics) -> Result<TokenStream, SteerError> {
    run(stream, steps, dynamics, |s| Ok(s.clone()))
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{adaptive_alpha, SteerError, SteeringMode, SteeringPlan, TokenStream};

/// Forward steering suppresses hallucination; reverse amplifies it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Forward,
    Reverse,
}

impl Polarity {
    fn sign(self) -> f64 {
        match self {
            Self::Forward => 1.0,
            Self::Reverse => -1.0,
        }
    }
}

/// Update for one token. The delta is kept in f64 so the forward and
/// reverse updates are exact negatives of each other before rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDelta {
    pub index: usize,
    pub alpha: f64,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Steered {
    pub stream: TokenStream,
    /// Set when both the visual and output segments are empty.
    pub nothing_to_steer: bool,
}

fn strength(plan: &SteeringPlan, x: &[f32], u: &[f32]) -> Result<f64, SteerError> {
    match plan.mode {
        SteeringMode::FixedAlpha => Ok(plan.fixed_alpha),
        SteeringMode::Ssl | SteeringMode::ReverseSsl => adaptive_alpha(x, u, plan.gamma, plan.eps),
    }
}

/// Visual tokens move along `+d_faithful`, output tokens along `-d_hall`;
/// reverse polarity flips both. Every strength is computed from the
/// unmodified token, so order of processing does not matter.
pub fn steering_deltas(
    stream: &TokenStream,
    plan: &SteeringPlan,
    polarity: Polarity,
) -> Result<Vec<TokenDelta>, SteerError> {
    plan.validate()?;
    stream.validate()?;
    if plan.d() != stream.d {
        return Err(SteerError::Shape {
            what: "steering direction",
            expected: stream.d,
            actual: plan.d(),
        });
    }
    let sign = polarity.sign();
    let targets = stream
        .segments
        .visual_range()
        .map(|i| (i, &plan.d_faithful, sign))
        .chain(stream.segments.output_range().map(|i| (i, &plan.d_hall, -sign)));
    targets
        .map(|(index, u, s)| {
            let x = &stream.tokens[index];
            let alpha = strength(plan, x, u)?;
            let delta = u.iter().map(|&ui| s * alpha * f64::from(ui)).collect();
            Ok(TokenDelta { index, alpha, delta })
        })
        .collect()
}

fn steer(stream: &TokenStream, plan: &SteeringPlan, polarity: Polarity) -> Result<Steered, SteerError> {
    let deltas = steering_deltas(stream, plan, polarity)?;
    let mut out = stream.clone();
    for TokenDelta { index, delta, .. } in &deltas {
        for (x, dv) in out.tokens[*index].iter_mut().zip(delta) {
            *x = (f64::from(*x) + dv) as f32;
        }
    }
    Ok(Steered {
        stream: out,
        nothing_to_steer: deltas.is_empty(),
    })
}

/// Forward steering regardless of `plan.mode`; the mode only picks the strength.
pub fn apply_ssl(stream: &TokenStream, plan: &SteeringPlan) -> Result<Steered, SteerError> {
    steer(stream, plan, Polarity::Forward)
}

pub fn apply_reverse_ssl(stream: &TokenStream, plan: &SteeringPlan) -> Result<Steered, SteerError> {
    steer(stream, plan, Polarity::Reverse)
}

/// Steers with the polarity implied by the plan's mode.
pub fn apply_plan(stream: &TokenStream, plan: &SteeringPlan) -> Result<Steered, SteerError> {
    match plan.mode {
        SteeringMode::ReverseSsl => apply_reverse_ssl(stream, plan),
        SteeringMode::Ssl | SteeringMode::FixedAlpha => apply_ssl(stream, plan),
    }
}

#[cfg(test)]
mod tests {
    use super::super::plan::tests::random_plan;
    use super::super::stream::tests::random_stream;
    use super::super::{l2_norm, Segments};
    use super::*;
    use proptest::prelude::*;

    fn one_token(segment: usize, x: Vec<f32>) -> TokenStream {
        let mut lens = [0; 4];
        lens[segment] = 1;
        let d = x.len();
        TokenStream::new(d, vec![x], Segments::from_lengths(lens[0], lens[1], lens[2], lens[3])).unwrap()
    }

    #[test]
    fn orthogonal_visual_push_follows_pythagoras() {
        let s = one_token(2, vec![1.0, 0.0]);
        let mut plan = SteeringPlan::new(vec![1.0, 0.0], vec![0.0, 1.0], 0.5, 0).unwrap();
        plan.eps = 1e-12;
        let out = apply_ssl(&s, &plan).unwrap().stream;
        let n = l2_norm(&out.tokens[0]);
        assert!((n - 1.25f64.sqrt()).abs() < 1e-6, "{n}");
    }

    #[test]
    fn output_token_along_hall_direction_is_cancelled() {
        let c = 3.7f32;
        let u = vec![0.6f32, 0.0, -0.8];
        let s = one_token(3, u.iter().map(|v| c * v).collect());
        let mut plan = SteeringPlan::new(u.clone(), vec![1.0, 0.0, 0.0], 1.0, 0).unwrap();
        plan.eps = 1e-12;
        let out = apply_ssl(&s, &plan).unwrap().stream;
        for v in &out.tokens[0] {
            assert!(v.abs() <= 1e-6, "{v}");
        }
    }

    #[test]
    fn reverse_shrinks_visual_token_parallel_to_faithful() {
        let c = 2.0f32;
        let s = one_token(2, vec![0.0, c]);
        let gamma = 0.25;
        let mut plan = SteeringPlan::new(vec![1.0, 0.0], vec![0.0, 1.0], gamma, 0).unwrap();
        plan.eps = 1e-12;
        let out = apply_reverse_ssl(&s, &plan).unwrap().stream;
        let expect = f64::from(c) * (1.0 - gamma);
        assert!((f64::from(out.tokens[0][1]) - expect).abs() < 1e-6);
        assert!(l2_norm(&out.tokens[0]) < f64::from(c));
    }

    #[test]
    fn second_application_moves_tokens_again() {
        let s = random_stream(5, 6, [1, 2, 3, 3]);
        let plan = random_plan(6, 6, 0.4);
        let once = apply_ssl(&s, &plan).unwrap().stream;
        let twice = apply_ssl(&once, &plan).unwrap().stream;
        assert_ne!(once, twice);
        for i in s.segments.visual_range().chain(s.segments.output_range()) {
            assert_ne!(once.tokens[i], twice.tokens[i]);
        }
    }

    #[test]
    fn fixed_alpha_differs_from_adaptive_unless_norms_match() {
        let s = one_token(2, vec![3.0, 4.0]);
        let plan = SteeringPlan::new(vec![1.0, 0.0], vec![1.0, 0.0], 0.5, 0).unwrap();
        let fixed = SteeringPlan {
            mode: SteeringMode::FixedAlpha,
            fixed_alpha: 0.5,
            ..plan.clone()
        };
        let a = steering_deltas(&s, &plan, Polarity::Forward).unwrap();
        let b = steering_deltas(&s, &fixed, Polarity::Forward).unwrap();
        assert_eq!(b[0].alpha, 0.5);
        assert!((a[0].alpha - 2.5).abs() < 1e-5);
        assert_ne!(apply_plan(&s, &plan).unwrap(), apply_plan(&s, &fixed).unwrap());

        // |x| = |u| = 1: adaptive strength is gamma up to eps
        let unit = one_token(2, vec![0.0, 1.0]);
        let a = steering_deltas(&unit, &plan, Polarity::Forward).unwrap();
        assert!((a[0].alpha - 0.5).abs() < 1e-6);
    }

    #[test]
    fn empty_targets_flag_no_op() {
        let s = random_stream(1, 3, [2, 2, 0, 0]);
        let r = apply_ssl(&s, &random_plan(2, 3, 0.5)).unwrap();
        assert!(r.nothing_to_steer);
        assert_eq!(r.stream, s);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let s = random_stream(1, 3, [1, 1, 1, 1]);
        assert!(matches!(
            apply_ssl(&s, &random_plan(2, 4, 0.5)),
            Err(SteerError::Shape { .. })
        ));
    }

    #[test]
    fn plan_mode_picks_polarity() {
        let s = random_stream(7, 4, [1, 1, 2, 2]);
        let plan = random_plan(8, 4, 0.3);
        let rev = plan.clone().with_mode(SteeringMode::ReverseSsl);
        assert_eq!(apply_plan(&s, &plan).unwrap(), apply_ssl(&s, &plan).unwrap());
        assert_eq!(apply_plan(&s, &rev).unwrap(), apply_reverse_ssl(&s, &rev).unwrap());
    }

    proptest! {
        #[test]
        fn zero_gamma_is_identity(seed in any::<u64>(), d in 1usize..8, lens in prop::array::uniform4(0usize..4)) {
            let s = random_stream(seed, d, lens);
            let plan = random_plan(seed ^ 1, d, 0.0);
            prop_assert_eq!(&apply_ssl(&s, &plan).unwrap().stream, &s);
            prop_assert_eq!(&apply_reverse_ssl(&s, &plan).unwrap().stream, &s);
        }

        #[test]
        fn reverse_delta_is_negated_forward_delta(
            seed in any::<u64>(), d in 1usize..8, lens in prop::array::uniform4(0usize..4), gamma in 0.0f64..2.0,
        ) {
            let s = random_stream(seed, d, lens);
            let plan = random_plan(seed ^ 2, d, gamma);
            let fwd = steering_deltas(&s, &plan, Polarity::Forward).unwrap();
            let rev = steering_deltas(&s, &plan, Polarity::Reverse).unwrap();
            for (f, r) in fwd.iter().zip(&rev) {
                prop_assert_eq!(f.index, r.index);
                prop_assert_eq!(f.alpha, r.alpha);
                for (a, b) in f.delta.iter().zip(&r.delta) {
                    prop_assert_eq!(*a, -*b);
                }
            }
            // after f32 rounding the applied deltas agree to one ulp of the token
            let sf = apply_ssl(&s, &plan).unwrap().stream;
            let sr = apply_reverse_ssl(&s, &plan).unwrap().stream;
            for i in 0..s.tokens.len() {
                for j in 0..d {
                    let x = s.tokens[i][j];
                    let df = sf.tokens[i][j] - x;
                    let dr = sr.tokens[i][j] - x;
                    let tol = 2.0 * f32::EPSILON * (x.abs() + df.abs()).max(f32::MIN_POSITIVE);
                    prop_assert!((df + dr).abs() <= tol, "{} vs {}", df, dr);
                }
            }
        }

        #[test]
        fn system_and_prompt_untouched(
            seed in any::<u64>(), d in 1usize..8, lens in prop::array::uniform4(0usize..4), gamma in 0.0f64..3.0,
        ) {
            let s = random_stream(seed, d, lens);
            let plan = random_plan(seed ^ 3, d, gamma);
            let end = s.segments.prompt[1];
            for out in [apply_ssl(&s, &plan).unwrap().stream, apply_reverse_ssl(&s, &plan).unwrap().stream] {
                for i in 0..end {
                    let a: Vec<u32> = out.tokens[i].iter().map(|v| v.to_bits()).collect();
                    let b: Vec<u32> = s.tokens[i].iter().map(|v| v.to_bits()).collect();
                    prop_assert_eq!(a, b);
                }
            }
        }

        // Below eps ~ 1e-7 the bound's slack (~eps^2) drops under f64 rounding
        // of the left side, so the check starts at the default eps.
        #[test]
        fn adaptive_strength_obeys_norm_law(
            seed in any::<u64>(), d in 1usize..8, gamma in 0.0f64..2.0, eps_exp in -6i32..-1,
        ) {
            let s = random_stream(seed, d, [1, 1, 3, 3]);
            let mut plan = random_plan(seed ^ 4, d, gamma);
            plan.eps = 10f64.powi(eps_exp);
            for t in steering_deltas(&s, &plan, Polarity::Forward).unwrap() {
                let u = if s.segments.visual_range().contains(&t.index) { &plan.d_faithful } else { &plan.d_hall };
                let nu = l2_norm(u);
                let nx = l2_norm(&s.tokens[t.index]);
                let lhs = (t.alpha * nu - gamma * nx).abs();
                prop_assert!(lhs <= gamma * nx * plan.eps / nu, "{} > {}", lhs, gamma * nx * plan.eps / nu);
            }
        }
    }
}

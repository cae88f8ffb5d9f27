// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails or runs over its time budget.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use saesteer::eval::{chair_scores, parse_pope_jsonl, pope_scores, CaptionRecord, ObjectVocabulary};
use saesteer::miner::{activation_frequencies, select_directions, FireRule};
use saesteer::sae::{load_weights, normalized_mse, save_weights, train_sae, SaeModel, SaeTrainConfig};
use saesteer::stats::{cohens_d, spearman_rho, train_logreg, welch_t_test, FeatureSet, LogRegConfig};
use saesteer::steer::{
    apply_ssl, export_plan, import_plan, read_stream, steering_deltas, write_stream, Polarity, Segments, SteeringMode,
    SteeringPlan, TokenStream,
};
use saesteer::store::{read_dump, synth_generate, write_dump, Label, ResidualDataset, ResidualSample, SynthConfig};
use statrs::distribution::{ContinuousCDF, StudentsT};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b.abs().max(f64::MIN_POSITIVE)).abs()
    }
}

// 1 ---------------------------------------------------------------------

fn planted_recovery() -> Outcome {
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..100 {
        let cfg = SynthConfig {
            seed,
            ..SynthConfig::default()
        };
        let out = synth_generate(&cfg).map_err(|e| e.to_string())?;
        let stats = activation_frequencies(&out.dataset, &out.model, FireRule::PostTopK).map_err(|e| e.to_string())?;
        let sel = select_directions(&stats, &out.model, true).map_err(|e| e.to_string())?;
        if sel.hall_latent == cfg.planted_hall_latent && sel.faithful_latent == cfg.planted_faithful_latent {
            hits += 1;
        } else {
            misses.push(seed);
        }
    }
    ensure(hits >= 99, || format!("recovered {hits}/100, missed seeds {misses:?}"))?;
    Ok(format!("recovered both planted latents in {hits}/100 seeds"))
}

// 2 ---------------------------------------------------------------------

fn holdout(data: &ResidualDataset) -> (ResidualDataset, ResidualDataset) {
    let mut train = ResidualDataset::new(data.d, data.layer, data.model_id.clone());
    let mut test = train.clone();
    for (i, s) in data.samples.iter().enumerate() {
        if i % 10 == 0 {
            test.samples.push(s.clone());
        } else {
            train.samples.push(s.clone());
        }
    }
    (train, test)
}

fn sae_training() -> Outcome {
    let mut lines = Vec::new();
    for seed in 1..=5u64 {
        let data = synth_generate(&SynthConfig {
            n_per_class: 1500,
            d: 64,
            d_sae: 32,
            k: 4,
            planted_hall_latent: 1,
            planted_faithful_latent: 2,
            noise_scale: 0.0,
            seed,
            ..SynthConfig::default()
        })
        .map_err(|e| e.to_string())?
        .dataset;
        let (train, test) = holdout(&data);
        let run = |aux_coefficient: f64| {
            let cfg = SaeTrainConfig {
                d_sae: 32,
                k: 4,
                epochs: 50,
                batch_size: 8,
                learning_rate: 0.1,
                aux_coefficient,
                // independent of the data seed
                seed: 100 + seed,
                ..SaeTrainConfig::default()
            };
            train_sae(&train, &cfg).map_err(|e| e.to_string())
        };
        let (with_aux, without) = (run(1.0 / 32.0)?, run(0.0)?);
        ensure(with_aux.history.len() <= 50, || "more than 50 epochs".into())?;
        let mse = normalized_mse(&with_aux.model, &test).map_err(|e| e.to_string())?;
        let (dead_aux, dead_plain) = (with_aux.final_dead_fraction(), without.final_dead_fraction());
        ensure(mse < 0.05, || {
            format!("seed {seed}: held-out normalized mse {mse:.4} >= 0.05")
        })?;
        ensure(dead_aux <= dead_plain, || {
            format!("seed {seed}: dead fraction with aux {dead_aux:.3} > without {dead_plain:.3}")
        })?;
        lines.push(format!("s{seed} mse={mse:.4} dead={dead_aux:.3}/{dead_plain:.3}"));
    }
    Ok(format!(
        "50 epochs, held-out mse < 0.05, dead(aux) <= dead(no aux): {}",
        lines.join(", ")
    ))
}

// 3 ---------------------------------------------------------------------

fn naive_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn naive_var(x: &[f64]) -> f64 {
    let m = naive_mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (naive_mean(x), naive_mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

fn statistics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (na, nb) = (rng.random_range(2..60), rng.random_range(2..60));
        let shift = rng.random_range(-1.5..1.5);
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.random_range(-2.0..2.0) * 1.7 + shift).collect();

        let (va, vb) = (naive_var(&a), naive_var(&b));
        let (sa, sb) = (va / na as f64, vb / nb as f64);
        let t = (naive_mean(&a) - naive_mean(&b)) / (sa + sb).sqrt();
        let df = (sa + sb).powi(2) / (sa * sa / (na as f64 - 1.0) + sb * sb / (nb as f64 - 1.0));
        let p = 2.0 * StudentsT::new(0.0, 1.0, df).map_err(|e| e.to_string())?.sf(t.abs());
        let w = welch_t_test(&a, &b).map_err(|e| e.to_string())?;
        let mut errs = vec![rel(w.t_statistic, t), rel(w.df, df)];
        if p > 1e-12 {
            errs.push(rel(w.p_value, p));
        }

        let pooled = (((na - 1) as f64 * va + (nb - 1) as f64 * vb) / (na + nb - 2) as f64).sqrt();
        let d = (naive_mean(&a) - naive_mean(&b)) / pooled;
        errs.push(rel(cohens_d(&a, &b).map_err(|e| e.to_string())?, d));

        let n = rng.random_range(3..80);
        // coarse grid so ties occur
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..12u8))).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(-6.0..6.0f64).round()).collect();
        let want = naive_pearson(&naive_ranks(&x), &naive_ranks(&y));
        if want.is_finite() {
            errs.push(rel(spearman_rho(&x, &y).map_err(|e| e.to_string())?.rho, want));
        }
        let e = errs.iter().cloned().fold(0.0, f64::max);
        ensure(e <= 1e-9, || format!("fixture {i}: relative error {e:e}"))?;
        worst = worst.max(e);
    }

    let d = cohens_d(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).map_err(|e| e.to_string())?;
    ensure(d == -3.0, || format!("hand fixture d = {d}, want -3"))?;
    let x: Vec<f64> = (0..20).map(|i| f64::from(i) * 0.37 - 2.0).collect();
    let up: Vec<f64> = x.iter().map(|v| v.powi(3) + 1.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -v.exp()).collect();
    let (r_up, r_down) = (
        spearman_rho(&x, &up).map_err(|e| e.to_string())?.rho,
        spearman_rho(&x, &down).map_err(|e| e.to_string())?.rho,
    );
    ensure(r_up == 1.0 && r_down == -1.0, || {
        format!("monotone rho = {r_up}, {r_down}")
    })?;
    Ok(format!(
        "300 oracle fixtures, worst relative error {worst:.1e}; d = -3 and rho = +-1 exact"
    ))
}

// 4 ---------------------------------------------------------------------

/// Rectified Gaussian latent activations: the hall latent is shifted up on
/// hall samples, the faithful latent on faithful samples, and the two random
/// latents ignore the label.
fn latent_features(rng: &mut ChaCha8Rng, n_per_class: usize) -> (Vec<[f64; 4]>, Vec<u8>) {
    let unit = Normal::new(0.0f64, 1.0).unwrap();
    let mut rows = Vec::with_capacity(2 * n_per_class);
    let mut y = Vec::with_capacity(2 * n_per_class);
    for label in [Label::Hall, Label::Faithful] {
        let (mu_h, mu_f) = match label {
            Label::Hall => (1.0, 0.0),
            Label::Faithful => (0.0, 1.0),
        };
        for _ in 0..n_per_class {
            let mut z = || -> f64 { unit.sample(rng) };
            rows.push([
                (mu_h + z()).max(0.0),
                (mu_f + z()).max(0.0),
                (0.5 + z()).max(0.0),
                (0.5 + z()).max(0.0),
            ]);
            y.push(label.bit());
        }
    }
    (rows, y)
}

fn classifier_ordering() -> Outcome {
    let sets = [
        (FeatureSet::HallOnly, vec![0]),
        (FeatureSet::FaithfulOnly, vec![1]),
        (FeatureSet::Both, vec![0, 1]),
        (FeatureSet::Random1, vec![2]),
        (FeatureSet::Random2, vec![2, 3]),
    ];
    let mut sums = [0.0; 5];
    let seeds = 20;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (train, ytr) = latent_features(&mut rng, 1000);
        let (test, yte) = latent_features(&mut rng, 500);
        for (slot, (set, cols)) in sets.iter().enumerate() {
            let pick = |rows: &[[f64; 4]]| -> Vec<Vec<f64>> {
                rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
            };
            let cfg = LogRegConfig {
                seed,
                ..LogRegConfig::default()
            };
            let report = train_logreg(*set, cols.clone(), (&pick(&train), &ytr), (&pick(&test), &yte), &cfg)
                .map_err(|e| e.to_string())?;
            sums[slot] += report.accuracy;
        }
    }
    let [hall, faithful, both, random1, random2] = sums.map(|s| s / seeds as f64);
    let detail = format!(
        "20-seed mean accuracy: Both {both:.4}, HallOnly {hall:.4}, FaithfulOnly {faithful:.4}, \
         Random1 {random1:.4}, Random2 {random2:.4}"
    );
    ensure(both >= hall && both >= faithful, || {
        format!("ordering violated; {detail}")
    })?;
    ensure(hall >= 0.6 && faithful >= 0.6, || {
        format!("single latent below 0.6; {detail}")
    })?;
    ensure((random1 - 0.5).abs() <= 0.1, || {
        format!("Random1 outside 0.5 +- 0.1; {detail}")
    })?;
    Ok(detail)
}

// 5 ---------------------------------------------------------------------

fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f32> {
    let scale = rng.random_range(0.5..2.0f32);
    loop {
        let v: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0f32)).collect();
        let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n * scale).collect();
        }
    }
}

fn random_stream(rng: &mut ChaCha8Rng, d: usize) -> TokenStream {
    let lens = [
        rng.random_range(0..4),
        rng.random_range(0..6),
        rng.random_range(1..10),
        rng.random_range(1..6),
    ];
    let tokens = (0..lens.iter().sum::<usize>())
        .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0f32)).collect())
        .collect();
    TokenStream::new(d, tokens, Segments::from_lengths(lens[0], lens[1], lens[2], lens[3])).unwrap()
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt()
}

fn steering_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_removal: f64 = 0.0;
    for i in 0..200 {
        let d = rng.random_range(2..33);
        let stream = random_stream(&mut rng, d);
        let gamma = rng.random_range(0.05..2.0);
        let plan = SteeringPlan::new(random_direction(&mut rng, d), random_direction(&mut rng, d), gamma, 0)
            .map_err(|e| e.to_string())?;
        let err = |e: saesteer::steer::SteerError| e.to_string();

        let zero = SteeringPlan {
            gamma: 0.0,
            ..plan.clone()
        };
        let still = apply_ssl(&stream, &zero).map_err(err)?.stream;
        ensure(still.tokens == stream.tokens, || {
            format!("stream {i}: gamma = 0 changed tokens")
        })?;

        let fwd = steering_deltas(&stream, &plan, Polarity::Forward).map_err(err)?;
        let rev = steering_deltas(&stream, &plan, Polarity::Reverse).map_err(err)?;
        for (f, r) in fwd.iter().zip(&rev) {
            let exact = f.index == r.index
                && f.alpha == r.alpha
                && f.delta.iter().zip(&r.delta).all(|(a, b)| a.to_bits() == (-b).to_bits());
            ensure(exact, || {
                format!(
                    "stream {i}: reverse delta is not the exact negation at token {}",
                    f.index
                )
            })?;

            let x = &stream.tokens[f.index];
            let u = if stream.segments.visual_range().contains(&f.index) {
                &plan.d_faithful
            } else {
                &plan.d_hall
            };
            let (nx, nu) = (norm(x), norm(u));
            let gap = (f.alpha * nu - gamma * nx).abs();
            let bound = gamma * nx * plan.eps / nu;
            ensure(gap <= bound, || {
                format!(
                    "stream {i} token {}: |alpha*|u| - gamma*|x|| = {gap:e} > {bound:e}",
                    f.index
                )
            })?;
        }

        let steered = apply_ssl(&stream, &plan).map_err(err)?.stream;
        let fixed = stream.segments.visual_range().start;
        ensure(steered.tokens[..fixed] == stream.tokens[..fixed], || {
            format!("stream {i}: system or prompt token changed")
        })?;
        let bits_equal = steered.tokens[..fixed]
            .iter()
            .flatten()
            .zip(stream.tokens[..fixed].iter().flatten())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(bits_equal, || format!("stream {i}: system or prompt bits changed"))?;

        // output token equal to a unit hall direction, gamma = 1
        let mut unit_h = random_direction(&mut rng, d);
        let n = norm(&unit_h) as f32;
        unit_h.iter_mut().for_each(|v| *v /= n);
        let mut probe = stream.clone();
        let last = probe.tokens.len() - 1;
        probe.tokens[last] = unit_h.clone();
        let removal = SteeringPlan {
            d_hall: unit_h,
            gamma: 1.0,
            mode: SteeringMode::Ssl,
            ..plan.clone()
        };
        let left = norm(&apply_ssl(&probe, &removal).map_err(err)?.stream.tokens[last]);
        ensure(left <= 1e-6, || {
            format!("stream {i}: parallel removal left norm {left:e}")
        })?;
        worst_removal = worst_removal.max(left);
    }
    Ok(format!(
        "200 streams: identity, exact antisymmetry, fixed prefix, strength bound hold; removal residual <= {worst_removal:.2e}"
    ))
}

// 6 ---------------------------------------------------------------------

const FILLERS: [&str; 10] = [
    "a", "the", "with", "near", "and", "photo", "of", "some", "beside", "shows",
];

fn chair_equivalence() -> Outcome {
    let vocab = ObjectVocabulary::coco80();
    for f in FILLERS {
        ensure(vocab.extract_objects(f).is_empty(), || {
            format!("filler {f:?} is a vocabulary word")
        })?;
    }
    let objects: Vec<String> = vocab
        .canonical_names()
        .iter()
        .filter(|c| {
            let spoken = c.replace('_', " ");
            vocab.extract_objects(&spoken) == BTreeSet::from([c.to_string()])
        })
        .cloned()
        .collect();
    ensure(objects.len() >= 60, || {
        format!("only {} objects extract cleanly", objects.len())
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for fixture in 0..50 {
        let n = rng.random_range(1..12);
        let mut records = Vec::with_capacity(n);
        let mut truth_sets = Vec::with_capacity(n);
        let mut mention_sets = Vec::with_capacity(n);
        for c in 0..n {
            let k = rng.random_range(0..5);
            let mentioned: Vec<&String> = index::sample(&mut rng, objects.len(), k)
                .iter()
                .map(|i| &objects[i])
                .collect();
            let mut words = vec!["photo".to_string(), "of".into()];
            for o in &mentioned {
                words.push((*FILLERS[..4].choose(&mut rng).unwrap()).to_string());
                words.push(o.replace('_', " "));
            }
            let n_truth = rng.random_range(0..6);
            let truth: BTreeSet<String> = index::sample(&mut rng, objects.len(), n_truth)
                .iter()
                .map(|i| objects[i].clone())
                .chain(mentioned.iter().filter(|_| rng.random_bool(0.5)).map(|o| (*o).clone()))
                .collect();
            records.push(CaptionRecord {
                image_id: format!("img{c}"),
                caption: words.join(" "),
                ground_truth: truth.clone(),
            });
            mention_sets.push(mentioned.into_iter().cloned().collect::<BTreeSet<String>>());
            truth_sets.push(truth);
        }

        let halls: Vec<BTreeSet<String>> = mention_sets
            .iter()
            .zip(&truth_sets)
            .map(|(m, t)| m.difference(t).cloned().collect())
            .collect();
        let with_hall = halls.iter().filter(|h| !h.is_empty()).count();
        let total_hall: usize = halls.iter().map(BTreeSet::len).sum();
        let total_mentioned: usize = mention_sets.iter().map(BTreeSet::len).sum();
        let chair_s = with_hall as f64 / n as f64;
        let chair_i = if total_mentioned == 0 {
            0.0
        } else {
            total_hall as f64 / total_mentioned as f64
        };

        let report = chair_scores(&records, &vocab).map_err(|e| e.to_string())?;
        ensure(report.chair_s == chair_s && report.chair_i == chair_i, || {
            format!(
                "fixture {fixture}: got ({}, {}), oracle ({chair_s}, {chair_i})",
                report.chair_s, report.chair_i
            )
        })?;
        for (r, (m, h)) in report.per_caption.iter().zip(mention_sets.iter().zip(&halls)) {
            ensure(&r.mentioned == m && &r.hallucinated == h, || {
                format!("fixture {fixture}: per-caption sets differ for {}", r.image_id)
            })?;
        }
    }

    let two = [
        CaptionRecord {
            image_id: "1".into(),
            caption: "A dog on the grass.".into(),
            ground_truth: BTreeSet::from(["dog".to_string()]),
        },
        CaptionRecord {
            image_id: "2".into(),
            caption: "A dog chasing a cat.".into(),
            ground_truth: BTreeSet::from(["dog".to_string()]),
        },
    ];
    let r = chair_scores(&two, &vocab).map_err(|e| e.to_string())?;
    ensure(r.chair_s == 0.5 && r.chair_i == 1.0 / 3.0, || {
        format!("2-caption fixture gave CHAIR_S {} CHAIR_I {}", r.chair_s, r.chair_i)
    })?;

    let pope: String = (0..10)
        .map(|i| {
            let label = if i % 2 == 0 { "yes" } else { "no" };
            format!(r#"{{"image_id": {i}, "object": "dog", "split": "random", "label": "{label}", "answer": "Yes."}}"#)
                + "\n"
        })
        .collect();
    let p = pope_scores(&parse_pope_jsonl(&pope).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(p.average.f1 == 2.0 / 3.0, || {
        format!("all-yes POPE f1 = {}", p.average.f1)
    })?;
    ensure(
        p.average.accuracy == 0.5 && p.average.recall == 1.0 && p.average.precision == 0.5,
        || format!("all-yes POPE metrics {:?}", p.average),
    )?;
    Ok("50 random fixtures match the set oracle; CHAIR_S 0.5, CHAIR_I 1/3; POPE f1 2/3".into())
}

// 7 ---------------------------------------------------------------------

fn random_dataset(rng: &mut ChaCha8Rng) -> ResidualDataset {
    let d = rng.random_range(1..24);
    let mut ds = ResidualDataset::new(
        d,
        rng.random_range(0..40),
        format!("model-{}", rng.random_range(0..1000)),
    );
    for i in 0..rng.random_range(1..40) {
        ds.samples.push(ResidualSample {
            vector: (0..d).map(|_| rng.random_range(-50.0..50.0f32)).collect(),
            label: if rng.random_bool(0.5) {
                Label::Hall
            } else {
                Label::Faithful
            },
            image_id: format!("img-{}", rng.random_range(0..10)),
            token_text: ["dog", "cat", "surf board", "\u{e9}clair"][i % 4].into(),
            token_position: rng.random_range(0..500),
            subword_count: rng.random_range(1..4),
        });
    }
    ds
}

fn random_model(rng: &mut ChaCha8Rng) -> SaeModel {
    let (d, d_sae) = (rng.random_range(1..16), rng.random_range(1..48));
    let mut m = SaeModel::init(d, d_sae, rng.random_range(1..=d_sae), rng.random()).unwrap();
    m.b_enc.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    m.b_dec.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    m
}

fn random_plan(rng: &mut ChaCha8Rng) -> SteeringPlan {
    let d = rng.random_range(1..40);
    let mut p = SteeringPlan::new(
        random_direction(rng, d),
        random_direction(rng, d),
        rng.random_range(0.0..2.0),
        rng.random_range(0..64),
    )
    .unwrap();
    p.mode = *[SteeringMode::Ssl, SteeringMode::ReverseSsl, SteeringMode::FixedAlpha]
        .choose(rng)
        .unwrap();
    p.fixed_alpha = rng.random_range(-3.0..3.0);
    p.eps = rng.random_range(1e-9..1e-3);
    p.hall_latent = rng.random_bool(0.5).then(|| rng.random_range(0..4096));
    p.faithful_latent = rng.random_bool(0.5).then(|| rng.random_range(0..4096));
    p
}

fn round_trip<T>(
    name: &str,
    bytes: Vec<u8>,
    read: impl Fn(&[u8]) -> Result<T, String>,
    write: impl Fn(&T) -> Result<Vec<u8>, String>,
) -> Result<(), String> {
    let again = write(&read(&bytes)?)?;
    ensure(again == bytes, || format!("{name}: re-serialized bytes differ"))
}

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = |e: &dyn std::fmt::Display| e.to_string();
    let per_format = 100;
    for _ in 0..per_format {
        let ds = random_dataset(&mut rng);
        round_trip(
            "RSDUMP01",
            write_dump(&ds).map_err(|e| s(&e))?,
            |b| read_dump(b).map_err(|e| s(&e)),
            |v| write_dump(v).map_err(|e| s(&e)),
        )?;
        let m = random_model(&mut rng);
        round_trip(
            "SAEW01",
            save_weights(&m).map_err(|e| s(&e))?,
            |b| load_weights(b).map_err(|e| s(&e)),
            |v| save_weights(v).map_err(|e| s(&e)),
        )?;
        let p = random_plan(&mut rng);
        round_trip(
            "STEER01",
            export_plan(&p).map_err(|e| s(&e))?,
            |b| import_plan(b).map_err(|e| s(&e)),
            |v| export_plan(v).map_err(|e| s(&e)),
        )?;
        let d = rng.random_range(1..24);
        let t = random_stream(&mut rng, d);
        round_trip(
            "TSTRM001",
            write_stream(&t).map_err(|e| s(&e))?,
            |b| read_stream(b).map_err(|e| s(&e)),
            |v| write_stream(v).map_err(|e| s(&e)),
        )?;
    }
    Ok(format!(
        "{per_format} random instances per format re-serialize byte-identically"
    ))
}

// 8 ---------------------------------------------------------------------

const CAPTIONS: &str = r#"{"image_id": "1", "caption": "A dog on the grass."}
{"image_id": "2", "caption": "A dog chasing a cat."}
"#;
const TRUTH: &str = r#"{"1": ["dog"], "2": ["dog"]}"#;
const POPE: &str = r#"{"image_id": 1, "object": "dog", "split": "random", "label": "yes", "answer": "yes"}
{"image_id": 1, "object": "cat", "split": "random", "label": "no", "answer": "yes"}
{"image_id": 2, "object": "dog", "split": "popular", "label": "yes", "answer": "no"}
{"image_id": 2, "object": "car", "split": "adversarial", "label": "no", "answer": "no"}
"#;

fn run_pipeline(out: &Path, config: &Path) -> Result<(), String> {
    fs::write(out.join("captions.jsonl"), CAPTIONS).map_err(|e| e.to_string())?;
    fs::write(out.join("truth.json"), TRUTH).map_err(|e| e.to_string())?;
    fs::write(out.join("pope.jsonl"), POPE).map_err(|e| e.to_string())?;
    let steps: [&[&str]; 8] = [
        &["synth"],
        &["train-sae"],
        &["mine"],
        &["validate"],
        &["export-steer"],
        &["steer-sim"],
        &["eval", "chair"],
        &["eval", "pope"],
    ];
    for step in steps {
        let status = Command::new(env!("CARGO_BIN_EXE_saesteer"))
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(out)
            .arg("--quiet")
            .args(step)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            format!(
                "{} exited with {}: {}",
                step.join(" "),
                status.status,
                String::from_utf8_lossy(&status.stderr).trim()
            )
        })?;
    }
    Ok(())
}

fn pipeline_determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/pipeline.json");
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    for d in &dirs {
        run_pipeline(d.path(), &config)?;
    }
    let listing = |p: &Path| -> Result<BTreeSet<String>, String> {
        let mut names = BTreeSet::new();
        for e in fs::read_dir(p).map_err(|e| e.to_string())? {
            let name = e.map_err(|e| e.to_string())?.file_name().to_string_lossy().into_owned();
            if name != "run.log" {
                names.insert(name);
            }
        }
        Ok(names)
    };
    let (a, b) = (listing(dirs[0].path())?, listing(dirs[1].path())?);
    ensure(a == b, || {
        format!("file sets differ: {:?}", a.symmetric_difference(&b).collect::<Vec<_>>())
    })?;
    for name in &a {
        let read = |d: &tempfile::TempDir| fs::read(d.path().join(name)).map_err(|e| e.to_string());
        ensure(read(&dirs[0])? == read(&dirs[1])?, || {
            format!("{name} differs between runs")
        })?;
    }
    let chair = fs::read_to_string(dirs[0].path().join("chair_report.json")).map_err(|e| e.to_string())?;
    let chair: serde_json::Value = serde_json::from_str(&chair).map_err(|e| e.to_string())?;
    ensure(
        chair["chair_s"] == 0.5 && chair["chair_i"].as_f64() == Some(1.0 / 3.0),
        || format!("pipeline CHAIR report {} / {}", chair["chair_s"], chair["chair_i"]),
    )?;
    let reports = a.iter().filter(|n| n.ends_with("_report.json")).count();
    Ok(format!(
        "two runs, {} files identical ({reports} reports), validation passed",
        a.len()
    ))
}

// -----------------------------------------------------------------------

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 8] = [
        (1, "planted-direction recovery", 10, planted_recovery),
        (2, "SAE training", 60, sae_training),
        (3, "statistics oracle equivalence", 5, statistics_oracles),
        (4, "classifier ordering", 30, classifier_ordering),
        (5, "steering algebra", 5, steering_algebra),
        (6, "CHAIR/POPE oracle equivalence", 5, chair_equivalence),
        (7, "format round trips", 5, format_round_trips),
        (8, "pipeline determinism", 120, pipeline_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, name, budget, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (verdict, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the {budget} s budget; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {n} {name}: {verdict} {detail} ({:.2} s of {budget} s)",
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

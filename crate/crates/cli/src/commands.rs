// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saesteer::eval::{chair_scores, load_caption_records, parse_pope_jsonl, pope_scores, ObjectVocabulary};
use saesteer::miner::{activation_frequencies, select_directions, top_m_report, LatentClass};
use saesteer::sae::{load_weights, normalized_mse, save_weights, train_sae, SaeModel};
use saesteer::steer::{
    apply_plan, export_plan, import_plan, preset, read_stream, simulate_generation, simulate_unsteered, write_stream,
    Dynamics, Segments, SteeringMode, SteeringPlan, TokenStream,
};
use saesteer::store::{build_balanced_dataset, read_dump, synth_generate, write_dump, ResidualDataset};
use saesteer::validation::validate_directions;
use serde::{Deserialize, Serialize};

use crate::config::{resolve, RunConfig};
use crate::svg::{self, Series};

pub struct Ctx {
    pub out: PathBuf,
    pub quiet: bool,
    pub command: &'static str,
}

impl Ctx {
    pub fn new(out: PathBuf, quiet: bool, command: &'static str) -> Result<Self> {
        if !out.is_dir() {
            bail!("output directory {} does not exist", out.display());
        }
        Ok(Self { out, quiet, command })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Timestamps go to the sidecar log only.
    pub fn log(&self, message: &str) -> Result<()> {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let path = self.path("run.log");
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        writeln!(
            f,
            "{}.{:03} {} {message}",
            now.as_secs(),
            now.subsec_millis(),
            self.command
        )?;
        Ok(())
    }

    fn say(&self, message: &str) -> Result<()> {
        if !self.quiet {
            println!("{message}");
        }
        self.log(message)
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, serde_json::to_string_pretty(value)? + "\n")
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        self.write(name, w.into_inner()?)
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_dump(path: &Path) -> Result<ResidualDataset> {
    read_dump(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

fn load_model(path: &Path) -> Result<SaeModel> {
    load_weights(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Serialize)]
struct SynthReport {
    n_samples: usize,
    d: usize,
    d_sae: usize,
    planted_hall_latent: usize,
    planted_faithful_latent: usize,
}

pub fn synth(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let out = synth_generate(&cfg.synth)?;
    ctx.write("synth.rsdump", write_dump(&out.dataset)?)?;
    ctx.write("synth_truth.saew", save_weights(&out.model)?)?;
    ctx.write_json(
        "synth_report.json",
        &SynthReport {
            n_samples: out.dataset.len(),
            d: cfg.synth.d,
            d_sae: cfg.synth.d_sae,
            planted_hall_latent: cfg.synth.planted_hall_latent,
            planted_faithful_latent: cfg.synth.planted_faithful_latent,
        },
    )?;
    ctx.say(&format!(
        "synth: {} samples, d={}, planted hall={} faithful={}",
        out.dataset.len(),
        cfg.synth.d,
        cfg.synth.planted_hall_latent,
        cfg.synth.planted_faithful_latent
    ))?;
    Ok(true)
}

#[derive(Serialize)]
struct TrainReport<'a> {
    n_samples: usize,
    normalized_mse: f64,
    final_dead_fraction: f64,
    history: &'a [saesteer::sae::EpochStats],
}

pub fn train(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let data = load_dump(&resolve(&cfg.train.dump, &ctx.out, "synth.rsdump"))?;
    let outcome = train_sae(&data, &cfg.train.sae)?;
    let mse = normalized_mse(&outcome.model, &data)?;
    ctx.write("sae.saew", save_weights(&outcome.model)?)?;
    ctx.write_json(
        "train_report.json",
        &TrainReport {
            n_samples: data.len(),
            normalized_mse: mse,
            final_dead_fraction: outcome.final_dead_fraction(),
            history: &outcome.history,
        },
    )?;
    let h = &outcome.history;
    ctx.write_csv(
        "train_loss.csv",
        &["epoch", "recon_loss", "aux_loss", "dead_fraction"],
        h.iter().map(|e| {
            vec![
                e.epoch.to_string(),
                e.recon_loss.to_string(),
                e.aux_loss.to_string(),
                e.dead_fraction.to_string(),
            ]
        }),
    )?;
    ctx.write(
        "train_loss.svg",
        svg::line_chart(
            "SAE training",
            "epoch",
            "mean loss per sample",
            &[
                Series {
                    name: "reconstruction",
                    points: h.iter().map(|e| (e.epoch as f64, e.recon_loss)).collect(),
                },
                Series {
                    name: "auxiliary",
                    points: h.iter().map(|e| (e.epoch as f64, e.aux_loss)).collect(),
                },
            ],
        ),
    )?;
    ctx.say(&format!(
        "train-sae: {} epochs, normalized mse {mse:.4}, dead fraction {:.3}",
        h.len(),
        outcome.final_dead_fraction()
    ))?;
    Ok(true)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MineReport {
    pub hall_latent: usize,
    pub faithful_latent: usize,
    pub collision: bool,
    pub s_hall_of_hall: f64,
    pub s_hall_of_faithful: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub dropped_multi_token: usize,
    pub dropped_imbalance: usize,
    pub dead_latents: usize,
    pub top_m_requested: usize,
    pub top_m_clipped: bool,
    /// Cosine between each mined direction and its planted counterpart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_cosine: Option<PlantedCosine>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlantedCosine {
    pub hall: f64,
    pub faithful: f64,
}

pub fn mine(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let m = &cfg.mine;
    let template = load_dump(&resolve(&m.dump, &ctx.out, "synth.rsdump"))?;
    let model = load_model(&resolve(&m.weights, &ctx.out, "sae.saew"))?;
    let split = build_balanced_dataset(&template, m.seed, m.split_ratio)?;
    ctx.write("train.rsdump", write_dump(&split.train)?)?;
    ctx.write("test.rsdump", write_dump(&split.test)?)?;

    let stats = activation_frequencies(&split.train, &model, m.fire_rule)?;
    let sel = select_directions(&stats, &model, m.exclude_dead)?;
    let top = top_m_report(&stats, m.top_m);
    ctx.write("latent_stats.csv", stats.to_csv())?;
    ctx.write_csv(
        "top_m.csv",
        &["rank", "latent_index", "abs_s_hall", "class"],
        top.entries.iter().enumerate().map(|(r, e)| {
            vec![
                r.to_string(),
                e.latent.to_string(),
                e.abs_s_hall.to_string(),
                class_name(e.class).to_string(),
            ]
        }),
    )?;
    let bars: Vec<(String, f64)> = top
        .entries
        .iter()
        .take(16)
        .map(|e| (e.latent.to_string(), stats.s_hall[e.latent]))
        .collect();
    ctx.write("top_m.svg", svg::bar_chart("Top latents by |s_hall|", "s_hall", &bars))?;

    let report = MineReport {
        hall_latent: sel.hall_latent,
        faithful_latent: sel.faithful_latent,
        collision: sel.collision,
        s_hall_of_hall: stats.s_hall[sel.hall_latent],
        s_hall_of_faithful: stats.s_hall[sel.faithful_latent],
        n_train: split.train.len(),
        n_test: split.test.len(),
        dropped_multi_token: split.dropped_multi_token,
        dropped_imbalance: split.dropped_imbalance,
        dead_latents: (0..stats.d_sae()).filter(|&j| stats.is_dead(j)).count(),
        top_m_requested: top.requested,
        top_m_clipped: top.clipped,
        planted_cosine: None,
    };
    let mut report = report;
    if m.compare_truth {
        let truth = load_model(&ctx.path("synth_truth.saew"))?;
        let cos = |a: &[f32], b: &[f32]| unit(a).iter().zip(unit(b)).map(|(x, y)| x * y).sum::<f64>();
        report.planted_cosine = Some(PlantedCosine {
            hall: cos(&sel.d_hall, truth.decoder_row(cfg.synth.planted_hall_latent)),
            faithful: cos(&sel.d_faithful, truth.decoder_row(cfg.synth.planted_faithful_latent)),
        });
    }
    ctx.write_json("mine_report.json", &report)?;
    ctx.say(&format!(
        "mine: hall latent {} (s={:.3}), faithful latent {} (s={:.3}){}",
        report.hall_latent,
        report.s_hall_of_hall,
        report.faithful_latent,
        -report.s_hall_of_faithful,
        if report.collision { ", collision resolved" } else { "" }
    ))?;
    if let Some(c) = &report.planted_cosine {
        ctx.say(&format!(
            "mine: cosine to planted directions hall={:.4} faithful={:.4}",
            c.hall, c.faithful
        ))?;
    }
    Ok(true)
}

fn class_name(c: LatentClass) -> &'static str {
    match c {
        LatentClass::Hall => "hall",
        LatentClass::Faithful => "faithful",
    }
}

fn mined_latents(ctx: &Ctx, hall: Option<usize>, faithful: Option<usize>) -> Result<(usize, usize)> {
    if let (Some(h), Some(f)) = (hall, faithful) {
        return Ok((h, f));
    }
    let mined: MineReport = load_json(&ctx.path("mine_report.json"))?;
    Ok((
        hall.unwrap_or(mined.hall_latent),
        faithful.unwrap_or(mined.faithful_latent),
    ))
}

pub fn validate(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let v = &cfg.validate;
    let model = load_model(&resolve(&v.weights, &ctx.out, "sae.saew"))?;
    let train = load_dump(&ctx.path("train.rsdump"))?;
    let test = load_dump(&ctx.path("test.rsdump"))?;
    let (hall, faithful) = mined_latents(ctx, v.hall_latent, v.faithful_latent)?;
    let stats = activation_frequencies(&train, &model, v.battery.fire_rule)?;
    let report = validate_directions(&train, &test, &model, &stats, hall, faithful, &v.battery)?;
    ctx.write_json("validation_report.json", &report)?;

    let mut header = vec!["x".to_string()];
    let mut columns: Vec<&[f64]> = Vec::new();
    let mut series = Vec::new();
    let grid = &report.latent_tests[0].kde.grid;
    for t in &report.latent_tests {
        for (group, curve) in [("hall", &t.kde.hall), ("faithful", &t.kde.faithful)] {
            if let Some(c) = curve {
                header.push(format!("{}_{}_{group}", class_name(t.role), t.latent));
                columns.push(c);
            }
        }
    }
    let names: Vec<String> = header[1..].to_vec();
    for (name, c) in names.iter().zip(&columns) {
        series.push(Series {
            name,
            points: grid.iter().copied().zip(c.iter().copied()).collect(),
        });
    }
    ctx.write_csv(
        "kde.csv",
        &header.iter().map(String::as_str).collect::<Vec<_>>(),
        grid.iter().enumerate().map(|(i, x)| {
            std::iter::once(x.to_string())
                .chain(columns.iter().map(|c| c[i].to_string()))
                .collect()
        }),
    )?;
    ctx.write(
        "kde.svg",
        svg::line_chart("Latent activation density", "activation", "density", &series),
    )?;

    ctx.write_csv(
        "classifiers.csv",
        &["feature_set", "latents", "accuracy", "tn", "fp", "fn", "tp"],
        report.classifiers.iter().map(|c| {
            let m = c.confusion.0;
            vec![
                format!("{:?}", c.feature_set),
                c.latents.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";"),
                c.accuracy.to_string(),
                m[0][0].to_string(),
                m[0][1].to_string(),
                m[1][0].to_string(),
                m[1][1].to_string(),
            ]
        }),
    )?;
    let bars: Vec<(String, f64)> = report
        .classifiers
        .iter()
        .map(|c| (format!("{:?}", c.feature_set), c.accuracy))
        .collect();
    ctx.write(
        "classifiers.svg",
        svg::bar_chart("Probe accuracy by feature set", "test accuracy", &bars),
    )?;

    if let Some(b) = &report.boundary {
        ctx.write_csv(
            "pca.csv",
            &["latent_index", "class", "pc1", "pc2"],
            b.latents.iter().zip(&b.labels).zip(&b.pca_coords).map(|((l, c), p)| {
                vec![
                    l.to_string(),
                    class_name(*c).to_string(),
                    p[0].to_string(),
                    p[1].to_string(),
                ]
            }),
        )?;
        let group = |want: LatentClass| -> Vec<(f64, f64)> {
            b.labels
                .iter()
                .zip(&b.pca_coords)
                .filter(|(c, _)| **c == want)
                .map(|(_, p)| (p[0], p[1]))
                .collect()
        };
        let w = [b.projected_weights[0], b.projected_weights[1]];
        ctx.write(
            "pca.svg",
            svg::scatter(
                "Decoder directions of top latents",
                "PC1",
                "PC2",
                &[
                    Series {
                        name: "hall",
                        points: group(LatentClass::Hall),
                    },
                    Series {
                        name: "faithful",
                        points: group(LatentClass::Faithful),
                    },
                ],
                Some((w, b.projected_bias)),
            ),
        )?;
    }

    for c in &report.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        let gate = if c.gating { "" } else { " (informational)" };
        ctx.say(&format!("validate: {mark} {}{gate}: {}", c.name, c.detail))?;
    }
    ctx.say(&format!(
        "validate: {}",
        if report.passed { "passed" } else { "failed" }
    ))?;
    Ok(report.passed)
}

pub fn export_steer(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let s = &cfg.steer;
    let model = load_model(&resolve(&s.weights, &ctx.out, "sae.saew"))?;
    let (hall, faithful) = mined_latents(ctx, cfg.validate.hall_latent, cfg.validate.faithful_latent)?;
    if hall >= model.d_sae || faithful >= model.d_sae {
        bail!("latent index out of range for a model with d_sae={}", model.d_sae);
    }
    let mut plan = SteeringPlan::new(
        model.decoder_row(hall).to_vec(),
        model.decoder_row(faithful).to_vec(),
        s.gamma,
        s.layer,
    )?
    .with_mode(s.mode);
    plan.fixed_alpha = s.fixed_alpha;
    plan.hall_latent = Some(hall);
    plan.faithful_latent = Some(faithful);
    plan.validate()?;
    ctx.write("plan.steer", export_plan(&plan)?)?;
    ctx.say(&format!(
        "export-steer: gamma={} layer={} mode={:?} latents hall={hall} faithful={faithful}",
        plan.gamma, plan.layer, plan.mode
    ))?;
    Ok(true)
}

/// Applies a preset, then lets explicit values win.
pub fn apply_preset(cfg: &mut RunConfig, gamma: Option<f64>, layer: Option<u32>) -> Result<()> {
    if let Some(name) = &cfg.steer.preset {
        let p = preset(name).with_context(|| format!("unknown preset {name:?}"))?;
        cfg.steer.gamma = p.gamma;
        cfg.steer.layer = p.layer;
    }
    if let Some(g) = gamma {
        cfg.steer.gamma = g;
    }
    if let Some(l) = layer {
        cfg.steer.layer = l;
    }
    Ok(())
}

fn random_stream(d: usize, lens: [usize; 4], seed: u64) -> Result<TokenStream> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = lens.iter().sum();
    let tokens = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect())
        .collect();
    let [system, prompt, visual, output] = lens;
    Ok(TokenStream::new(
        d,
        tokens,
        Segments::from_lengths(system, prompt, visual, output),
    )?)
}

fn unit(v: &[f32]) -> Vec<f64> {
    let n = v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    v.iter().map(|x| f64::from(*x) / n).collect()
}

/// Mean projection of the generated tokens onto a unit direction.
fn generated_projection(stream: &TokenStream, from: usize, dir: &[f64]) -> f64 {
    let gen = &stream.tokens[from..];
    let total: f64 = gen
        .iter()
        .map(|t| t.iter().zip(dir).map(|(a, b)| f64::from(*a) * b).sum::<f64>())
        .sum();
    total / gen.len().max(1) as f64
}

#[derive(Serialize)]
struct SweepRow {
    gamma: f64,
    faithful_projection_ssl: f64,
    hall_projection_ssl: f64,
    faithful_projection_reverse: f64,
    hall_projection_reverse: f64,
}

#[derive(Serialize)]
struct SteerSimReport {
    d: usize,
    gamma: f64,
    mode: SteeringMode,
    steps: usize,
    steered_tokens: usize,
    max_delta_norm: f64,
    nothing_to_steer: bool,
    unsteered_faithful_projection: f64,
    unsteered_hall_projection: f64,
    sweep: Vec<SweepRow>,
}

pub fn steer_sim(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let s = &cfg.steer;
    let plan = import_plan(&read(&resolve(&s.plan, &ctx.out, "plan.steer"))?)?;
    let stream = match &s.stream {
        Some(p) => read_stream(&read(p)?).with_context(|| format!("decoding {}", p.display()))?,
        None => random_stream(plan.d(), s.segment_lengths, s.seed)?,
    };
    if stream.d != plan.d() {
        bail!("stream has d={}, plan has d={}", stream.d, plan.d());
    }
    ctx.write("stream.tstrm", write_stream(&stream)?)?;
    let steered = apply_plan(&stream, &plan)?;
    ctx.write("steered.tstrm", write_stream(&steered.stream)?)?;
    let max_delta_norm = stream
        .tokens
        .iter()
        .zip(&steered.stream.tokens)
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (f64::from(*y) - f64::from(*x)).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    let steered_tokens = stream
        .tokens
        .iter()
        .zip(&steered.stream.tokens)
        .filter(|(a, b)| a != b)
        .count();

    let dynamics = Dynamics::identity(plan.d());
    let (u_f, u_h) = (unit(&plan.d_faithful), unit(&plan.d_hall));
    let from = stream.tokens.len();
    let base = simulate_unsteered(&stream, s.steps, &dynamics)?;
    let mut sweep = Vec::with_capacity(s.gamma_sweep.len());
    for &gamma in &s.gamma_sweep {
        let mut row = SweepRow {
            gamma,
            faithful_projection_ssl: 0.0,
            hall_projection_ssl: 0.0,
            faithful_projection_reverse: 0.0,
            hall_projection_reverse: 0.0,
        };
        for mode in [SteeringMode::Ssl, SteeringMode::ReverseSsl] {
            let p = SteeringPlan {
                gamma,
                mode,
                ..plan.clone()
            };
            let gen = simulate_generation(&stream, &p, s.steps, &dynamics)?;
            let (f, h) = (
                generated_projection(&gen, from, &u_f),
                generated_projection(&gen, from, &u_h),
            );
            if mode == SteeringMode::Ssl {
                (row.faithful_projection_ssl, row.hall_projection_ssl) = (f, h);
            } else {
                (row.faithful_projection_reverse, row.hall_projection_reverse) = (f, h);
            }
        }
        sweep.push(row);
    }

    ctx.write_csv(
        "gamma_sweep.csv",
        &[
            "gamma",
            "faithful_projection_ssl",
            "hall_projection_ssl",
            "faithful_projection_reverse",
            "hall_projection_reverse",
        ],
        sweep.iter().map(|r| {
            [
                r.gamma,
                r.faithful_projection_ssl,
                r.hall_projection_ssl,
                r.faithful_projection_reverse,
                r.hall_projection_reverse,
            ]
            .iter()
            .map(f64::to_string)
            .collect()
        }),
    )?;
    let line = |name, f: fn(&SweepRow) -> f64| Series {
        name,
        points: sweep.iter().map(|r| (r.gamma, f(r))).collect(),
    };
    ctx.write(
        "gamma_sweep.svg",
        svg::line_chart(
            "Generated-token projection versus gamma",
            "gamma",
            "mean projection",
            &[
                line("faithful, SSL", |r| r.faithful_projection_ssl),
                line("hall, SSL", |r| r.hall_projection_ssl),
                line("faithful, reverse", |r| r.faithful_projection_reverse),
                line("hall, reverse", |r| r.hall_projection_reverse),
            ],
        ),
    )?;
    let report = SteerSimReport {
        d: plan.d(),
        gamma: plan.gamma,
        mode: plan.mode,
        steps: s.steps,
        steered_tokens,
        max_delta_norm,
        nothing_to_steer: steered.nothing_to_steer,
        unsteered_faithful_projection: generated_projection(&base, from, &u_f),
        unsteered_hall_projection: generated_projection(&base, from, &u_h),
        sweep,
    };
    ctx.write_json("steer_sim_report.json", &report)?;
    ctx.say(&format!(
        "steer-sim: {} tokens steered at gamma={}, {} generation steps over {} gamma values",
        steered_tokens,
        plan.gamma,
        s.steps,
        report.sweep.len()
    ))?;
    Ok(true)
}

fn vocabulary(cfg: &RunConfig) -> Result<ObjectVocabulary> {
    match &cfg.eval.vocab {
        Some(p) => Ok(ObjectVocabulary::from_json(&read_text(p)?)?),
        None => Ok(ObjectVocabulary::coco80()),
    }
}

pub fn eval_chair(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let vocab = vocabulary(cfg)?;
    let captions = read_text(&resolve(&cfg.eval.captions, &ctx.out, "captions.jsonl"))?;
    let truth = read_text(&resolve(&cfg.eval.truth, &ctx.out, "truth.json"))?;
    let records = load_caption_records(&captions, &truth, &vocab)?;
    let report = chair_scores(&records, &vocab)?;
    ctx.write_json("chair_report.json", &report)?;
    ctx.write("chair.csv", report.to_csv())?;
    ctx.say(&format!(
        "eval chair: CHAIR_S {:.4} CHAIR_I {:.4} over {} captions (avg length {:.1})",
        report.chair_s, report.chair_i, report.captions, report.avg_len
    ))?;
    Ok(true)
}

pub fn eval_pope(ctx: &Ctx, cfg: &RunConfig) -> Result<bool> {
    let text = read_text(&resolve(&cfg.eval.pope, &ctx.out, "pope.jsonl"))?;
    let report = pope_scores(&parse_pope_jsonl(&text)?)?;
    ctx.write_json("pope_report.json", &report)?;
    ctx.write("pope.csv", report.to_csv())?;
    let bars: Vec<(String, f64)> = report
        .splits
        .iter()
        .map(|(split, m)| (format!("{split:?}").to_lowercase(), m.f1))
        .collect();
    ctx.write("pope.svg", svg::bar_chart("POPE F1 by split", "F1", &bars))?;
    ctx.say(&format!(
        "eval pope: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
        report.average.accuracy, report.average.precision, report.average.recall, report.average.f1
    ))?;
    Ok(true)
}

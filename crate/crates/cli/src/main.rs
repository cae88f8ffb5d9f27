// SPDX-License-Identifier: MIT OR Apache-2.0

//! `saesteer`: synthetic data, SAE training, latent mining, validation,
//! steering simulation and hallucination metrics from one binary.
//!
//! Exit status: 0 on success, 1 when validation checks fail, 2 on error
//! (with a JSON error object on stderr).

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use saesteer::miner::FireRule;
use saesteer::steer::SteeringMode;

use crate::commands::Ctx;
use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "saesteer",
    version,
    about = "SAE-based hallucination direction mining and steering"
)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seeds every stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Existing directory for all inputs and outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled residual dump with planted latents.
    Synth(SynthArgs),
    /// Train a TopK sparse autoencoder on a residual dump.
    TrainSae(TrainArgs),
    /// Balance, split, and pick the hall and faithful latents.
    Mine(MineArgs),
    /// Run the statistical battery on the mined latents.
    Validate(ValidateArgs),
    /// Simulate steered generation from an exported plan.
    SteerSim(SteerSimArgs),
    /// Hallucination metrics for captions or yes/no answers.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write a steering plan from the mined latents.
    ExportSteer(ExportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    d_sae: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    d_sae: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    aux_coefficient: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FireRuleArg {
    PostTopk,
    PreTopk,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    dump: Option<PathBuf>,
    /// SAE weights; `synth_truth.saew` mines against the generating dictionary.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    top_m: Option<usize>,
    #[arg(long, value_enum)]
    fire_rule: Option<FireRuleArg>,
    #[arg(long)]
    split_ratio: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    hall: Option<usize>,
    #[arg(long)]
    faithful: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ssl,
    ReverseSsl,
    FixedAlpha,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Model preset supplying gamma and layer (llava-next, llava-1.5, instructblip, llama-3.2-11b).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    layer: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    fixed_alpha: Option<f64>,
}

#[derive(Args)]
struct SteerSimArgs {
    #[arg(long)]
    plan: Option<PathBuf>,
    /// TSTRM001 input; a seeded random stream is used otherwise.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// CHAIR_S and CHAIR_I over JSON-lines captions.
    Chair {
        #[arg(long)]
        captions: Option<PathBuf>,
        /// `{image_id: [objects]}`.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Accuracy, precision, recall and F1 per POPE split.
    Pope {
        #[arg(long)]
        answers: Option<PathBuf>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if value.is_some() {
        *slot = value;
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::TrainSae(_) => "train-sae",
            Command::Mine(_) => "mine",
            Command::Validate(_) => "validate",
            Command::SteerSim(_) => "steer-sim",
            Command::Eval(EvalCommand::Chair { .. }) => "eval-chair",
            Command::Eval(EvalCommand::Pope { .. }) => "eval-pope",
            Command::ExportSteer(_) => "export-steer",
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let command = cli.command.name();
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.propagate_seed();

    type Step = fn(&Ctx, &RunConfig) -> Result<bool>;
    let step: Step = match cli.command {
        Command::Synth(a) => {
            let s = &mut cfg.synth;
            set(&mut s.n_per_class, a.n_per_class);
            set(&mut s.d, a.d);
            set(&mut s.d_sae, a.d_sae);
            set(&mut s.k, a.k);
            set(&mut s.noise_scale, a.noise);
            commands::synth
        }
        Command::TrainSae(a) => {
            set_path(&mut cfg.train.dump, a.dump);
            let t = &mut cfg.train.sae;
            set(&mut t.epochs, a.epochs);
            set(&mut t.d_sae, a.d_sae);
            set(&mut t.k, a.k);
            set(&mut t.batch_size, a.batch_size);
            set(&mut t.learning_rate, a.lr);
            set(&mut t.aux_coefficient, a.aux_coefficient);
            commands::train
        }
        Command::Mine(a) => {
            let m = &mut cfg.mine;
            set_path(&mut m.dump, a.dump);
            set_path(&mut m.weights, a.weights);
            set(&mut m.top_m, a.top_m);
            set(&mut m.split_ratio, a.split_ratio);
            set(
                &mut m.fire_rule,
                a.fire_rule.map(|r| match r {
                    FireRuleArg::PostTopk => FireRule::PostTopK,
                    FireRuleArg::PreTopk => FireRule::PreTopK,
                }),
            );
            commands::mine
        }
        Command::Validate(a) => {
            let v = &mut cfg.validate;
            set_path(&mut v.weights, a.weights);
            if a.hall.is_some() {
                v.hall_latent = a.hall;
            }
            if a.faithful.is_some() {
                v.faithful_latent = a.faithful;
            }
            commands::validate
        }
        Command::ExportSteer(a) => {
            set_path(&mut cfg.steer.weights, a.weights);
            if a.preset.is_some() {
                cfg.steer.preset = a.preset;
            }
            commands::apply_preset(&mut cfg, a.gamma, a.layer)?;
            set(
                &mut cfg.steer.mode,
                a.mode.map(|m| match m {
                    ModeArg::Ssl => SteeringMode::Ssl,
                    ModeArg::ReverseSsl => SteeringMode::ReverseSsl,
                    ModeArg::FixedAlpha => SteeringMode::FixedAlpha,
                }),
            );
            set(&mut cfg.steer.fixed_alpha, a.fixed_alpha);
            commands::export_steer
        }
        Command::SteerSim(a) => {
            set_path(&mut cfg.steer.plan, a.plan);
            set_path(&mut cfg.steer.stream, a.stream);
            set(&mut cfg.steer.steps, a.steps);
            commands::steer_sim
        }
        Command::Eval(EvalCommand::Chair { captions, truth, vocab }) => {
            set_path(&mut cfg.eval.captions, captions);
            set_path(&mut cfg.eval.truth, truth);
            set_path(&mut cfg.eval.vocab, vocab);
            commands::eval_chair
        }
        Command::Eval(EvalCommand::Pope { answers }) => {
            set_path(&mut cfg.eval.pope, answers);
            commands::eval_pope
        }
    };
    let ctx = Ctx::new(cli.out, cli.quiet, command)?;
    cfg.write_resolved(&ctx.out, command)?;
    ctx.log("start")?;
    let passed = step(&ctx, &cfg)?;
    ctx.log(if passed { "done" } else { "done, checks failed" })?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let causes: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            let body = serde_json::json!({
                "command": command,
                "error": e.to_string(),
                "causes": causes,
            });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}

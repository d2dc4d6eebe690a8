mod commands;
mod config;
mod svg;

use std::path::PathBuf;

use anyhow::Result;
use bourgan_core::synth::Benchmark;
use bourgan_core::MetricKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Ctx;
use config::{ensure_dir, RunConfig};

#[derive(Parser)]
#[command(name = "bourgan", version, about = "Mode-preserving GAN pipeline on synthetic 2-D benchmarks")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "BOURGAN_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    metric: Option<Metric>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    L2,
    L1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bench {
    Ring,
    Grid,
    Circle,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic benchmark to CSV plus its mode layout.
    Gen {
        #[arg(value_enum)]
        bench: Bench,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        std: Option<f64>,
    },
    /// Subsample and embed a dataset; checks the embedding never contracts.
    Embed {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        m_cap: Option<usize>,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Train one or more models.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Mode layout; when given every trial is evaluated.
        #[arg(long)]
        modes: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        pretrain_iters: Option<usize>,
        /// Standard-normal latent and no distance term.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        m_cap: Option<usize>,
        #[arg(long)]
        n_eval: Option<usize>,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Evaluate a checkpoint: report.json, scatter.svg, lpdd.svg.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        modes: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        n_eval: Option<usize>,
        #[arg(long)]
        w1_points: Option<usize>,
    },
    /// Average several report.json files.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
}

fn apply_embed(cfg: &mut RunConfig, m_cap: Option<usize>, e: &EmbedArgs) {
    if let Some(m) = m_cap {
        cfg.train.subsample.m_cap = m;
    }
    if let Some(d) = e.latent_dim {
        cfg.train.latent_dim = Some(d);
    }
    if let Some(s) = e.sigma {
        cfg.train.sigma = s;
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.metric {
        cfg.metric = match m {
            Metric::L2 => MetricKind::Euclidean,
            Metric::L1 => MetricKind::Manhattan,
        };
    }
    let out_dir = ensure_dir(&cli.out_dir)?;
    let mut ctx = Ctx { out_dir, config: cfg };
    let cfg = &mut ctx.config;
    match &cli.command {
        Command::Gen { bench, samples, std } => {
            if let Some(n) = samples {
                cfg.gen.samples = *n;
            }
            if std.is_some() {
                cfg.gen.std = *std;
            }
            let bench = match bench {
                Bench::Ring => Benchmark::Ring,
                Bench::Grid => Benchmark::Grid,
                Bench::Circle => Benchmark::Circle,
            };
            commands::gen(&ctx, bench)
        }
        Command::Embed { data, m_cap, embed } => {
            apply_embed(cfg, *m_cap, embed);
            commands::embed_cmd(&ctx, data)
        }
        Command::Train { data, modes, iters, batch, trials, pretrain_iters, baseline, m_cap, n_eval, embed } => {
            apply_embed(cfg, *m_cap, embed);
            if let Some(v) = iters {
                cfg.train.iters = *v;
            }
            if let Some(v) = batch {
                cfg.train.batch = *v;
            }
            if let Some(v) = trials {
                cfg.trials = *v;
            }
            if let Some(v) = pretrain_iters {
                cfg.train.pretrain_iters = *v;
            }
            if let Some(v) = n_eval {
                cfg.eval.n_eval = *v;
            }
            cfg.train.baseline |= *baseline;
            commands::train_cmd(&ctx, data, modes.as_deref())
        }
        Command::Eval { model, modes, data, n_eval, w1_points } => {
            if let Some(v) = n_eval {
                cfg.eval.n_eval = *v;
            }
            if w1_points.is_some() {
                cfg.eval.w1_points = *w1_points;
            }
            commands::eval_cmd(&ctx, model, modes, data)
        }
        Command::Report { reports } => commands::report_cmd(&ctx, reports),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    run(cli)
}

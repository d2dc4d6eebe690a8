use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use bourgan_core::io::write_points;
use bourgan_core::rng::{derive_seed, domain};
use bourgan_core::synth::{Benchmark, ModeSpec};
use bourgan_core::{
    aggregate, choose_subsample, embed, estimate_lpdd, evaluate, lpdd_w1, mixture_lpdd_check, pairwise_range, train,
    EvalReport, EvalSummary, GanModel, GaussianMixture, PointSet,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{read_json, write_json, RunConfig};
use crate::svg;

fn read_points(path: &Path, metric: bourgan_core::MetricKind) -> Result<PointSet> {
    bourgan_core::io::read_points(path, metric).with_context(|| format!("reading points from {}", path.display()))
}

pub struct Ctx {
    pub out_dir: PathBuf,
    pub config: RunConfig,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn persist(&self, cmd: &str) -> Result<()> {
        write_json(&self.path(&format!("{cmd}.run.json")), &self.config)
    }
}

pub fn gen(ctx: &Ctx, bench: Benchmark) -> Result<()> {
    let spec = ctx.config.gen.spec(bench)?;
    let data = spec.sample(ctx.config.gen.samples, ctx.config.seed)?;
    let name = bench.name();
    write_points(ctx.path(&format!("{name}.csv")), &data)?;
    write_json(&ctx.path(&format!("{name}.modes.json")), &spec)?;
    ctx.persist("gen")?;
    println!("wrote {} samples from {} modes to {}", data.len(), spec.n_modes(), ctx.out_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct EmbedSummary {
    m: usize,
    d: usize,
    t: usize,
    w1_trace: Vec<(usize, f64)>,
    rescale_beta: f64,
    measured_distortion: f64,
    reseeded: bool,
    /// Smallest `‖f(y) − f(y')‖ / dist(y, y')` over distinct pairs; at least 1.
    min_stretch: f64,
    lower_bound_holds: bool,
    subsample_lpdd_w1: f64,
    mixture_lpdd_w1: f64,
}

pub fn embed_cmd(ctx: &Ctx, data_path: &Path) -> Result<()> {
    let cfg = &ctx.config.train;
    let seed = ctx.config.seed;
    let data = read_points(data_path, ctx.config.metric)?;
    let range = pairwise_range(&data).context("computing distance range")?;
    let sub = choose_subsample(&data, &cfg.subsample, derive_seed(seed, domain::SUBSAMPLE, 0))?;
    let e = embed(&sub.y, cfg.latent_dim, cfg.bourgain_t, derive_seed(seed, domain::BOURGAIN, 0))?;

    let mut min_stretch = f64::INFINITY;
    for i in 0..sub.y.len() {
        for j in i + 1..sub.y.len() {
            let dy = sub.y.dist(i, j);
            if dy > 0.0 {
                let df = e.f.row(i).iter().zip(e.f.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                min_stretch = min_stretch.min(df / dy);
            }
        }
    }
    let max_pairs = cfg.subsample.max_pairs;
    let full = estimate_lpdd(&data, range, max_pairs, derive_seed(seed, domain::PAIRS, 0))?;
    let part = estimate_lpdd(&sub.y, range, max_pairs, derive_seed(seed, domain::PAIRS, 1))?;
    let mix = GaussianMixture::new(e.f_bar.clone(), cfg.sigma)?;
    let latent_range = pairwise_range(&PointSet::new(e.f_bar.clone(), bourgan_core::MetricKind::Euclidean)?)?;
    let summary = EmbedSummary {
        m: sub.m,
        d: e.d,
        t: e.t,
        w1_trace: sub.w1_trace.clone(),
        rescale_beta: e.rescale_beta,
        measured_distortion: e.measured_distortion,
        reseeded: e.reseeded,
        min_stretch,
        lower_bound_holds: min_stretch >= 1.0 - 1e-9,
        subsample_lpdd_w1: lpdd_w1(&full, &part)?,
        mixture_lpdd_w1: mixture_lpdd_check(&mix, latent_range, 4096, derive_seed(seed, domain::MIXTURE, 0))?,
    };
    write_json(&ctx.path("embedding.json"), &e.to_json())?;
    write_json(
        &ctx.path("lpdd.json"),
        &serde_json::json!({ "data": full.to_json(), "subsample": part.to_json() }),
    )?;
    write_json(&ctx.path("embed.summary.json"), &summary)?;
    ctx.persist("embed")?;
    println!(
        "m={} d={} t={} distortion={:.3} min_stretch={:.6} lower_bound={}",
        summary.m,
        summary.d,
        summary.t,
        summary.measured_distortion,
        summary.min_stretch,
        if summary.lower_bound_holds { "ok" } else { "VIOLATED" }
    );
    ensure!(summary.lower_bound_holds, "embedding contracts a pair (min stretch {min_stretch})");
    Ok(())
}

fn write_log(path: &Path, model: &GanModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for rec in &model.logs {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Trains `config.trials` models; with `modes` set, each is also evaluated.
pub fn train_cmd(ctx: &Ctx, data_path: &Path, modes: Option<&Path>) -> Result<()> {
    let data = read_points(data_path, ctx.config.metric)?;
    let spec: Option<ModeSpec> = modes.map(read_json).transpose()?;
    let trials = ctx.config.trials;
    ensure!(trials >= 1, "trials must be at least 1");
    ctx.persist("train")?;

    let run_one = |k: usize| -> Result<Option<EvalReport>> {
        let seed = ctx.config.trial_seed(k);
        let dir = if trials == 1 { ctx.out_dir.clone() } else { ctx.out_dir.join(format!("trial_{k}")) };
        std::fs::create_dir_all(&dir)?;
        let cfg = bourgan_core::TrainConfig { seed, ..ctx.config.train.clone() };
        let model = train(&cfg, &data).with_context(|| format!("trial {k}"))?;
        write_json(&dir.join("model.json"), &model)?;
        write_log(&dir.join("log.jsonl"), &model)?;
        let Some(spec) = &spec else { return Ok(None) };
        let (report, _) = evaluate(&model, spec, &data, &ctx.config.eval, derive_seed(seed, domain::EVAL, 0))?;
        write_json(&dir.join("report.json"), &report)?;
        log::info!("trial {k} seed {seed}: {report:?}");
        Ok(Some(report))
    };
    let reports = (0..trials).into_par_iter().map(run_one).collect::<Result<Vec<_>>>()?;
    let reports: Vec<EvalReport> = reports.into_iter().flatten().collect();
    if !reports.is_empty() {
        for (k, r) in reports.iter().enumerate() {
            println!("trial {k}: {}", describe(r));
        }
        let summary = aggregate(&reports)?;
        write_json(&ctx.path("summary.json"), &summary)?;
        println!("mean: {}", describe_summary(&summary));
    } else {
        println!("trained {trials} model(s) into {}", ctx.out_dir.display());
    }
    Ok(())
}

fn describe(r: &EvalReport) -> String {
    let center = match r.center_captured {
        Some(c) => format!(" center={c}"),
        None => String::new(),
    };
    format!(
        "modes={}/{} 1std={:.3} 2std={:.3} 3std={:.3} low_quality={:.3} w1={:.4}{center}",
        r.modes_captured, r.n_modes, r.pct_1std, r.pct_2std, r.pct_3std, r.low_quality_pct, r.w1_2d
    )
}

fn describe_summary(s: &EvalSummary) -> String {
    let center = match s.center_captured_trials {
        Some(c) => format!(" center={c}/{}", s.trials),
        None => String::new(),
    };
    format!(
        "trials={} modes={:.2} 1std={:.3} 2std={:.3} 3std={:.3} low_quality={:.3} w1={:.4}{center}",
        s.trials, s.modes_captured, s.pct_1std, s.pct_2std, s.pct_3std, s.low_quality_pct, s.w1_2d
    )
}

fn rows(set: &PointSet) -> Result<Vec<[f64; 2]>> {
    ensure!(set.dim() == 2, "plots need 2-D points, got {}-D", set.dim());
    Ok((0..set.len()).map(|i| [set.row(i)[0], set.row(i)[1]]).collect())
}

pub fn eval_cmd(ctx: &Ctx, model_path: &Path, modes: &Path, data_path: &Path) -> Result<()> {
    let model: GanModel = read_json(model_path)?;
    let spec: ModeSpec = read_json(modes)?;
    let data = read_points(data_path, ctx.config.metric)?;
    let seed = ctx.config.seed;
    let (report, generated) = evaluate(&model, &spec, &data, &ctx.config.eval, derive_seed(seed, domain::EVAL, 0))?;
    write_json(&ctx.path("report.json"), &report)?;

    let shown = data.shuffled(derive_seed(seed, domain::SHUFFLE, 0));
    let shown = shown.select(&(0..shown.len().min(ctx.config.eval.n_eval)).collect::<Vec<_>>())?;
    let scatter = svg::scatter(&rows(&shown)?, &rows(&generated)?, &spec.centers, &format!("{} samples", spec.name));
    std::fs::write(ctx.path("scatter.svg"), scatter)?;

    let range = model.provenance.range;
    let max_pairs = ctx.config.train.subsample.max_pairs;
    let real_lpdd = estimate_lpdd(&data, range, max_pairs, derive_seed(seed, domain::PAIRS, 0))?;
    let (gen_logs, title) = match estimate_lpdd(&generated, range, max_pairs, derive_seed(seed, domain::PAIRS, 1)) {
        Ok(g) => {
            let w1 = lpdd_w1(&real_lpdd, &g)?;
            (g.log_distances().to_vec(), format!("pairwise distance distribution, W1 = {w1:.4}"))
        }
        Err(e) => {
            log::warn!("generated LPDD unavailable: {e}");
            (Vec::new(), "pairwise distance distribution, no generated pair in range".to_string())
        }
    };
    let hist = svg::histogram_overlay(real_lpdd.log_distances(), &gen_logs, ["data", "generated"], 60, &title);
    std::fs::write(ctx.path("lpdd.svg"), hist)?;
    ctx.persist("eval")?;
    println!("{}", describe(&report));
    Ok(())
}

pub fn report_cmd(ctx: &Ctx, inputs: &[PathBuf]) -> Result<()> {
    if inputs.is_empty() {
        bail!("no report files given");
    }
    let reports = inputs.iter().map(|p| read_json::<EvalReport>(p)).collect::<Result<Vec<_>>>()?;
    let summary = aggregate(&reports)?;
    write_json(&ctx.path("summary.json"), &summary)?;
    println!("{}", describe_summary(&summary));
    Ok(())
}

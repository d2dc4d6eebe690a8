//! GAN training with a Gaussian-mixture latent space and a log-distance
//! preservation term.
//!
//! The generator objective is `g_loss + beta · dist_loss`, where
//!
//! ```text
//! dist_loss = mean over pairs (i, j) of ( ln d(G(z_i), G(z_j)) − ln ‖z_i − z_j‖₂ )²
//! ```
//!
//! over disjoint random pairs of the latent minibatch. Natural logs are used
//! here; the base-2 form differs by the constant factor `(1 / ln 2)²`, which
//! `beta` absorbs.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embed::{default_latent_dim, embed, EmbeddingResult};
use crate::error::{Error, Result, StageExt};
use crate::metric::{pairwise_range, DistanceRange, MetricKind, PointSet};
use crate::mixture::{GaussianMixture, DEFAULT_SIGMA};
use crate::nn::{AdamConfig, AdamState, Gradients, Mlp, OutputActivation};
use crate::rng::{self, domain};
use crate::subsample::{choose_subsample, SubsampleConfig};

/// Discriminator probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]`
/// before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;
/// Generated pair distances below this are clamped before taking logs.
pub const MIN_PAIR_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of the distance-preservation term.
    pub beta_dist: f64,
    pub batch: usize,
    pub iters: usize,
    pub adam: AdamConfig,
    /// Latent mixture smoothing.
    pub sigma: f64,
    pub seed: u64,
    pub pretrain_iters: usize,
    /// Vanilla control: standard-normal latent and `beta_dist = 0`.
    pub baseline: bool,
    /// Hidden layer widths shared by generator and discriminator.
    pub hidden: Vec<usize>,
    pub subsample: SubsampleConfig,
    pub latent_dim: Option<usize>,
    pub bourgain_t: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta_dist: 0.2,
            batch: 256,
            iters: 3000,
            adam: AdamConfig::default(),
            sigma: DEFAULT_SIGMA,
            seed: 0,
            pretrain_iters: 0,
            baseline: false,
            hidden: vec![128, 128],
            subsample: SubsampleConfig::default(),
            latent_dim: None,
            bourgain_t: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.batch < 2 || self.batch % 2 != 0 {
            return bad("batch must be even and >= 2");
        }
        if self.iters == 0 {
            return bad("iters must be >= 1");
        }
        if !(self.beta_dist >= 0.0 && self.beta_dist.is_finite()) {
            return bad("beta_dist must be finite and >= 0");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        if !(self.adam.lr > 0.0) || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return bad("Adam needs lr > 0 and betas in [0, 1)");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }

    /// The distance weight actually used.
    pub fn effective_beta(&self) -> f64 {
        if self.baseline {
            0.0
        } else {
            self.beta_dist
        }
    }
}

/// Distribution the generator's inputs are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatentSampler {
    Mixture(GaussianMixture),
    StandardNormal { dim: usize },
}

impl LatentSampler {
    pub fn dim(&self) -> usize {
        match self {
            LatentSampler::Mixture(m) => m.dim(),
            LatentSampler::StandardNormal { dim } => *dim,
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Array2<f64> {
        match self {
            LatentSampler::Mixture(m) => m.sample_with(rng, count),
            LatentSampler::StandardNormal { dim } => {
                Array2::from_shape_simple_fn((count, *dim), || rng.sample(StandardNormal))
            }
        }
    }

    fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> Array2<f64> {
        self.sample_with(rng, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iter: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub dist_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub iters: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Summary of the embedding stage kept with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSummary {
    pub d: usize,
    pub t: usize,
    pub rescale_beta: f64,
    pub std0: f64,
    pub seed: u64,
    pub measured_distortion: f64,
}

impl From<&EmbeddingResult> for EmbeddingSummary {
    fn from(e: &EmbeddingResult) -> Self {
        Self {
            d: e.d,
            t: e.t,
            rescale_beta: e.rescale_beta,
            std0: e.std0,
            seed: e.seed,
            measured_distortion: e.measured_distortion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub range: DistanceRange,
    pub subsample_m: usize,
    pub w1_trace: Vec<(usize, f64)>,
    pub embedding: Option<EmbeddingSummary>,
    pub pretrain: Option<PretrainReport>,
}

/// Generator, discriminator and latent distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub latent: LatentSampler,
    pub metric: MetricKind,
    pub provenance: Provenance,
    #[serde(skip)]
    pub logs: Vec<LossRecord>,
}

impl GanModel {
    /// `n` generated samples from the seed's evaluation stream.
    pub fn generate(&self, n: usize, seed: u64) -> Result<PointSet> {
        let z = self.latent.sample_with(&mut rng::stream(seed, domain::EVAL, 0), n);
        PointSet::new(self.generator.forward(z.view())?, self.metric)
    }

    /// GAN losses on a real batch and a latent batch.
    pub fn losses(&self, real: ArrayView2<'_, f64>, latent: ArrayView2<'_, f64>) -> Result<(f64, f64)> {
        let fake = self.generator.forward(latent)?;
        let p_real = self.discriminator.forward(real)?;
        let p_fake = self.discriminator.forward(fake.view())?;
        gan_losses(p_real.as_slice().unwrap(), p_fake.as_slice().unwrap())
    }

    /// Distance-preservation loss on `latent` under a seeded random pairing.
    pub fn dist_loss(&self, latent: ArrayView2<'_, f64>, seed: u64) -> Result<f64> {
        let pairs = random_pairing(latent.nrows(), &mut rng::stream(seed, domain::TRAIN, 1))?;
        let fake = self.generator.forward(latent)?;
        Ok(dist_loss_pairs(fake.view(), latent, &pairs, self.metric)?.0)
    }
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `(d_loss, g_loss)` from discriminator probabilities on real and fake
/// batches. `g_loss` is the non-saturating `−mean ln D(G(z))`.
pub fn gan_losses(p_real: &[f64], p_fake: &[f64]) -> Result<(f64, f64)> {
    if p_real.is_empty() || p_fake.is_empty() {
        return Err(Error::EmptyInput("gan_losses needs non-empty batches"));
    }
    let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|&p| f(clamp_prob(p))).sum::<f64>() / v.len() as f64;
    let d_loss = -mean(p_real, &f64::ln) - mean(p_fake, &|p| (1.0 - p).ln());
    let g_loss = -mean(p_fake, &f64::ln);
    if !(d_loss.is_finite() && g_loss.is_finite()) {
        return Err(Error::Diverged("GAN loss"));
    }
    Ok((d_loss, g_loss))
}

/// Splits `0..batch` into `batch / 2` disjoint random pairs.
pub fn random_pairing<R: Rng + ?Sized>(batch: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    if batch < 2 || batch % 2 != 0 {
        return Err(Error::InvalidInput(format!("pairing needs an even batch >= 2, got {batch}")));
    }
    let mut order: Vec<usize> = (0..batch).collect();
    order.shuffle(rng);
    Ok(order.chunks_exact(2).map(|c| (c[0], c[1])).collect())
}

/// Distance-preservation loss over explicit pairs and its gradient with
/// respect to the generated rows.
pub fn dist_loss_pairs(
    generated: ArrayView2<'_, f64>,
    latent: ArrayView2<'_, f64>,
    pairs: &[(usize, usize)],
    metric: MetricKind,
) -> Result<(f64, Array2<f64>)> {
    if generated.nrows() != latent.nrows() {
        return Err(Error::ShapeMismatch("generated and latent batches differ in size".into()));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("dist loss needs at least one pair"));
    }
    let k = pairs.len() as f64;
    let mut grad = Array2::zeros(generated.raw_dim());
    let mut total = 0.0;
    for &(i, j) in pairs {
        let (gi, gj) = (generated.row(i), generated.row(j));
        let dz = latent
            .row(i)
            .iter()
            .zip(latent.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dz == 0.0 {
            return Err(Error::InvalidInput("identical latent pair".into()));
        }
        let dg_raw = metric.eval(gi.as_slice().unwrap_or(&gi.to_vec()), gj.as_slice().unwrap_or(&gj.to_vec()));
        let clamped = dg_raw < MIN_PAIR_DISTANCE;
        let dg = dg_raw.max(MIN_PAIR_DISTANCE);
        let r = dg.ln() - dz.ln();
        total += r * r;
        if clamped {
            continue;
        }
        // d/dg of r² / k, times dg/dx_i.
        let coef = 2.0 * r / (k * dg);
        for c in 0..generated.ncols() {
            let diff = gi[c] - gj[c];
            let dd = match metric {
                MetricKind::Euclidean => diff / dg,
                MetricKind::Manhattan => diff.signum() * (diff != 0.0) as u8 as f64,
            };
            grad[[i, c]] += coef * dd;
            grad[[j, c]] -= coef * dd;
        }
    }
    let value = total / k;
    if !value.is_finite() {
        return Err(Error::Diverged("distance loss"));
    }
    Ok((value, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainOptions {
    pub iters: usize,
    pub batch: usize,
    pub adam: AdamConfig,
}

/// Mean `d(G(f̄_i), y_i)` over every row.
pub fn pretrain_loss(generator: &Mlp, y: &PointSet, f_bar: &Array2<f64>) -> Result<f64> {
    let out = generator.forward(f_bar.view())?;
    if out.dim() != y.points().dim() {
        return Err(Error::ShapeMismatch("generator output does not match data".into()));
    }
    let metric = y.metric();
    let total: f64 = (0..y.len())
        .map(|i| metric.eval(out.row(i).as_slice().unwrap(), y.row(i)))
        .sum();
    Ok(total / y.len() as f64)
}

/// Supervised warm start: regress `G(f̄_i)` onto `y_i` under the data metric.
pub fn pretrain(
    generator: &mut Mlp,
    y: &PointSet,
    f_bar: &Array2<f64>,
    opts: &PretrainOptions,
    seed: u64,
) -> Result<PretrainReport> {
    if f_bar.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} latent rows for {} data rows",
            f_bar.nrows(),
            y.len()
        )));
    }
    let initial_loss = pretrain_loss(generator, y, f_bar)?;
    let mut adam = AdamState::new(generator, opts.adam);
    let mut rng = rng::stream(seed, domain::PRETRAIN, 0);
    let batch = opts.batch.clamp(1, y.len());
    let metric = y.metric();
    for _ in 0..opts.iters {
        let idx: Vec<usize> = (0..batch).map(|_| rng.random_range(0..y.len())).collect();
        let z = f_bar.select(Axis(0), &idx);
        let target = y.points().select(Axis(0), &idx);
        let cache = generator.forward_cached(z.view())?;
        let mut up = cache.output() - &target;
        for mut row in up.rows_mut() {
            match metric {
                MetricKind::Euclidean => {
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        row /= norm * batch as f64;
                    }
                }
                MetricKind::Manhattan => row.mapv_inplace(|v| v.signum() * (v != 0.0) as u8 as f64 / batch as f64),
            }
        }
        let (grads, _) = generator.backward_cached(&cache, up.view())?;
        adam.step(generator, &grads)?;
    }
    Ok(PretrainReport {
        iters: opts.iters,
        initial_loss,
        final_loss: pretrain_loss(generator, y, f_bar)?,
    })
}

/// Discriminator loss and its parameter gradient on one real and one fake
/// batch. Gradients use the unclamped log.
pub fn discriminator_gradients(
    disc: &Mlp,
    real: ArrayView2<'_, f64>,
    fake: ArrayView2<'_, f64>,
) -> Result<(f64, Gradients)> {
    let c_real = disc.forward_cached(real)?;
    let c_fake = disc.forward_cached(fake)?;
    let (d_loss, _) = gan_losses(c_real.output().as_slice().unwrap(), c_fake.output().as_slice().unwrap())?;
    let (nr, nf) = (real.nrows() as f64, fake.nrows() as f64);
    let up_real = c_real.output().mapv(|p| -1.0 / (nr * p.max(f64::MIN_POSITIVE)));
    let up_fake = c_fake.output().mapv(|p| 1.0 / (nf * (1.0 - p).max(f64::MIN_POSITIVE)));
    let (mut grads, _) = disc.backward_cached(&c_real, up_real.view())?;
    let (g_fake, _) = disc.backward_cached(&c_fake, up_fake.view())?;
    grads.add_assign(&g_fake);
    Ok((d_loss, grads))
}

#[derive(Debug, Clone)]
pub struct GeneratorStep {
    pub g_loss: f64,
    pub dist_loss: f64,
    /// Gradient of `g_loss + beta · dist_loss`.
    pub grads: Gradients,
}

/// Generator losses and the gradient of `g_loss + beta · dist_loss` on a
/// latent batch with a fixed pairing.
pub fn generator_gradients(
    gen: &Mlp,
    disc: &Mlp,
    z: ArrayView2<'_, f64>,
    pairs: &[(usize, usize)],
    beta: f64,
    metric: MetricKind,
) -> Result<GeneratorStep> {
    let n = z.nrows() as f64;
    let c_gen = gen.forward_cached(z)?;
    let c_disc = disc.forward_cached(c_gen.output().view())?;
    let p_fake = c_disc.output();
    let g_loss = -p_fake.iter().map(|&p| clamp_prob(p).ln()).sum::<f64>() / n;
    if !g_loss.is_finite() {
        return Err(Error::Diverged("generator loss"));
    }
    let up = p_fake.mapv(|p| -1.0 / (n * p.max(f64::MIN_POSITIVE)));
    let mut d_out = disc.input_gradient(&c_disc, up.view())?;
    let (dist_loss, dist_grad) = dist_loss_pairs(c_gen.output().view(), z, pairs, metric)?;
    if beta > 0.0 {
        d_out.scaled_add(beta, &dist_grad);
    }
    let (grads, _) = gen.backward_cached(&c_gen, d_out.view())?;
    Ok(GeneratorStep { g_loss, dist_loss, grads })
}

/// Stateful training loop. [`Trainer::new`] runs the data pipeline; each
/// [`Trainer::step`] is one discriminator update followed by one generator
/// update.
pub struct Trainer<'a> {
    config: TrainConfig,
    data: &'a PointSet,
    model: GanModel,
    g_adam: AdamState,
    d_adam: AdamState,
    rng: rng::Rng,
    embedding: Option<EmbeddingResult>,
    subsample_y: PointSet,
}

impl<'a> Trainer<'a> {
    pub fn new(config: TrainConfig, data: &'a PointSet) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let range = pairwise_range(data).stage("range")?;
        let sub = choose_subsample(data, &config.subsample, rng::derive_seed(seed, domain::SUBSAMPLE, 0))
            .stage("subsample")?;
        log::info!("subsample m={} trace={:?}", sub.m, sub.w1_trace);

        let (latent, embedding) = if config.baseline {
            let dim = config.latent_dim.unwrap_or_else(|| default_latent_dim(sub.m));
            (LatentSampler::StandardNormal { dim }, None)
        } else {
            let e = embed(
                &sub.y,
                config.latent_dim,
                config.bourgain_t,
                rng::derive_seed(seed, domain::BOURGAIN, 0),
            )
            .stage("embed")?;
            let mix = GaussianMixture::new(e.f_bar.clone(), config.sigma).stage("mixture")?;
            (LatentSampler::Mixture(mix), Some(e))
        };

        let d = latent.dim();
        let mut g_dims = vec![d];
        g_dims.extend(&config.hidden);
        g_dims.push(data.dim());
        let mut d_dims = vec![data.dim()];
        d_dims.extend(&config.hidden);
        d_dims.push(1);
        let mut generator = Mlp::new(&g_dims, OutputActivation::Identity, rng::derive_seed(seed, domain::INIT, 0))?;
        let discriminator = Mlp::new(&d_dims, OutputActivation::Sigmoid, rng::derive_seed(seed, domain::INIT, 1))?;

        let pretrain_report = match (&embedding, config.pretrain_iters) {
            (Some(e), iters) if iters > 0 => {
                let opts = PretrainOptions {
                    iters,
                    batch: config.batch,
                    adam: config.adam,
                };
                let r = pretrain(&mut generator, &sub.y, &e.f_bar, &opts, rng::derive_seed(seed, domain::PRETRAIN, 0))
                    .stage("pretrain")?;
                log::info!("pretrain loss {:.4} -> {:.4}", r.initial_loss, r.final_loss);
                Some(r)
            }
            _ => None,
        };

        let g_adam = AdamState::new(&generator, config.adam);
        let d_adam = AdamState::new(&discriminator, config.adam);
        let model = GanModel {
            generator,
            discriminator,
            latent,
            metric: data.metric(),
            provenance: Provenance {
                range,
                subsample_m: sub.m,
                w1_trace: sub.w1_trace.clone(),
                embedding: embedding.as_ref().map(EmbeddingSummary::from),
                pretrain: pretrain_report,
            },
            logs: Vec::with_capacity(config.iters),
        };
        Ok(Self {
            rng: rng::stream(seed, domain::TRAIN, 0),
            config,
            data,
            model,
            g_adam,
            d_adam,
            embedding,
            subsample_y: sub.y,
        })
    }

    pub fn model(&self) -> &GanModel {
        &self.model
    }

    pub fn embedding(&self) -> Option<&EmbeddingResult> {
        self.embedding.as_ref()
    }

    pub fn subsample(&self) -> &PointSet {
        &self.subsample_y
    }

    pub fn iteration(&self) -> usize {
        self.model.logs.len()
    }

    fn real_batch(&mut self) -> Array2<f64> {
        let n = self.data.len();
        let idx: Vec<usize> = (0..self.config.batch).map(|_| self.rng.random_range(0..n)).collect();
        self.data.points().select(Axis(0), &idx)
    }

    /// Latent batch and a pairing with no identical latent pair.
    fn latent_batch(&mut self) -> Result<(Array2<f64>, Vec<(usize, usize)>)> {
        let batch = self.config.batch;
        let mut z = self.model.latent.sample_with(&mut self.rng, batch);
        let pairs = random_pairing(batch, &mut self.rng)?;
        for &(i, j) in &pairs {
            let mut tries = 0;
            while z.row(i) == z.row(j) {
                tries += 1;
                if tries > 100 {
                    return Err(Error::InvalidInput("latent sampler keeps producing identical pairs".into()));
                }
                let fresh = self.model.latent.sample_row(&mut self.rng);
                z.row_mut(j).assign(&fresh.row(0));
            }
        }
        Ok((z, pairs))
    }

    /// One discriminator update then one generator update.
    pub fn step(&mut self) -> Result<LossRecord> {
        let iter = self.model.logs.len();

        let real = self.real_batch();
        let z = self.model.latent.sample_with(&mut self.rng, self.config.batch);
        let fake = self.model.generator.forward(z.view())?;
        let (d_loss, d_grads) = discriminator_gradients(&self.model.discriminator, real.view(), fake.view())?;
        self.d_adam.step(&mut self.model.discriminator, &d_grads).stage("discriminator step")?;

        let (z, pairs) = self.latent_batch()?;
        let g = generator_gradients(
            &self.model.generator,
            &self.model.discriminator,
            z.view(),
            &pairs,
            self.config.effective_beta(),
            self.model.metric,
        )?;
        self.g_adam.step(&mut self.model.generator, &g.grads).stage("generator step")?;
        let (g_loss, dist_loss) = (g.g_loss, g.dist_loss);

        let rec = LossRecord {
            iter,
            d_loss,
            g_loss,
            dist_loss,
        };
        self.model.logs.push(rec);
        Ok(rec)
    }

    pub fn run(mut self) -> Result<GanModel> {
        for _ in self.model.logs.len()..self.config.iters {
            self.step().stage("train")?;
        }
        Ok(self.model)
    }

    pub fn into_model(self) -> GanModel {
        self.model
    }
}

/// Full pipeline: range, subsample, embedding, mixture, optional
/// pretraining, then `config.iters` alternating updates.
pub fn train(config: &TrainConfig, data: &PointSet) -> Result<GanModel> {
    Trainer::new(config.clone(), data)?.run()
}

//! Metric embeddings, Gaussian-mixture latent spaces and distance-preserving
//! GAN training, with mode-coverage evaluation on 2-D benchmarks.
//!
//! Pipeline: [`pairwise_range`] → [`choose_subsample`] → [`embed`] →
//! [`GaussianMixture`] → [`train`] → [`evaluate`].

pub mod assignment;
pub mod embed;
pub mod error;
pub mod eval;
pub mod io;
pub mod lpdd;
pub mod metric;
pub mod mixture;
pub mod nn;
pub mod rng;
pub mod subsample;
pub mod synth;
pub mod train;

pub use embed::{embed, EmbeddingResult};
pub use error::{Error, Result};
pub use eval::{aggregate, evaluate, mode_coverage, wasserstein_2d, EvalOptions, EvalReport, EvalSummary, SampleSource};
pub use lpdd::{estimate_lpdd, lpdd_w1, wasserstein1_1d, Lpdd};
pub use metric::{pairwise_range, DistanceRange, MetricKind, PointSet};
pub use mixture::{mixture_lpdd_check, GaussianMixture};
pub use nn::{AdamConfig, AdamState, Mlp, OutputActivation};
pub use subsample::{choose_subsample, SubsampleConfig, SubsampleResult};
pub use synth::{Benchmark, ModeSpec};
pub use train::{train, GanModel, LatentSampler, LossRecord, TrainConfig, Trainer};

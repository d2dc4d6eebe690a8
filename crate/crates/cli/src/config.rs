use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bourgan_core::synth::{self, Benchmark, ModeSpec};
use bourgan_core::{EvalOptions, MetricKind, TrainConfig};
use serde::{Deserialize, Serialize};

/// Dataset generation parameters; unset fields take the benchmark defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub samples: usize,
    pub std: Option<f64>,
    pub radius: Option<f64>,
    pub spacing: Option<f64>,
    pub modes: Option<usize>,
    pub center_modes: Option<usize>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            samples: 20_000,
            std: None,
            radius: None,
            spacing: None,
            modes: None,
            center_modes: None,
        }
    }
}

impl GenParams {
    pub fn spec(&self, bench: Benchmark) -> Result<ModeSpec> {
        let std = self.std.unwrap_or(synth::MODE_STD);
        let spec = match bench {
            Benchmark::Ring => synth::ring_spec(
                self.modes.unwrap_or(synth::RING_MODES),
                self.radius.unwrap_or(synth::RING_RADIUS),
                std,
            ),
            Benchmark::Grid => synth::grid_spec(
                self.modes.unwrap_or(synth::GRID_SIDE),
                self.spacing.unwrap_or(synth::GRID_SPACING),
                std,
            ),
            Benchmark::Circle => synth::circle_spec(
                self.modes.unwrap_or(synth::CIRCLE_RING),
                self.radius.unwrap_or(synth::CIRCLE_RADIUS),
                self.center_modes.unwrap_or(synth::CIRCLE_CENTER),
                std,
            ),
        };
        Ok(spec?)
    }
}

/// Everything a command needs; persisted next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub metric: MetricKind,
    pub trials: usize,
    pub gen: GenParams,
    pub train: TrainConfig,
    pub eval: EvalOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            metric: MetricKind::Euclidean,
            trials: 1,
            gen: GenParams::default(),
            train: TrainConfig::default(),
            eval: EvalOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    /// Seed for trial `k`; a single trial uses the run seed itself.
    pub fn trial_seed(&self, k: usize) -> u64 {
        if self.trials <= 1 {
            self.seed
        } else {
            bourgan_core::rng::derive_seed(self.seed, bourgan_core::rng::domain::TRIAL, k as u64)
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

//! Synthetic 2-D mode benchmarks: Ring, Grid and Circle.
//!
//! Every benchmark is an equal-weight mixture of isotropic 2-D Gaussians
//! with a shared standard deviation. Centers may repeat (the Circle places
//! several coincident components at the origin), which weights that location
//! proportionally.

use std::f64::consts::TAU;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricKind, PointSet};
use crate::rng::{self, domain};

pub const RING_MODES: usize = 8;
pub const RING_RADIUS: f64 = 1.0;
pub const GRID_SIDE: usize = 5;
pub const GRID_SPACING: f64 = 2.0;
pub const CIRCLE_RING: usize = 100;
pub const CIRCLE_RADIUS: f64 = 2.0;
pub const CIRCLE_CENTER: usize = 3;
/// Per-mode standard deviation shared by all three benchmarks.
pub const MODE_STD: f64 = 0.05;

/// Mode centers and the per-mode standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub name: String,
    pub centers: Vec<[f64; 2]>,
    pub std: f64,
    /// Index of the central mode, for benchmarks that have one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub central: Option<usize>,
}

impl ModeSpec {
    pub fn new(name: impl Into<String>, centers: Vec<[f64; 2]>, std: f64, central: Option<usize>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::EmptyInput("mode spec needs at least one center"));
        }
        if centers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mode centers"));
        }
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::InvalidConfig(format!("mode std must be >= 0, got {std}")));
        }
        if central.is_some_and(|c| c >= centers.len()) {
            return Err(Error::InvalidConfig("central mode index out of range".into()));
        }
        Ok(Self {
            name: name.into(),
            centers,
            std,
            central,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.centers.len()
    }

    /// `n` i.i.d. draws: a uniformly chosen center plus `std`-scaled noise.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PointSet> {
        if n == 0 {
            return Err(Error::TooFewPoints { needed: 1, found: 0 });
        }
        let mut rng = rng::stream(seed, domain::SYNTH, 0);
        let mut pts = Array2::zeros((n, 2));
        for mut row in pts.rows_mut() {
            let c = self.centers[rng.random_range(0..self.centers.len())];
            let ex: f64 = rng.sample(StandardNormal);
            let ey: f64 = rng.sample(StandardNormal);
            row[0] = c[0] + self.std * ex;
            row[1] = c[1] + self.std * ey;
        }
        PointSet::new(pts, MetricKind::Euclidean)
    }
}

fn ring_centers(n: usize, radius: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

pub fn ring_spec(n_modes: usize, radius: f64, std: f64) -> Result<ModeSpec> {
    if n_modes == 0 {
        return Err(Error::InvalidConfig("ring needs at least one mode".into()));
    }
    ModeSpec::new("ring", ring_centers(n_modes, radius), std, None)
}

pub fn grid_spec(side: usize, spacing: f64, std: f64) -> Result<ModeSpec> {
    if side == 0 {
        return Err(Error::InvalidConfig("grid side must be >= 1".into()));
    }
    let offset = (side - 1) as f64 / 2.0;
    let coord = |k: usize| (k as f64 - offset) * spacing;
    let centers = (0..side)
        .flat_map(|i| (0..side).map(move |j| [coord(i), coord(j)]))
        .collect();
    ModeSpec::new("grid", centers, std, None)
}

pub fn circle_spec(n_ring: usize, radius: f64, n_center: usize, std: f64) -> Result<ModeSpec> {
    if n_ring + n_center == 0 {
        return Err(Error::InvalidConfig("circle needs at least one mode".into()));
    }
    let mut centers = ring_centers(n_ring, radius);
    centers.extend(std::iter::repeat_n([0.0, 0.0], n_center));
    let central = (n_center > 0).then_some(n_ring);
    ModeSpec::new("circle", centers, std, central)
}

/// Eight (by default) modes equally spaced on a circle, starting at angle 0.
pub fn make_ring(n_modes: usize, radius: f64, std: f64, n_samples: usize, seed: u64) -> Result<(PointSet, ModeSpec)> {
    let spec = ring_spec(n_modes, radius, std)?;
    Ok((spec.sample(n_samples, seed)?, spec))
}

/// `side × side` modes on a lattice with the given spacing, centred at the origin.
pub fn make_grid(side: usize, spacing: f64, std: f64, n_samples: usize, seed: u64) -> Result<(PointSet, ModeSpec)> {
    let spec = grid_spec(side, spacing, std)?;
    Ok((spec.sample(n_samples, seed)?, spec))
}

/// `n_ring` modes on a circle plus `n_center` coincident modes at the origin.
pub fn make_circle(
    n_ring: usize,
    radius: f64,
    n_center: usize,
    std: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(PointSet, ModeSpec)> {
    let spec = circle_spec(n_ring, radius, n_center, std)?;
    Ok((spec.sample(n_samples, seed)?, spec))
}

/// The three named benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Ring,
    Grid,
    Circle,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Ring, Benchmark::Grid, Benchmark::Circle];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Ring => "ring",
            Benchmark::Grid => "grid",
            Benchmark::Circle => "circle",
        }
    }

    /// Mode layout with the default geometry and `std`.
    pub fn default_spec(self) -> ModeSpec {
        match self {
            Benchmark::Ring => ring_spec(RING_MODES, RING_RADIUS, MODE_STD),
            Benchmark::Grid => grid_spec(GRID_SIDE, GRID_SPACING, MODE_STD),
            Benchmark::Circle => circle_spec(CIRCLE_RING, CIRCLE_RADIUS, CIRCLE_CENTER, MODE_STD),
        }
        .expect("default geometry is valid")
    }
}

impl std::str::FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Ok(Benchmark::Ring),
            "grid" => Ok(Benchmark::Grid),
            "circle" => Ok(Benchmark::Circle),
            other => Err(Error::InvalidInput(format!("unknown benchmark `{other}`"))),
        }
    }
}

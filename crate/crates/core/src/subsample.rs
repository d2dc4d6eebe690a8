//! Adaptive choice of the subsample size.
//!
//! Starting from `m_start`, the subsample size doubles until the LPDD of the
//! subsample stops moving (W1 between consecutive sizes below `tol`) or the
//! size cap is reached. Each size gets its own independent draw.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpdd::{estimate_lpdd, lpdd_w1, Lpdd, DEFAULT_MAX_PAIRS};
use crate::metric::{pairwise_range, DistanceRange, PointSet};
use crate::rng::{self, domain};

pub const DEFAULT_TOL: f64 = 0.05;
pub const DEFAULT_M_START: usize = 32;
pub const DEFAULT_M_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubsampleConfig {
    pub tol: f64,
    pub m_start: usize,
    pub m_cap: usize,
    pub max_pairs: usize,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            m_start: DEFAULT_M_START,
            m_cap: DEFAULT_M_CAP,
            max_pairs: DEFAULT_MAX_PAIRS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubsampleResult {
    pub y: PointSet,
    /// Row indices of `y` in the source set.
    pub indices: Vec<usize>,
    pub m: usize,
    /// `(m, W1)` for each comparison made; `m` is the larger size compared.
    pub w1_trace: Vec<(usize, f64)>,
    pub range: DistanceRange,
}

fn draw(set: &PointSet, m: usize, seed: u64, step: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, domain::SUBSAMPLE, step);
    let mut idx = index::sample(&mut rng, set.len(), m).into_vec();
    idx.sort_unstable();
    idx
}

/// Runs the doubling loop with the range taken from the full set.
pub fn choose_subsample(set: &PointSet, config: &SubsampleConfig, seed: u64) -> Result<SubsampleResult> {
    let SubsampleConfig {
        tol,
        m_start,
        m_cap,
        max_pairs,
    } = *config;
    if set.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: set.len(),
        });
    }
    if m_start < 2 || m_cap < m_start || !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "subsample needs m_start >= 2, m_cap >= m_start and tol > 0 (got {m_start}, {m_cap}, {tol})"
        )));
    }
    let range = pairwise_range(set)?;
    let n = set.len();
    let limit = n.min(m_cap);

    let lpdd_of = |idx: &[usize], step: u64| -> Result<Lpdd> {
        let y = set.select(idx)?;
        estimate_lpdd(&y, range, max_pairs, rng::derive_seed(seed, domain::PAIRS, step))
    };

    let mut step = 0u64;
    let mut m = m_start.min(n);
    let mut current = draw(set, m, seed, step);
    let mut trace = Vec::new();
    if m < limit {
        let mut current_lpdd = lpdd_of(&current, step)?;
        loop {
            let next_m = if 2 * m <= limit {
                2 * m
            } else if limit == n {
                n
            } else {
                break;
            };
            step += 1;
            let next = draw(set, next_m, seed, step);
            let next_lpdd = lpdd_of(&next, step)?;
            let w = lpdd_w1(&current_lpdd, &next_lpdd)?;
            trace.push((next_m, w));
            log::debug!("subsample m={next_m} W1={w:.4}");
            m = next_m;
            current = next;
            current_lpdd = next_lpdd;
            if w < tol || m == limit {
                break;
            }
        }
    }

    Ok(SubsampleResult {
        y: set.select(&current)?,
        indices: current,
        m,
        w1_trace: trace,
        range,
    })
}

//! Logarithmic pairwise distance distributions (LPDDs) and exact 1-D
//! Wasserstein-1 distance between empirical distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{sample_pairs, DistanceRange, PointSet};

/// Pair budget for LPDD estimation.
pub const DEFAULT_MAX_PAIRS: usize = 262_144;

/// Empirical distribution of `log2(dist(x, y))` over pairs whose distance lies
/// inside a [`DistanceRange`]. Samples are kept raw and sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lpdd {
    log_distances: Vec<f64>,
    range: DistanceRange,
    n_pairs_total: usize,
}

impl Lpdd {
    /// Builds an LPDD from raw distances, dropping those outside `range`.
    pub fn from_distances(distances: &[f64], range: DistanceRange) -> Result<Self> {
        let mut log_distances: Vec<f64> = distances
            .iter()
            .filter(|&&d| range.contains(d))
            .map(|d| d.log2())
            .collect();
        if log_distances.is_empty() {
            return Err(Error::EmptyLpdd {
                lambda: range.lambda(),
                upper: range.upper(),
            });
        }
        log_distances.sort_by(f64::total_cmp);
        Ok(Self {
            log_distances,
            range,
            n_pairs_total: distances.len(),
        })
    }

    pub fn log_distances(&self) -> &[f64] {
        &self.log_distances
    }

    pub fn range(&self) -> DistanceRange {
        self.range
    }

    pub fn n_pairs_total(&self) -> usize {
        self.n_pairs_total
    }

    pub fn n_pairs_in_range(&self) -> usize {
        self.log_distances.len()
    }

    /// `{lambda, Lambda, log_distances}` export record.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lambda": self.range.lambda(),
            "Lambda": self.range.upper(),
            "log_distances": self.log_distances,
        })
    }
}

/// LPDD of `set` restricted to `range`, from at most `max_pairs` pairs.
pub fn estimate_lpdd(
    set: &PointSet,
    range: DistanceRange,
    max_pairs: usize,
    seed: u64,
) -> Result<Lpdd> {
    let pairs = sample_pairs(set.len(), max_pairs, seed)?;
    let distances: Vec<f64> = pairs.iter().map(|&(i, j)| set.dist(i, j)).collect();
    Lpdd::from_distances(&distances, range)
}

/// Exact W1 between the uniform distributions on two sorted samples.
///
/// Equal sizes use the matched order statistics. Otherwise the area between
/// the two step CDFs is integrated over the merged breakpoints; CDF heights
/// are kept as integer counts so each segment's height difference is exact.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("wasserstein1_1d needs non-empty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("wasserstein1_1d input"));
    }
    if !is_sorted(a) || !is_sorted(b) {
        return Err(Error::InvalidInput("wasserstein1_1d inputs must be sorted".into()));
    }
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        return Ok(s / a.len() as f64);
    }

    let (na, nb) = (a.len() as u64, b.len() as u64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut x = a[0].min(b[0]);
    let mut area = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        // CDF heights on [x, next): i/na and j/nb.
        let gap = (i as u64 * nb).abs_diff(j as u64 * na);
        area += gap as f64 * (next - x);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        x = next;
    }
    Ok(area / (na * nb) as f64)
}

/// W1 between two LPDDs.
pub fn lpdd_w1(p: &Lpdd, q: &Lpdd) -> Result<f64> {
    wasserstein1_1d(&p.log_distances, &q.log_distances)
}

fn is_sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

//! Point sets, distance metrics and pair statistics.

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::index;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// Ground metric on data vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MetricKind {
    #[default]
    #[serde(rename = "l2")]
    Euclidean,
    #[serde(rename = "l1")]
    Manhattan,
}

impl MetricKind {
    /// Distance between two equal-length slices. No shape checks.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            MetricKind::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            MetricKind::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "l2",
            MetricKind::Manhattan => "l1",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(MetricKind::Euclidean),
            "l1" | "manhattan" => Ok(MetricKind::Manhattan),
            other => Err(Error::InvalidInput(format!("unknown metric `{other}`"))),
        }
    }
}

/// Distance between `a` and `b` under `metric`.
pub fn distance(a: &[f64], b: &[f64], metric: MetricKind) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("distance input"));
    }
    Ok(metric.eval(a, b))
}

/// A finite multiset of equal-dimension real vectors with its metric.
///
/// Rows are stored contiguously, so [`PointSet::row`] hands out plain slices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Array2<f64>,
    metric: MetricKind,
}

impl PointSet {
    pub fn new(points: Array2<f64>, metric: MetricKind) -> Result<Self> {
        let (n, dim) = points.dim();
        if n == 0 {
            return Err(Error::TooFewPoints { needed: 1, found: 0 });
        }
        if dim == 0 {
            return Err(Error::InvalidInput("points must have dimension >= 1".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        let points = points.as_standard_layout().into_owned();
        Ok(Self { points, metric })
    }

    pub fn from_rows(rows: &[Vec<f64>], metric: MetricKind) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((rows.len(), dim), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(points, metric)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn into_points(self) -> Array2<f64> {
        self.points
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn row_view(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    /// Distance between stored points `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.eval(self.row(i), self.row(j))
    }

    /// New set holding the rows at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, found: 0 });
        }
        Ok(Self {
            points: self.points.select(Axis(0), indices),
            metric: self.metric,
        })
    }

    /// Every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(&self.points * s, self.metric)
    }

    /// Rows permuted uniformly at random under `seed`.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng::stream(seed, domain::SHUFFLE, 0));
        Self {
            points: self.points.select(Axis(0), &order),
            metric: self.metric,
        }
    }
}

/// Conditioning range `[lambda, upper]` for log-distances, with `0 < 2·lambda <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRange {
    lambda: f64,
    #[serde(rename = "Lambda")]
    upper: f64,
}

impl DistanceRange {
    pub fn new(lambda: f64, upper: f64) -> Result<Self> {
        if !(lambda.is_finite() && upper.is_finite() && lambda > 0.0 && 2.0 * lambda <= upper) {
            return Err(Error::InvalidInput(format!(
                "distance range needs 0 < 2*lambda <= Lambda, got ({lambda}, {upper})"
            )));
        }
        Ok(Self { lambda, upper })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    pub fn contains(&self, d: f64) -> bool {
        d >= self.lambda && d <= self.upper
    }
}

pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Maps a rank in `0..n(n-1)/2` to the pair `(i, j)`, `i < j`, in row-major order.
pub(crate) fn unrank_pair(n: usize, k: u64) -> (usize, usize) {
    let n64 = n as u64;
    let row_start = |i: u64| i * (2 * n64 - i - 1) / 2;
    let b = (2 * n64 - 1) as f64;
    let mut i = ((b - (b * b - 8.0 * k as f64).max(0.0).sqrt()) / 2.0).floor() as u64;
    i = i.min(n64 - 2);
    while i > 0 && row_start(i) > k {
        i -= 1;
    }
    while i + 1 < n64 - 1 && row_start(i + 1) <= k {
        i += 1;
    }
    let j = k - row_start(i) + i + 1;
    (i as usize, j as usize)
}

/// Index pairs used for pair statistics: all of them when there are at most
/// `max_pairs`, otherwise `max_pairs` distinct pairs drawn uniformly under `seed`.
pub fn sample_pairs(n: usize, max_pairs: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: n });
    }
    let total = pair_count(n);
    if total <= max_pairs as u64 {
        let mut pairs = Vec::with_capacity(total as usize);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        return Ok(pairs);
    }
    if max_pairs == 0 {
        return Err(Error::InvalidInput("max_pairs must be positive".into()));
    }
    let total = usize::try_from(total)
        .map_err(|_| Error::InvalidInput("too many points to enumerate pairs".into()))?;
    let mut rng = rng::stream(seed, domain::PAIRS, 0);
    Ok(index::sample(&mut rng, total, max_pairs)
        .into_iter()
        .map(|k| unrank_pair(n, k as u64))
        .collect())
}

/// Pair distances; exhaustive when `n(n-1)/2 <= max_pairs`, sampled otherwise.
pub fn pairwise_distances(set: &PointSet, max_pairs: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(sample_pairs(set.len(), max_pairs, seed)?
        .into_iter()
        .map(|(i, j)| set.dist(i, j))
        .collect())
}

/// `(lambda, Lambda)` from consecutive pairs in stored order.
///
/// Pairs of identical points are skipped. `Lambda` is clamped up to `2·lambda`.
pub fn pairwise_range(set: &PointSet) -> Result<DistanceRange> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 1..set.len() {
        let d = set.dist(i - 1, i);
        if d > 0.0 {
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    if !lo.is_finite() {
        return Err(Error::DegenerateDataset);
    }
    DistanceRange::new(lo, hi.max(2.0 * lo))
}

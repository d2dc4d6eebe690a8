//! Bourgain embedding of a finite metric space into low-dimensional ℓ2.
//!
//! The map is built in three stages:
//!
//! 1. **Bourgain coordinates.** For `i = 1..=⌈log2 m⌉` and `j = 1..=t`, a random
//!    subset `S(i,j)` keeps each point with probability `2^-i`; coordinate
//!    `(i-1)·t + j` of `g(y)` is `dist(y, S(i,j))`, with `dist(y, ∅) = 0`.
//! 2. **Gaussian projection.** `h = G·g` with `G` a `d × (⌈log2 m⌉·t)` matrix of
//!    i.i.d. standard normals, unscaled.
//! 3. **Rescaling.** Dividing by the smallest stretch ratio over distinct pairs
//!    makes the map non-contracting: `‖f(y) − f(y')‖₂ ≥ dist(y, y')`.
//!
//! The result is then centred and divided by a single scalar spread so that
//! it is invariant to a uniform rescaling of the input metric.

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::PointSet;
use crate::rng::{self, domain};

/// Number of scales `⌈log2 m⌉`.
pub fn scale_count(m: usize) -> usize {
    (usize::BITS - (m.max(2) - 1).leading_zeros()) as usize
}

/// Default repetitions per scale: `⌈2·log2 m⌉`.
pub fn default_repetitions(m: usize) -> usize {
    ((2.0 * (m.max(2) as f64).log2()).ceil() as usize).max(1)
}

/// Default latent dimension: 55 at `m = 4096`, otherwise `max(8, ⌈4.5·log2 m⌉)`.
pub fn default_latent_dim(m: usize) -> usize {
    if m == 4096 {
        return 55;
    }
    ((4.5 * (m.max(2) as f64).log2()).ceil() as usize).max(8)
}

/// Membership lists for every `S(i,j)`, in coordinate order.
pub fn draw_subsets(m: usize, t: usize, seed: u64) -> Vec<Vec<usize>> {
    let scales = scale_count(m);
    (0..scales * t)
        .map(|col| {
            let i = col / t + 1;
            let p = 0.5f64.powi(i as i32);
            let mut rng = rng::stream(seed, domain::BOURGAIN, col as u64);
            (0..m).filter(|_| rng.random::<f64>() < p).collect()
        })
        .collect()
}

/// `g(y)_c = min_{s ∈ S_c} dist(y, s)`, zero for empty subsets.
pub fn bourgain_coordinates(y: &PointSet, subsets: &[Vec<usize>]) -> Array2<f64> {
    let m = y.len();
    let columns: Vec<Vec<f64>> = subsets
        .par_iter()
        .map(|s| {
            if s.is_empty() {
                return vec![0.0; m];
            }
            (0..m)
                .map(|a| {
                    s.iter()
                        .map(|&b| y.dist(a, b))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();
    let mut g = Array2::zeros((m, subsets.len()));
    for (c, col) in columns.into_iter().enumerate() {
        g.column_mut(c).assign(&Array1::from(col));
    }
    g
}

/// Raw Bourgain map, `m × (⌈log2 m⌉·t)`.
pub fn bourgain_raw(y: &PointSet, t: usize, seed: u64) -> Result<Array2<f64>> {
    if y.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: y.len(),
        });
    }
    if t == 0 {
        return Err(Error::InvalidConfig("Bourgain repetitions t must be >= 1".into()));
    }
    Ok(bourgain_coordinates(y, &draw_subsets(y.len(), t, seed)))
}

/// Gaussian matrix with `d` rows, drawn row-major from the seed's JL stream.
pub fn gaussian_matrix(d: usize, k: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng::stream(seed, domain::JL, 0);
    Array2::from_shape_simple_fn((d, k), || rng.sample(StandardNormal))
}

/// Rows of `g` mapped through a `d × k` standard Gaussian matrix.
pub fn jl_project(g: &Array2<f64>, d: usize, seed: u64) -> Result<Array2<f64>> {
    if d == 0 {
        return Err(Error::InvalidConfig("latent dimension must be >= 1".into()));
    }
    let proj = gaussian_matrix(d, g.ncols(), seed);
    Ok(g.dot(&proj.t()))
}

#[inline]
fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Minimum and maximum of `‖h_a − h_b‖₂ / dist(a, b)` over distinct pairs.
fn stretch_bounds(h: &Array2<f64>, y: &PointSet) -> Result<(f64, f64)> {
    if h.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} embedded rows for {} points",
            h.nrows(),
            y.len()
        )));
    }
    let h = h.as_standard_layout();
    let hs = h.as_slice().expect("standard layout");
    let d = h.ncols();
    let row = |i: usize| &hs[i * d..(i + 1) * d];
    let m = y.len();
    let (lo, hi, collided) = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            let mut collided = false;
            for b in a + 1..m {
                let dy = y.dist(a, b);
                if dy > 0.0 {
                    let dh = l2(row(a), row(b));
                    collided |= dh == 0.0;
                    let r = dh / dy;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
            (lo, hi, collided)
        })
        .reduce(
            || (f64::INFINITY, 0.0, false),
            |x, z| (x.0.min(z.0), x.1.max(z.1), x.2 || z.2),
        );
    if collided {
        return Err(Error::JlCollision);
    }
    if !lo.is_finite() {
        return Err(Error::DegenerateDataset);
    }
    Ok((lo, hi))
}

/// Divides `h` by its smallest stretch ratio so no distinct pair contracts.
pub fn rescale(h: &Array2<f64>, y: &PointSet) -> Result<(Array2<f64>, f64)> {
    let (beta, _) = stretch_bounds(h, y)?;
    Ok((h / beta, beta))
}

/// Embedding of a subsample plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    /// Rescaled, non-contracting embedding; row `i` is the image of `y_i`.
    pub f: Array2<f64>,
    /// `(f − mean0) / std0`.
    pub f_bar: Array2<f64>,
    pub d: usize,
    pub t: usize,
    pub rescale_beta: f64,
    pub mean0: Array1<f64>,
    pub std0: f64,
    /// Seed that produced `f` (differs from the requested seed after a re-seed).
    pub seed: u64,
    pub reseeded: bool,
    /// Largest `‖f(y) − f(y')‖₂ / dist(y, y')` over distinct pairs.
    pub measured_distortion: f64,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRecord {
    #[serde(rename = "F")]
    f: Vec<f64>,
    m: usize,
    d: usize,
    t: usize,
    rescale_beta: f64,
    mean0: Vec<f64>,
    std0: f64,
    seed: u64,
    measured_distortion: f64,
}

impl EmbeddingResult {
    pub fn m(&self) -> usize {
        self.f.nrows()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rec = EmbeddingRecord {
            f: self.f.iter().copied().collect(),
            m: self.m(),
            d: self.d,
            t: self.t,
            rescale_beta: self.rescale_beta,
            mean0: self.mean0.to_vec(),
            std0: self.std0,
            seed: self.seed,
            measured_distortion: self.measured_distortion,
        };
        serde_json::to_value(rec).expect("embedding record serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let rec: EmbeddingRecord = serde_json::from_value(value)?;
        let f = Array2::from_shape_vec((rec.m, rec.d), rec.f)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let mean0 = Array1::from(rec.mean0);
        if mean0.len() != rec.d || !(rec.std0 > 0.0) {
            return Err(Error::InvalidInput("inconsistent embedding record".into()));
        }
        let f_bar = (&f - &mean0) / rec.std0;
        Ok(Self {
            f,
            f_bar,
            d: rec.d,
            t: rec.t,
            rescale_beta: rec.rescale_beta,
            mean0,
            std0: rec.std0,
            seed: rec.seed,
            reseeded: false,
            measured_distortion: rec.measured_distortion,
        })
    }
}

/// Column means and the scalar root-mean-square deviation over all entries.
pub fn normalization_stats(f: &Array2<f64>) -> (Array1<f64>, f64) {
    let mean = f.mean_axis(Axis(0)).expect("non-empty embedding");
    let var = (f - &mean).mapv(|v| v * v).mean().expect("non-empty embedding");
    (mean, var.sqrt())
}

fn embed_once(y: &PointSet, d: usize, t: usize, seed: u64) -> Result<EmbeddingResult> {
    let g = bourgain_raw(y, t, seed)?;
    let h = jl_project(&g, d, seed)?;
    let (lo, hi) = stretch_bounds(&h, y)?;
    let f = h / lo;
    let (mean0, std0) = normalization_stats(&f);
    let f_bar = (&f - &mean0) / std0;
    Ok(EmbeddingResult {
        f,
        f_bar,
        d,
        t,
        rescale_beta: lo,
        mean0,
        std0,
        seed,
        reseeded: false,
        measured_distortion: hi / lo,
    })
}

/// Full embedding with optional overrides for `d` and `t`.
///
/// A collision (distinct points mapped to one spot) triggers a single retry
/// with a derived seed before giving up.
pub fn embed(y: &PointSet, d: Option<usize>, t: Option<usize>, seed: u64) -> Result<EmbeddingResult> {
    let m = y.len();
    if m < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: m });
    }
    let d = d.unwrap_or_else(|| default_latent_dim(m));
    let t = t.unwrap_or_else(|| default_repetitions(m));
    match embed_once(y, d, t, seed) {
        Err(Error::JlCollision) => {
            let retry = rng::derive_seed(seed, domain::JL, 1);
            log::warn!("embedding collision with seed {seed}; retrying with seed {retry}");
            let mut out = embed_once(y, d, t, retry)?;
            out.reseeded = true;
            Ok(out)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricKind;
    use ndarray::array;
    use rand_distr::Distribution;

    fn random_set(m: usize, dim: usize, seed: u64) -> PointSet {
        let mut rng = rng::stream(seed, 77, 0);
        let data: Vec<f64> = (0..m * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        PointSet::new(Array2::from_shape_vec((m, dim), data).unwrap(), MetricKind::Euclidean).unwrap()
    }

    #[test]
    fn defaults() {
        assert_eq!(scale_count(2), 1);
        assert_eq!(scale_count(4), 2);
        assert_eq!(scale_count(5), 3);
        assert_eq!(scale_count(4096), 12);
        assert_eq!(default_latent_dim(4096), 55);
        assert_eq!(default_latent_dim(2), 8);
        assert_eq!(default_latent_dim(256), 36);
        assert_eq!(default_repetitions(4096), 24);
    }

    #[test]
    fn identical_points_get_identical_rows() {
        let y = PointSet::new(array![[1.0, 2.0], [1.0, 2.0], [5.0, 0.0]], MetricKind::Euclidean).unwrap();
        let g = bourgain_raw(&y, 4, 3).unwrap();
        assert_eq!(g.row(0), g.row(1));
    }

    #[test]
    fn empty_subsets_give_zero_matrix() {
        let y = random_set(8, 2, 1);
        let subsets = vec![Vec::new(); 6];
        let g = bourgain_coordinates(&y, &subsets);
        assert_eq!(g.dim(), (8, 6));
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coordinates_are_one_lipschitz() {
        let y = PointSet::new(
            array![[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.0, 5.2]],
            MetricKind::Euclidean,
        )
        .unwrap();
        for seed in 0..20 {
            let g = bourgain_raw(&y, 6, seed).unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    let dy = y.dist(a, b);
                    for c in 0..g.ncols() {
                        assert!((g[[a, c]] - g[[b, c]]).abs() <= dy + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn jl_is_linear() {
        let z = Array2::<f64>::zeros((5, 7));
        assert!(jl_project(&z, 3, 0).unwrap().iter().all(|&v| v == 0.0));

        let v = array![1.0, -2.0, 0.5];
        let mult = [1.0, 2.0, -3.0];
        let mut g = Array2::zeros((3, 3));
        for (r, &k) in mult.iter().enumerate() {
            g.row_mut(r).assign(&(&v * k));
        }
        let h = jl_project(&g, 4, 9).unwrap();
        for (r, &k) in mult.iter().enumerate() {
            for c in 0..4 {
                assert!((h[[r, c]] - k * h[[0, c]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jl_stretch_ratios_are_finite() {
        let g = random_set(16, 8, 2).into_points();
        let h = jl_project(&g, 4, 5).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for a in 0..16 {
            for b in a + 1..16 {
                let r = l2(h.row(a).as_slice().unwrap(), h.row(b).as_slice().unwrap())
                    / l2(g.row(a).as_slice().unwrap(), g.row(b).as_slice().unwrap());
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        assert!(lo > 0.0 && hi.is_finite());
        log::info!("JL ratio spread {}", hi / lo);
    }

    #[test]
    fn rescale_examples() {
        let y = PointSet::new(array![[0.0, 0.0], [3.0, 4.0], [3.0, 0.0]], MetricKind::Euclidean).unwrap();
        let (f, beta) = rescale(y.points(), &y).unwrap();
        assert_eq!(beta, 1.0);
        assert_eq!(&f, y.points());

        let (f, beta) = rescale(&(y.points() * 10.0), &y).unwrap();
        assert!((beta - 10.0).abs() < 1e-12);
        assert!((&f - y.points()).iter().all(|v| v.abs() < 1e-12));

        let collapsed = array![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
        assert!(matches!(rescale(&collapsed, &y), Err(Error::JlCollision)));
    }

    #[test]
    fn rescaled_embedding_never_contracts() {
        for seed in 0..5 {
            let y = random_set(40, 3, seed);
            let g = bourgain_raw(&y, 8, seed).unwrap();
            let h = jl_project(&g, 10, seed).unwrap();
            let (f, _) = rescale(&h, &y).unwrap();
            for a in 0..40 {
                for b in a + 1..40 {
                    let dy = y.dist(a, b);
                    let df = l2(f.row(a).as_slice().unwrap(), f.row(b).as_slice().unwrap());
                    assert!(df >= dy * (1.0 - 1e-9));
                }
            }
        }
    }

    #[test]
    fn two_points_stay_apart() {
        let y = PointSet::new(array![[0.0, 0.0], [1.0, 1.0]], MetricKind::Euclidean).unwrap();
        let e = embed(&y, None, None, 1).unwrap();
        assert_eq!(e.f_bar.dim(), (2, 8));
        let d = l2(e.f_bar.row(0).as_slice().unwrap(), e.f_bar.row(1).as_slice().unwrap());
        assert!(d > 0.0);
        assert!(e.measured_distortion >= 1.0);
    }

    #[test]
    fn normalized_embedding_is_scale_invariant() {
        let y = random_set(64, 2, 3);
        let e1 = embed(&y, None, None, 8).unwrap();
        for s in [2.0, 10.0, 0.01] {
            let e2 = embed(&y.scaled(s).unwrap(), None, None, 8).unwrap();
            let tol = 1e-9 * s * e1.f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!((&e2.f - &(&e1.f * s)).iter().all(|v| v.abs() <= tol));
            assert!((&e2.f_bar - &e1.f_bar).iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn normalization_has_unit_rms() {
        let e = embed(&random_set(50, 4, 4), Some(6), None, 2).unwrap();
        let (mean, std) = normalization_stats(&e.f_bar);
        assert!(mean.iter().all(|v| v.abs() < 1e-12));
        assert!((std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let e = embed(&random_set(20, 2, 5), None, None, 3).unwrap();
        let back = EmbeddingResult::from_json(e.to_json()).unwrap();
        assert_eq!(back.f, e.f);
        assert_eq!(back.seed, e.seed);
        assert!((&back.f_bar - &e.f_bar).iter().all(|v| v.abs() < 1e-12));
    }
}

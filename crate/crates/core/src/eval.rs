//! Mode-coverage metrics for the 2-D benchmarks and exact empirical W1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::metric::{MetricKind, PointSet};
use crate::rng::{self, domain};
use crate::synth::ModeSpec;
use crate::train::GanModel;

/// Largest cloud `wasserstein_2d` accepts.
pub const MAX_W1_POINTS: usize = 4096;
pub const DEFAULT_N_EVAL: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub modes_captured: usize,
    pub n_modes: usize,
    pub pct_1std: f64,
    pub pct_2std: f64,
    pub pct_3std: f64,
    pub low_quality_pct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_captured: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub modes_captured: usize,
    pub n_modes: usize,
    pub pct_1std: f64,
    pub pct_2std: f64,
    pub pct_3std: f64,
    pub low_quality_pct: f64,
    pub w1_2d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_captured: Option<bool>,
    pub n_eval_samples: usize,
}

impl EvalReport {
    pub fn from_parts(cov: Coverage, w1_2d: f64, n_eval_samples: usize) -> Self {
        Self {
            modes_captured: cov.modes_captured,
            n_modes: cov.n_modes,
            pct_1std: cov.pct_1std,
            pct_2std: cov.pct_2std,
            pct_3std: cov.pct_3std,
            low_quality_pct: cov.low_quality_pct,
            w1_2d,
            center_captured: cov.center_captured,
            n_eval_samples,
        }
    }
}

fn check_2d(set: &PointSet, what: &'static str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    if set.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: set.dim(),
        });
    }
    Ok(())
}

/// Coverage statistics of `samples` against the modes of `spec`.
///
/// A mode is captured when some sample lies within one `std` of it; the
/// k-std fractions attribute each sample to its nearest center.
pub fn mode_coverage(samples: &PointSet, spec: &ModeSpec) -> Result<Coverage> {
    check_2d(samples, "mode coverage needs samples")?;
    let std = spec.std;
    let k = spec.n_modes();
    let mut captured = vec![false; k];
    let mut within = [0usize; 3];
    for i in 0..samples.len() {
        let p = samples.row(i);
        let mut nearest = f64::INFINITY;
        for (c, center) in spec.centers.iter().enumerate() {
            let d = (p[0] - center[0]).hypot(p[1] - center[1]);
            nearest = nearest.min(d);
            if d <= std {
                captured[c] = true;
            }
        }
        for (s, count) in within.iter_mut().enumerate() {
            if nearest <= (s + 1) as f64 * std {
                *count += 1;
            }
        }
    }
    let n = samples.len() as f64;
    let pct = within.map(|c| c as f64 / n);
    Ok(Coverage {
        modes_captured: captured.iter().filter(|&&c| c).count(),
        n_modes: k,
        pct_1std: pct[0],
        pct_2std: pct[1],
        pct_3std: pct[2],
        low_quality_pct: (samples.len() - within[2]) as f64 / n,
        center_captured: spec.central.map(|c| {
            let origin = spec.centers[c];
            spec.centers
                .iter()
                .zip(&captured)
                .any(|(center, &cap)| cap && *center == origin)
        }),
    })
}

/// Exact W1 between two equal-size empirical clouds with Euclidean cost.
pub fn wasserstein_2d(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "wasserstein_2d needs equal counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::EmptyInput("wasserstein_2d needs points"));
    }
    if n > MAX_W1_POINTS {
        return Err(Error::InvalidInput(format!("at most {MAX_W1_POINTS} points per cloud, got {n}")));
    }
    let mut cost = vec![0.0; n * n];
    cost.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let p = a.row(i);
        for (j, c) in row.iter_mut().enumerate() {
            *c = MetricKind::Euclidean.eval(p, b.row(j));
        }
    });
    let (_, total) = min_cost_assignment(&cost, n)?;
    Ok(total / n as f64)
}

/// Anything that can produce seeded 2-D samples for evaluation.
pub trait SampleSource {
    fn draw(&self, n: usize, seed: u64) -> Result<PointSet>;
}

impl SampleSource for GanModel {
    fn draw(&self, n: usize, seed: u64) -> Result<PointSet> {
        self.generate(n, seed)
    }
}

impl SampleSource for ModeSpec {
    fn draw(&self, n: usize, seed: u64) -> Result<PointSet> {
        self.sample(n, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub n_eval: usize,
    /// Cap on the cloud size used for W1; `None` uses all `n_eval` samples.
    pub w1_points: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_eval: DEFAULT_N_EVAL,
            w1_points: None,
        }
    }
}

/// Draws `n_eval` samples from `source` and reports coverage plus W1 against
/// a seeded subset of `real` of the same size.
pub fn evaluate<S: SampleSource + ?Sized>(
    source: &S,
    spec: &ModeSpec,
    real: &PointSet,
    opts: &EvalOptions,
    seed: u64,
) -> Result<(EvalReport, PointSet)> {
    if opts.n_eval == 0 {
        return Err(Error::InvalidConfig("n_eval must be positive".into()));
    }
    let generated = source.draw(opts.n_eval, seed)?;
    check_2d(&generated, "evaluation needs samples")?;
    check_2d(real, "evaluation needs real samples")?;
    let cov = mode_coverage(&generated, spec)?;
    let n_w1 = opts.w1_points.unwrap_or(opts.n_eval).min(opts.n_eval);
    if real.len() < n_w1 {
        return Err(Error::TooFewPoints {
            needed: n_w1,
            found: real.len(),
        });
    }
    let real_idx = rand::seq::index::sample(&mut rng::stream(seed, domain::EVAL, 1), real.len(), n_w1).into_vec();
    let gen_idx: Vec<usize> = (0..n_w1).collect();
    let w1 = wasserstein_2d(&generated.select(&gen_idx)?, &real.select(&real_idx)?)?;
    Ok((EvalReport::from_parts(cov, w1, opts.n_eval), generated))
}

/// Per-field means over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub trials: usize,
    pub modes_captured: f64,
    pub pct_1std: f64,
    pub pct_2std: f64,
    pub pct_3std: f64,
    pub low_quality_pct: f64,
    pub w1_2d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_captured_trials: Option<usize>,
}

pub fn aggregate(reports: &[EvalReport]) -> Result<EvalSummary> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no reports to aggregate"));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let center = if reports.iter().any(|r| r.center_captured.is_some()) {
        Some(reports.iter().filter(|r| r.center_captured == Some(true)).count())
    } else {
        None
    };
    Ok(EvalSummary {
        trials: reports.len(),
        modes_captured: mean(|r| r.modes_captured as f64),
        pct_1std: mean(|r| r.pct_1std),
        pct_2std: mean(|r| r.pct_2std),
        pct_3std: mean(|r| r.pct_3std),
        low_quality_pct: mean(|r| r.low_quality_pct),
        w1_2d: mean(|r| r.w1_2d),
        center_captured_trials: center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{circle_spec, grid_spec, ring_spec};
    use ndarray::Array2;

    fn pts(rows: &[[f64; 2]]) -> PointSet {
        let v: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        PointSet::from_rows(&v, MetricKind::Euclidean).unwrap()
    }

    #[test]
    fn exact_centers_capture_everything() {
        let spec = grid_spec(5, 2.0, 0.05).unwrap();
        let cov = mode_coverage(&pts(&spec.centers), &spec).unwrap();
        assert_eq!(cov.modes_captured, 25);
        assert_eq!(cov.pct_1std, 1.0);
        assert_eq!(cov.low_quality_pct, 0.0);
        assert_eq!(cov.center_captured, None);
    }

    #[test]
    fn ideal_samples_hit_gaussian_fractions() {
        // Radial distance of a 2-D Gaussian, so k-std mass is 1 − exp(−k²/2).
        let spec = ring_spec(8, 1.0, 0.05).unwrap();
        let cov = mode_coverage(&spec.sample(40_000, 1).unwrap(), &spec).unwrap();
        for (got, k) in [(cov.pct_1std, 1.0f64), (cov.pct_2std, 2.0), (cov.pct_3std, 3.0)] {
            let want = 1.0 - (-k * k / 2.0).exp();
            assert!((got - want).abs() < 0.01, "{k}: {got} vs {want}");
        }
        assert_eq!(cov.modes_captured, 8);
    }

    #[test]
    fn far_sample_is_low_quality() {
        let spec = ring_spec(8, 1.0, 0.05).unwrap();
        let mut rows = spec.centers.clone();
        rows.push([10.0, 10.0]);
        let cov = mode_coverage(&pts(&rows), &spec).unwrap();
        assert!((cov.low_quality_pct - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn circle_center_flag() {
        let spec = circle_spec(100, 2.0, 3, 0.05).unwrap();
        let ring_only: Vec<[f64; 2]> = spec.centers[..100].to_vec();
        assert_eq!(mode_coverage(&pts(&ring_only), &spec).unwrap().center_captured, Some(false));
        assert_eq!(mode_coverage(&pts(&[[0.01, 0.0]]), &spec).unwrap().center_captured, Some(true));
    }

    #[test]
    fn coverage_rejects_non_2d() {
        let spec = ring_spec(8, 1.0, 0.05).unwrap();
        let s = PointSet::new(Array2::zeros((3, 3)), MetricKind::Euclidean).unwrap();
        assert!(mode_coverage(&s, &spec).is_err());
    }

    #[test]
    fn w1_examples() {
        let a = pts(&[[0.0, 0.0]]);
        let b = pts(&[[3.0, 4.0]]);
        assert_eq!(wasserstein_2d(&a, &b).unwrap(), 5.0);
        let c = pts(&[[0.0, 0.0], [1.0, 2.0], [5.0, -1.0]]);
        assert_eq!(wasserstein_2d(&c, &c).unwrap(), 0.0);
        assert!(wasserstein_2d(&a, &c).is_err());
    }

    #[test]
    fn collapsed_source_captures_one_mode() {
        struct Fixed;
        impl SampleSource for Fixed {
            fn draw(&self, n: usize, _: u64) -> Result<PointSet> {
                PointSet::new(Array2::from_shape_fn((n, 2), |(_, j)| [1.0, 0.0][j]), MetricKind::Euclidean)
            }
        }
        let spec = ring_spec(8, 1.0, 0.05).unwrap();
        let real = spec.sample(500, 0).unwrap();
        let opts = EvalOptions { n_eval: 200, w1_points: None };
        let (r, _) = evaluate(&Fixed, &spec, &real, &opts, 1).unwrap();
        assert_eq!(r.modes_captured, 1);
        assert!(r.w1_2d > 0.8);
        assert_eq!(r.n_eval_samples, 200);
    }

    #[test]
    fn ideal_source_matches_plain_coverage() {
        let spec = ring_spec(8, 1.0, 0.05).unwrap();
        let real = spec.sample(600, 0).unwrap();
        let opts = EvalOptions { n_eval: 300, w1_points: None };
        let (r, gen) = evaluate(&spec, &spec, &real, &opts, 5).unwrap();
        let cov = mode_coverage(&gen, &spec).unwrap();
        assert_eq!(EvalReport::from_parts(cov, r.w1_2d, 300), r);
        assert!(r.w1_2d < 0.2);
    }

    #[test]
    fn aggregate_means() {
        let base = EvalReport {
            modes_captured: 8,
            n_modes: 8,
            pct_1std: 0.5,
            pct_2std: 0.8,
            pct_3std: 0.9,
            low_quality_pct: 0.1,
            w1_2d: 1.0,
            center_captured: Some(true),
            n_eval_samples: 10,
        };
        let other = EvalReport {
            modes_captured: 6,
            w1_2d: 3.0,
            center_captured: Some(false),
            ..base
        };
        let s = aggregate(&[base, other]).unwrap();
        assert_eq!(s.modes_captured, 7.0);
        assert_eq!(s.w1_2d, 2.0);
        assert_eq!(s.center_captured_trials, Some(1));
        assert!(aggregate(&[]).is_err());
    }
}

//! Shared fixtures for the benchmarks.

use bourgan_core::synth::make_ring;
use bourgan_core::PointSet;

/// Ring samples with the default geometry.
pub fn ring(n: usize, seed: u64) -> PointSet {
    make_ring(8, 1.0, 0.05, n, seed).expect("valid ring").0
}


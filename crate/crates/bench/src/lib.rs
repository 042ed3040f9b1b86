//! Fixtures shared by the criterion benchmarks.

use levyest_core::rng::SeedProvenance;
use levyest_core::simulate::{sample_exact, IncrementSample};
use levyest_core::{JumpLaw, LevyModel, TruncationGeometry};

pub fn compound_poisson() -> LevyModel {
    LevyModel::compound_poisson(1.0, JumpLaw::truncated_normal(0.0, 1.0, -5.0, 5.0).unwrap()).unwrap()
}

pub fn cp_geometry() -> TruncationGeometry {
    TruncationGeometry::for_model(&compound_poisson(), 0.0, 5.0).unwrap()
}

/// n increments of the compound Poisson fixture at Δ = n^{-1/2}.
pub fn cp_sample(n: usize) -> IncrementSample {
    let delta = (n as f64).powf(-0.5);
    sample_exact(&compound_poisson(), n, delta, SeedProvenance::new(1, 0)).unwrap()
}

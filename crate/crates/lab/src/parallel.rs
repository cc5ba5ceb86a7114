//! Rayon drivers for the chunked estimators of the core crate.
//!
//! Chunks are mapped in parallel and merged in index order, so results do
//! not depend on the number of threads.

use rayon::prelude::*;
use weyl_scatter_core::geometry::AxisBox;
use weyl_scatter_core::measure::{
    chunk_ranges, scatter_chunk, volume_chunk, volume_estimate, Region, ScatterAccumulator,
};
use weyl_scatter_core::{Estimate, MeasureError, ScatterStats, Scene, TraceLimits};

pub fn estimate_scatter(
    scene: &Scene,
    n_samples: u64,
    seed: u64,
    limits: &TraceLimits,
) -> Result<ScatterStats, MeasureError> {
    if n_samples == 0 {
        return Err(MeasureError::NoSamples);
    }
    let ranges: Vec<_> = chunk_ranges(n_samples).collect();
    let chunks: Vec<ScatterAccumulator> = ranges
        .into_par_iter()
        .map(|r| scatter_chunk(scene, seed, r, limits))
        .collect::<Result<_, _>>()?;
    let mut acc = ScatterAccumulator::default();
    for c in &chunks {
        acc.merge(c);
    }
    acc.finish(seed)
}

pub fn mc_volume<R: Region + Sync + ?Sized>(
    region: &R,
    bbox: &AxisBox,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate, MeasureError> {
    if n_samples == 0 {
        return Err(MeasureError::NoSamples);
    }
    let ranges: Vec<_> = chunk_ranges(n_samples).collect();
    let hits: u64 = ranges
        .into_par_iter()
        .map(|r| volume_chunk(region, bbox, seed, r))
        .sum();
    Ok(volume_estimate(bbox, hits, n_samples, seed))
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

//! Billiard scattering around tubular neighbourhoods of submanifolds.
//!
//! Rays leave the boundary of a convex container, reflect specularly off the
//! boundary of a tube `T(K, ε)` around a closed submanifold `K`, and leave
//! again. Averaging the travel time over the invariant boundary measure gives
//! the phase volume of the billiard table, from which the tube volume, and
//! through Weyl's tube polynomial the intrinsic invariants of `K`, can be
//! read off.
//!
//! The crate is `no_std` and only needs `alloc`. Parallel drivers, file
//! formats and the command line live in the `weyl-scatter` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod billiard;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod obstacle;
pub mod recovery;
pub mod rng;
pub mod weyl;

pub use billiard::{
    chord_length, reverse, trace, trace_with, BoundaryPhasePoint, Obstacle, Orientation, Scene,
    Segment, SegmentEnd, TraceLimits, TraceOutcome,
};
pub use error::{BilliardError, GeometryError, MeasureError, ObstacleError, RecoveryError};
pub use geometry::{AxisBox, Container, Point, Ray, UnitVector, Vector, MAX_DIM, T_MIN_CLIP};
pub use measure::{Estimate, ScatterStats};
pub use obstacle::{BubbleTube, CoreShape, NondegeneracyReport, SurfaceHit, WeylTube};
pub use weyl::{ShapeInvariants, WeylPolynomial};

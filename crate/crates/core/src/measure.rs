//! Boundary sampling under the invariant measure, dimensional constants and
//! Monte Carlo estimators.
//!
//! Work is split into fixed chunks of [`CHUNK`] consecutive sample indices.
//! Each chunk is reduced on its own and chunk results are merged in index
//! order, so any driver that respects that order (sequential here, rayon in
//! the std crate) produces bit-identical statistics.

use core::f64::consts::PI;
use core::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::billiard::{
    chord_length, trace, BoundaryPhasePoint, Obstacle, Orientation, Scene, TraceLimits,
    TraceOutcome,
};
use crate::error::MeasureError;
use crate::geometry::{AxisBox, Container, Point, UnitVector, Vector, MAX_DIM};
use crate::obstacle::{BubbleTube, WeylTube};
use crate::rng::sample_rng;

/// Samples per reduction chunk.
pub const CHUNK: u64 = 8192;

/// Area `σ_m = 2π^{(m+1)/2} / Γ((m+1)/2)` of the unit `m`-sphere.
pub fn sphere_area(m: usize) -> f64 {
    // σ_m = 2π σ_{m−2} / (m − 1)
    let mut s = if m % 2 == 0 { 2.0 } else { 2.0 * PI };
    let mut j = 2 + m % 2;
    while j <= m {
        s *= 2.0 * PI / (j - 1) as f64;
        j += 2;
    }
    s
}

/// Volume `θ_m = π^{m/2} / Γ(m/2 + 1)` of the unit `m`-ball.
pub fn ball_volume(m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        sphere_area(m - 1) / m as f64
    }
}

/// Monte Carlo result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            stderr: self.stderr * factor.abs(),
            ..*self
        }
    }
}

/// Running count, mean and centred second moment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        let wb = other.count as f64 / n;
        self.mean += d * wb;
        self.m2 += other.m2 + d * d * self.count as f64 * wb;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn estimate(&self, seed: u64) -> Estimate {
        let stderr = if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        };
        Estimate {
            mean: self.mean,
            stderr,
            n_samples: self.count,
            seed,
        }
    }
}

/// Summary of a scattering run.
///
/// Means are over exited samples; the fractions are over all samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterStats {
    pub mean_length: Estimate,
    /// Mean of `chord − L_ε`, nonzero only on rays that meet the tube.
    pub diff_mean: Estimate,
    pub trapped_fraction: f64,
    pub corner_fraction: f64,
    pub mean_bounces: f64,
    pub n_samples: u64,
    pub n_trapped: u64,
    pub n_corner: u64,
}

impl ScatterStats {
    /// `∫ L_ε ω` over the non-trapped inward boundary.
    pub fn length_integral(&self, container: &Container) -> Estimate {
        self.mean_length.scaled(boundary_mass(container))
    }
}

/// Total mass `θ_{n−1}·vol(∂M)` of the inward boundary measure.
pub fn boundary_mass(container: &Container) -> f64 {
    ball_volume(container.dim() - 1) * container.boundary_area()
}

/// Chunk-level reduction of a scattering run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScatterAccumulator {
    pub length: Moments,
    pub diff: Moments,
    pub total: u64,
    pub trapped: u64,
    pub corner: u64,
    pub bounces: u64,
}

impl ScatterAccumulator {
    pub fn merge(&mut self, other: &Self) {
        self.length.merge(&other.length);
        self.diff.merge(&other.diff);
        self.total += other.total;
        self.trapped += other.trapped;
        self.corner += other.corner;
        self.bounces += other.bounces;
    }

    pub fn finish(&self, seed: u64) -> Result<ScatterStats, MeasureError> {
        if self.total == 0 {
            return Err(MeasureError::NoSamples);
        }
        if self.length.count == 0 {
            return Err(MeasureError::AllTrapped(self.total));
        }
        let n = self.total as f64;
        Ok(ScatterStats {
            mean_length: self.length.estimate(seed),
            diff_mean: self.diff.estimate(seed),
            trapped_fraction: self.trapped as f64 / n,
            corner_fraction: self.corner as f64 / n,
            mean_bounces: self.bounces as f64 / n,
            n_samples: self.total,
            n_trapped: self.trapped,
            n_corner: self.corner,
        })
    }
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    let mut c = [0.0; MAX_DIM];
    for x in c.iter_mut().take(dim) {
        *x = rng.sample(StandardNormal);
    }
    Vector::from_lanes(c, dim)
}

fn unit_gaussian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let g = gaussian_vector(rng, dim);
        let r = g.norm();
        if r > 1e-300 {
            return g * (1.0 / r);
        }
    }
}

// Uniform point of the unit ball of `normal^⊥`, lifted to the hemisphere
// facing `-normal`.
fn cosine_direction<R: Rng + ?Sized>(rng: &mut R, normal: &UnitVector) -> UnitVector {
    let n = normal.dim();
    loop {
        let g = gaussian_vector(rng, n);
        let tangent = g - **normal * normal.dot(&g);
        let len = tangent.norm();
        if len < 1e-300 {
            continue;
        }
        let u: f64 = rng.random();
        let rho = u.powf(1.0 / (n as f64 - 1.0));
        let lift = (1.0 - rho * rho).max(0.0).sqrt();
        if lift <= 1e-12 {
            continue;
        }
        let dir = tangent * (rho / len) - **normal * lift;
        return UnitVector::new_unchecked(dir * (1.0 / dir.norm()));
    }
}

/// Draws an inward phase point with density `ω^{n−1} / (θ_{n−1} vol ∂M)`:
/// the foot is uniform on `∂M`, the direction cosine-weighted.
pub fn sample_inward<R: Rng + ?Sized>(c: &Container, rng: &mut R) -> BoundaryPhasePoint {
    let (foot, normal) = match c {
        Container::Ball { center, radius } => {
            let u = unit_gaussian(rng, c.dim());
            (*center + u * *radius, UnitVector::new_unchecked(u))
        }
        Container::AxisBox(b) => sample_box_face(b, rng),
    };
    let dir = cosine_direction(rng, &normal);
    BoundaryPhasePoint {
        foot,
        dir,
        orientation: Orientation::Inward,
    }
}

fn sample_box_face<R: Rng + ?Sized>(b: &AxisBox, rng: &mut R) -> (Point, UnitVector) {
    let n = b.dim();
    let total = (0..n).map(|i| 2.0 * b.face_area(i)).sum::<f64>();
    let mut pick = rng.random::<f64>() * total;
    let mut face = (n - 1, true);
    'outer: for i in 0..n {
        for upper in [false, true] {
            let a = b.face_area(i);
            if pick < a {
                face = (i, upper);
                break 'outer;
            }
            pick -= a;
        }
    }
    let (axis, upper) = face;
    let mut c = [0.0; MAX_DIM];
    for (j, x) in c.iter_mut().enumerate().take(n) {
        *x = if j == axis {
            if upper {
                b.max[j]
            } else {
                b.min[j]
            }
        } else {
            b.min[j] + rng.random::<f64>() * b.side(j)
        };
    }
    let mut e = Vector::basis(n, axis).expect("axis in range");
    if !upper {
        e = -e;
    }
    (Vector::from_lanes(c, n), UnitVector::new_unchecked(e))
}

/// Consecutive index ranges of at most [`CHUNK`] samples covering `0..n`.
pub fn chunk_ranges(n: u64) -> impl Iterator<Item = Range<u64>> + Clone {
    (0..n.div_ceil(CHUNK)).map(move |i| i * CHUNK..((i + 1) * CHUNK).min(n))
}

/// Per-sample result of a scattering run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterSample {
    pub start: BoundaryPhasePoint,
    pub outcome: TraceOutcome,
    pub chord: f64,
}

/// Traces sample `index` of the run keyed by `seed`.
pub fn scatter_sample(
    scene: &Scene,
    seed: u64,
    index: u64,
    limits: &TraceLimits,
) -> Result<ScatterSample, MeasureError> {
    let mut rng = sample_rng(seed, index);
    let start = sample_inward(scene.container(), &mut rng);
    let chord = chord_length(scene.container(), &start)?;
    let outcome = if scene.obstacle().is_none() {
        // free chord; skip the generic loop
        TraceOutcome::Exited {
            exit: BoundaryPhasePoint {
                foot: start.foot.offset(&start.dir, chord),
                dir: start.dir,
                orientation: Orientation::Outward,
            },
            length: chord,
            bounces: 0,
        }
    } else {
        trace(scene, &start, limits)?
    };
    Ok(ScatterSample {
        start,
        outcome,
        chord,
    })
}

/// Reduces the samples with indices in `range`.
pub fn scatter_chunk(
    scene: &Scene,
    seed: u64,
    range: Range<u64>,
    limits: &TraceLimits,
) -> Result<ScatterAccumulator, MeasureError> {
    let mut acc = ScatterAccumulator::default();
    for i in range {
        let s = scatter_sample(scene, seed, i, limits)?;
        acc.total += 1;
        acc.bounces += s.outcome.bounces();
        match s.outcome {
            TraceOutcome::Exited { length, .. } => {
                acc.length.push(length);
                acc.diff.push(s.chord - length);
            }
            TraceOutcome::PresumedTrapped { .. } => acc.trapped += 1,
            TraceOutcome::CornerTerminated { .. } => acc.corner += 1,
        }
    }
    Ok(acc)
}

/// Sequential scattering estimate over `n_samples` boundary samples.
pub fn estimate_scatter(
    scene: &Scene,
    n_samples: u64,
    seed: u64,
    limits: &TraceLimits,
) -> Result<ScatterStats, MeasureError> {
    if n_samples == 0 {
        return Err(MeasureError::NoSamples);
    }
    let mut acc = ScatterAccumulator::default();
    for r in chunk_ranges(n_samples) {
        acc.merge(&scatter_chunk(scene, seed, r, limits)?);
    }
    acc.finish(seed)
}

/// Membership test for volume estimation.
pub trait Region {
    fn contains(&self, p: &Point) -> bool;
}

impl Region for WeylTube {
    fn contains(&self, p: &Point) -> bool {
        WeylTube::contains(self, p)
    }
}

impl Region for BubbleTube {
    fn contains(&self, p: &Point) -> bool {
        BubbleTube::contains(self, p)
    }
}

impl Region for Obstacle {
    fn contains(&self, p: &Point) -> bool {
        Obstacle::contains(self, p)
    }
}

impl Region for Container {
    fn contains(&self, p: &Point) -> bool {
        Container::contains(self, p)
    }
}

/// Counts hits of `region` among the uniform box samples in `range`.
pub fn volume_chunk<R: Region + ?Sized>(
    region: &R,
    bbox: &AxisBox,
    seed: u64,
    range: Range<u64>,
) -> u64 {
    let n = bbox.dim();
    let mut hits = 0;
    for i in range {
        let mut rng = sample_rng(seed, i);
        let mut c = [0.0; MAX_DIM];
        for (j, x) in c.iter_mut().enumerate().take(n) {
            *x = bbox.min[j] + rng.random::<f64>() * bbox.side(j);
        }
        if region.contains(&Vector::from_lanes(c, n)) {
            hits += 1;
        }
    }
    hits
}

/// `vol(bbox) × hit fraction` with its binomial standard error.
pub fn volume_estimate(bbox: &AxisBox, hits: u64, n_samples: u64, seed: u64) -> Estimate {
    let n = n_samples as f64;
    let p = hits as f64 / n;
    let v = bbox.volume();
    let var = if n_samples > 1 {
        p * (1.0 - p) / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        mean: v * p,
        stderr: v * var.sqrt(),
        n_samples,
        seed,
    }
}

/// Hit-or-miss volume of `region`, which must lie inside `bbox`.
pub fn mc_volume<R: Region + ?Sized>(
    region: &R,
    bbox: &AxisBox,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate, MeasureError> {
    if n_samples == 0 {
        return Err(MeasureError::NoSamples);
    }
    let hits = chunk_ranges(n_samples)
        .map(|r| volume_chunk(region, bbox, seed, r))
        .sum();
    Ok(volume_estimate(bbox, hits, n_samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacle::CoreShape;
    use approx::assert_relative_eq;

    #[test]
    fn constants_match_gamma_form() {
        for m in 0..12usize {
            let h = (m as f64 + 1.0) / 2.0;
            let gamma = 2.0 * PI.powf(h) / libm::tgamma(h);
            assert_relative_eq!(sphere_area(m), gamma, max_relative = 1e-13);
            let h = m as f64 / 2.0;
            assert_relative_eq!(
                ball_volume(m),
                PI.powf(h) / libm::tgamma(h + 1.0),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn constants() {
        assert_relative_eq!(sphere_area(0), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(1), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
        // σ_{m−1} = m θ_m
        for m in 1..9 {
            assert_relative_eq!(
                sphere_area(m - 1),
                m as f64 * ball_volume(m),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: alloc::vec::Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count, all.count);
        assert_relative_eq!(a.mean, all.mean, max_relative = 1e-13);
        assert_relative_eq!(a.m2, all.m2, max_relative = 1e-12);
    }

    #[test]
    fn chunks_cover_range() {
        let v: alloc::vec::Vec<_> = chunk_ranges(2 * CHUNK + 5).collect();
        assert_eq!(v, [0..CHUNK, CHUNK..2 * CHUNK, 2 * CHUNK..2 * CHUNK + 5]);
        assert_eq!(chunk_ranges(0).count(), 0);
    }

    #[test]
    fn inward_samples_ball() {
        let c = Container::unit_ball(3).unwrap();
        let n = 200_000u64;
        let mut cos = Moments::default();
        let mut upper = 0u64;
        for i in 0..n {
            let mut rng = sample_rng(11, i);
            let s = sample_inward(&c, &mut rng);
            assert_eq!(s.orientation, Orientation::Inward);
            assert!((s.foot.norm() - 1.0).abs() < 1e-12);
            assert!((s.dir.norm() - 1.0).abs() < 1e-12);
            let inward = -s.foot;
            let cs = s.dir.dot(&inward);
            assert!(cs > 0.0);
            cos.push(cs);
            if s.foot[2] > 0.0 {
                upper += 1;
            }
        }
        let e = cos.estimate(11);
        assert!((e.mean - 2.0 / 3.0).abs() < 3.0 * e.stderr, "{e:?}");
        let frac = upper as f64 / n as f64;
        let sd = (0.25 / n as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn inward_samples_box_use_face_areas() {
        let b = AxisBox::new(
            Vector::new(&[0.0, 0.0, 0.0]).unwrap(),
            Vector::new(&[2.0, 1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let c = Container::AxisBox(b);
        let n = 100_000u64;
        let mut on_x_faces = 0u64;
        for i in 0..n {
            let s = sample_inward(&c, &mut sample_rng(5, i));
            assert!(c.depth(&s.foot).abs() < 1e-12);
            let normal = crate::geometry::outward_normal(&c, &s.foot).unwrap();
            assert!(s.dir.dot(&normal) < 0.0);
            if s.foot[0] == 0.0 || s.foot[0] == 2.0 {
                on_x_faces += 1;
            }
        }
        // x faces: 2 of total area 10
        let p = 0.2;
        let frac = on_x_faces as f64 / n as f64;
        assert!((frac - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn empty_scene_mean_chord() {
        let c = Container::unit_ball(3).unwrap();
        let scene = Scene::empty(c);
        let stats = estimate_scatter(&scene, 100_000, 1, &TraceLimits::for_container(&c)).unwrap();
        let e = stats.mean_length;
        assert!((e.mean - 4.0 / 3.0).abs() < 3.0 * e.stderr, "{e:?}");
        assert_eq!(stats.diff_mean.mean, 0.0);
        assert_eq!(stats.trapped_fraction, 0.0);
    }

    #[test]
    fn mc_volume_of_ball_and_torus() {
        let ball = Container::unit_ball(3).unwrap();
        let e = mc_volume(&ball, &ball.bounding_box(), 200_000, 3).unwrap();
        assert!((e.mean - 4.0 * PI / 3.0).abs() < 3.0 * e.stderr);
        let tube = WeylTube::new(CoreShape::circle(0.25).unwrap(), 3, 0.05).unwrap();
        let e = mc_volume(&tube, &tube.bounding_box(), 200_000, 3).unwrap();
        assert!((e.mean - 0.0123370).abs() < 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn all_trapped_is_an_error() {
        let acc = ScatterAccumulator {
            total: 4,
            trapped: 4,
            ..Default::default()
        };
        assert_eq!(acc.finish(0), Err(MeasureError::AllTrapped(4)));
    }
}

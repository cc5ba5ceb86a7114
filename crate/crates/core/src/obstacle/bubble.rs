use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ball_interval, CoreShape, SurfaceHit};
use crate::error::ObstacleError;
use crate::geometry::{check_dim, ray_hit_sphere, AxisBox, Point, Ray, UnitVector, Vector};

/// Default corner tolerance as a fraction of ε.
pub const CORNER_TOLERANCE: f64 = 1e-7;

/// Hits closer than this to the inside of another ball are not on the union's boundary.
const INTERIOR_TOL: f64 = 1e-12;

/// Tamed bubbling tube: a finite union of closed `ε`-balls centred on the core.
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleTube {
    centers: Vec<Point>,
    radius: f64,
    corner_tolerance: f64,
    bound_center: Point,
    bound_radius: f64,
}

impl BubbleTube {
    /// Union of balls of radius `radius` about `centers`.
    ///
    /// Coverage of a core and transversality are not checked here; see
    /// [`BubbleTube::around`] and [`check_nondegenerate`].
    pub fn new(centers: Vec<Point>, radius: f64) -> Result<Self, ObstacleError> {
        let first = centers.first().ok_or(ObstacleError::NoCenters)?;
        check_dim(first.dim())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ObstacleError::InvalidShape("ball radius must be positive"));
        }
        for (i, c) in centers.iter().enumerate() {
            first.same_dim(c)?;
            if !c.is_finite() {
                return Err(crate::error::GeometryError::NonFinite.into());
            }
            for (j, d) in centers[..i].iter().enumerate() {
                if c == d {
                    return Err(ObstacleError::CoincidentCenters(j, i));
                }
            }
        }
        let mut bound_center = Vector::zeros(first.dim())?;
        for c in &centers {
            bound_center = bound_center + *c;
        }
        bound_center = bound_center * (1.0 / centers.len() as f64);
        let bound_radius = centers
            .iter()
            .map(|c| c.distance(&bound_center))
            .fold(0.0, f64::max)
            + radius;
        Ok(Self {
            centers,
            radius,
            corner_tolerance: CORNER_TOLERANCE * radius,
            bound_center,
            bound_radius,
        })
    }

    /// Bubbles placed on `core` (see [`sample_bubble_centers`]).
    pub fn around(
        core: &CoreShape,
        dim: usize,
        epsilon: f64,
        count: usize,
    ) -> Result<Self, ObstacleError> {
        let centers = sample_bubble_centers(core, dim, epsilon, count)?;
        Self::new(centers, epsilon)
    }

    pub fn with_corner_tolerance(mut self, tol: f64) -> Self {
        self.corner_tolerance = tol;
        self
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn corner_tolerance(&self) -> f64 {
        self.corner_tolerance
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    pub fn contains(&self, p: &Point) -> bool {
        let r2 = self.radius * self.radius;
        self.centers.iter().any(|c| (*p - *c).norm_sq() <= r2)
    }

    pub fn bounding_box(&self) -> AxisBox {
        let n = self.dim();
        let mut lo = [f64::INFINITY; crate::geometry::MAX_DIM];
        let mut hi = [f64::NEG_INFINITY; crate::geometry::MAX_DIM];
        for c in &self.centers {
            for i in 0..n {
                lo[i] = lo[i].min(c[i] - self.radius);
                hi[i] = hi[i].max(c[i] + self.radius);
            }
        }
        for i in n..crate::geometry::MAX_DIM {
            lo[i] = 0.0;
            hi[i] = 0.0;
        }
        AxisBox {
            min: Vector::from_lanes(lo, n),
            max: Vector::from_lanes(hi, n),
        }
    }

    /// Nearest point where the ray enters the union of balls.
    ///
    /// Arcs of a sphere lying inside a neighbouring ball are skipped. A hit
    /// within the corner tolerance of a second sphere is flagged as a corner.
    pub fn ray_hit(&self, ray: &Ray) -> Option<SurfaceHit> {
        ball_interval(
            &ray.origin,
            &ray.direction,
            &self.bound_center,
            self.bound_radius,
        )?;
        let mut floor = (f64::NEG_INFINITY, usize::MAX);
        loop {
            // next candidate after `floor` in (t, index) order
            let mut best: Option<(f64, usize)> = None;
            for (i, c) in self.centers.iter().enumerate() {
                if let Some(t) = ray_hit_sphere(ray, c, self.radius) {
                    let after = t > floor.0 || (t == floor.0 && i > floor.1);
                    if after && best.is_none_or(|(bt, bi)| t < bt || (t == bt && i < bi)) {
                        best = Some((t, i));
                    }
                }
            }
            let (t, i) = best?;
            let p = ray.at(t);
            let inner = self.radius - INTERIOR_TOL;
            let mut corner = false;
            let mut buried = false;
            for (j, c) in self.centers.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = p.distance(c);
                if d < inner {
                    buried = true;
                    break;
                }
                if (d - self.radius).abs() < self.corner_tolerance {
                    corner = true;
                }
            }
            if buried {
                floor = (t, i);
                continue;
            }
            let normal = UnitVector::new_unchecked((p - self.centers[i]) * (1.0 / self.radius));
            return Some(SurfaceHit {
                t,
                point: p,
                normal,
                corner,
                sphere_index: Some(i),
            });
        }
    }
}

/// Bubble centres on `core`.
///
/// Circles get a uniform angular grid, 2-spheres a Fibonacci lattice and the
/// Clifford torus a square product grid. Fails with `CoverageFailure` when a
/// core point is farther than `epsilon` from every centre.
pub fn sample_bubble_centers(
    core: &CoreShape,
    dim: usize,
    epsilon: f64,
    count: usize,
) -> Result<Vec<Point>, ObstacleError> {
    if count == 0 {
        return Err(ObstacleError::NoCenters);
    }
    let mut centers = Vec::with_capacity(count);
    let max_distance = match *core {
        CoreShape::Circle { radius } | CoreShape::RoundSphere { k: 1, radius } => {
            for i in 0..count {
                let phi = 2.0 * PI * i as f64 / count as f64;
                centers.push(core.point_at(dim, &[phi, 0.0][..])?);
            }
            // the midpoint of two neighbouring centres is the worst point
            let _ = dim;
            2.0 * radius * (PI / (2.0 * count as f64)).sin()
        }
        CoreShape::RoundSphere { k: 2, .. } => {
            let golden = PI * (3.0 - 5.0f64.sqrt());
            for i in 0..count {
                let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                centers.push(core.point_at(dim, &[r * phi.cos(), r * phi.sin(), z])?);
            }
            fibonacci_coverage(core, dim, &centers, count)?
        }
        CoreShape::CliffordTorus { radius } => {
            let m = (count as f64).sqrt().round() as usize;
            if m * m != count {
                return Err(ObstacleError::InvalidCenterCount(count));
            }
            for i in 0..m {
                for j in 0..m {
                    let a = 2.0 * PI * i as f64 / m as f64;
                    let b = 2.0 * PI * j as f64 / m as f64;
                    centers.push(core.point_at(dim, &[a, b])?);
                }
            }
            // cell centre: half a step in both angles
            core::f64::consts::SQRT_2 * 2.0 * radius * (PI / (2.0 * m as f64)).sin()
        }
        CoreShape::RoundSphere { .. } => {
            return Err(ObstacleError::InvalidShape(
                "bubble placement supports circles, 2-spheres and the Clifford torus",
            ))
        }
    };
    if max_distance > epsilon {
        return Err(ObstacleError::CoverageFailure {
            max_distance,
            epsilon,
        });
    }
    Ok(centers)
}

// Largest distance from a dense lattice of sphere points to the nearest centre.
fn fibonacci_coverage(
    core: &CoreShape,
    dim: usize,
    centers: &[Point],
    count: usize,
) -> Result<f64, ObstacleError> {
    let probes = (count * 64).max(20_000);
    let golden = PI * (3.0 - 5.0f64.sqrt());
    let mut worst: f64 = 0.0;
    for i in 0..probes {
        let z = 1.0 - (2 * i + 1) as f64 / probes as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64 + 0.5;
        let p = core.point_at(dim, &[r * phi.cos(), r * phi.sin(), z])?;
        let near = centers
            .iter()
            .map(|c| (p - *c).norm_sq())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(near);
    }
    Ok(worst.sqrt())
}

/// Sampled check of the non-degeneracy condition on a union of balls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NondegeneracyReport {
    /// Smallest observed `max_k dist(y, B_k) / dist(y, ∩ B_j)`.
    pub c: f64,
    /// Radius of the sampling neighbourhoods.
    pub delta: f64,
    /// Every intersecting pair of spheres meets at a positive angle.
    pub transversal: bool,
    /// Smallest intersection angle over intersecting pairs (`π/2` if none).
    pub min_pairwise_angle: f64,
}

impl NondegeneracyReport {
    pub fn passes(&self) -> bool {
        self.c > 0.0 && self.transversal
    }
}

const NONDEGENERACY_SEED: u64 = 0x5eed_ba11;
const PAIR_SAMPLES: usize = 64;
const MAX_PAIRS: usize = 512;

/// Estimates the non-degeneracy constant `c` and checks transversality.
///
/// `c` is sampled over single balls (ratio 1) and over intersecting pairs,
/// with points drawn in a `δ = ε` neighbourhood of each lens. A sampled
/// estimate is not a certificate.
pub fn check_nondegenerate(tube: &BubbleTube) -> NondegeneracyReport {
    let eps = tube.radius;
    let centers = &tube.centers;
    let mut pairs = Vec::new();
    let mut transversal = true;
    let mut min_angle = PI / 2.0;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let d = centers[i].distance(&centers[j]);
            if d >= 2.0 * eps * (1.0 + 1e-12) {
                continue;
            }
            if d <= 0.0 || d >= 2.0 * eps * (1.0 - 1e-12) {
                transversal = false;
                min_angle = 0.0;
                continue;
            }
            // angle between the sphere normals at a ridge point
            let cos_phi = 1.0 - d * d / (2.0 * eps * eps);
            let phi = cos_phi.clamp(-1.0, 1.0).acos();
            min_angle = min_angle.min(phi.min(PI - phi));
            pairs.push((i, j));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(NONDEGENERACY_SEED);
    let mut c: f64 = 1.0;
    let stride = (pairs.len() / MAX_PAIRS).max(1);
    let n = tube.dim();
    for &(i, j) in pairs.iter().step_by(stride) {
        let (ci, cj) = (centers[i], centers[j]);
        let mid = (ci + cj) * 0.5;
        let mut taken = 0;
        let mut tries = 0;
        while taken < PAIR_SAMPLES && tries < PAIR_SAMPLES * 50 {
            tries += 1;
            let mut y = mid;
            let mut lanes = *y.lanes();
            for x in lanes.iter_mut().take(n) {
                *x += rng.random_range(-eps..eps);
            }
            y = Vector::from_lanes(lanes, n);
            if !tube.contains(&y) {
                continue;
            }
            let di = (y.distance(&ci) - eps).max(0.0);
            let dj = (y.distance(&cj) - eps).max(0.0);
            if di == 0.0 && dj == 0.0 {
                continue;
            }
            let lens = distance_to_lens(&y, &ci, &cj, eps);
            if lens > 0.0 {
                c = c.min(di.max(dj) / lens);
                taken += 1;
            }
        }
    }
    NondegeneracyReport {
        c,
        delta: eps,
        transversal,
        min_pairwise_angle: min_angle,
    }
}

/// Distance from `y` to the intersection of two radius-`r` balls.
fn distance_to_lens(y: &Point, ci: &Point, cj: &Point, r: f64) -> f64 {
    let to_ball = |c: &Point| -> Point {
        let off = *y - *c;
        let d = off.norm();
        if d <= r {
            *y
        } else {
            *c + off * (r / d)
        }
    };
    let in_ball = |p: &Point, c: &Point| p.distance(c) <= r * (1.0 + 1e-12);
    if in_ball(y, ci) && in_ball(y, cj) {
        return 0.0;
    }
    let pi = to_ball(ci);
    if in_ball(&pi, cj) {
        return y.distance(&pi);
    }
    let pj = to_ball(cj);
    if in_ball(&pj, ci) {
        return y.distance(&pj);
    }
    // nearest point lies on the ridge sphere of the two boundaries
    let axis = *cj - *ci;
    let d = axis.norm();
    let u = axis * (1.0 / d);
    let h = (r * r - 0.25 * d * d).max(0.0).sqrt();
    let rel = *y - (*ci + *cj) * 0.5;
    let along = rel.dot(&u);
    let across = rel.offset(&u, -along).norm();
    (along * along + (across - h) * (across - h)).sqrt()
}

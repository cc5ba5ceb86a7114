//! Tubes around canonical closed submanifolds.
//!
//! [`WeylTube`] is the exact `ε`-neighbourhood of a core, traced through its
//! closed-form signed distance. [`BubbleTube`] is a finite union of `ε`-balls
//! centred on the core; its billiard is dispersing.

mod bubble;
mod tube;

pub use bubble::{check_nondegenerate, sample_bubble_centers, BubbleTube, NondegeneracyReport};
pub use tube::WeylTube;

use crate::error::ObstacleError;
use crate::geometry::{Point, UnitVector, Vector, MAX_DIM};

/// Closed core submanifold `K`, centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoreShape {
    /// Circle of the given radius in the `x1 x2` plane.
    Circle { radius: f64 },
    /// Round `k`-sphere in the first `k + 1` coordinates.
    RoundSphere { k: usize, radius: f64 },
    /// `(a cos θ, a sin θ, a cos φ, a sin φ)` in the first four coordinates.
    CliffordTorus { radius: f64 },
}

impl CoreShape {
    pub fn circle(radius: f64) -> Result<Self, ObstacleError> {
        positive(radius)?;
        Ok(CoreShape::Circle { radius })
    }

    pub fn round_sphere(k: usize, radius: f64) -> Result<Self, ObstacleError> {
        positive(radius)?;
        if k == 0 || k + 1 > MAX_DIM {
            return Err(ObstacleError::InvalidShape(
                "sphere dimension must be in 1..=7",
            ));
        }
        Ok(CoreShape::RoundSphere { k, radius })
    }

    pub fn clifford_torus(radius: f64) -> Result<Self, ObstacleError> {
        positive(radius)?;
        Ok(CoreShape::CliffordTorus { radius })
    }

    /// Intrinsic dimension `k`.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            CoreShape::Circle { .. } => 1,
            CoreShape::RoundSphere { k, .. } => *k,
            CoreShape::CliffordTorus { .. } => 2,
        }
    }

    /// Smallest ambient dimension the core embeds in.
    pub fn min_ambient_dim(&self) -> usize {
        match self {
            CoreShape::Circle { .. } => 2,
            CoreShape::RoundSphere { k, .. } => k + 1,
            CoreShape::CliffordTorus { .. } => 4,
        }
    }

    /// Largest tube radius for which the tube is an embedded disk bundle.
    pub fn reach(&self) -> f64 {
        match *self {
            CoreShape::Circle { radius }
            | CoreShape::RoundSphere { radius, .. }
            | CoreShape::CliffordTorus { radius } => radius,
        }
    }

    /// Largest distance from the origin to a core point.
    pub fn max_radius(&self) -> f64 {
        match *self {
            CoreShape::Circle { radius } | CoreShape::RoundSphere { radius, .. } => radius,
            CoreShape::CliffordTorus { radius } => core::f64::consts::SQRT_2 * radius,
        }
    }

    /// Largest `|x_axis|` over the core.
    pub fn axis_extent(&self, axis: usize) -> f64 {
        match *self {
            CoreShape::Circle { radius } if axis < 2 => radius,
            CoreShape::RoundSphere { k, radius } if axis <= k => radius,
            CoreShape::CliffordTorus { radius } if axis < 4 => radius,
            _ => 0.0,
        }
    }

    /// `p` minus its nearest core point.
    ///
    /// On the medial set (e.g. the axis of a circle) every choice is equally
    /// near; the first coordinate direction is used.
    #[inline]
    pub fn core_offset(&self, p: &Point) -> Vector {
        let mut c = *p.lanes();
        match *self {
            CoreShape::Circle { radius } => pull_to_sphere(&mut c, 0, 2, radius),
            CoreShape::RoundSphere { k, radius } => pull_to_sphere(&mut c, 0, k + 1, radius),
            CoreShape::CliffordTorus { radius } => {
                pull_to_sphere(&mut c, 0, 2, radius);
                pull_to_sphere(&mut c, 2, 4, radius);
            }
        }
        Vector::from_lanes(c, p.dim())
    }

    #[inline]
    pub fn distance(&self, p: &Point) -> f64 {
        self.core_offset(p).norm()
    }

    /// Core point for intrinsic parameters (angles; for the sphere, a unit
    /// vector in `R^{k+1}` given through `params`).
    pub fn point_at(&self, dim: usize, params: &[f64]) -> Result<Point, ObstacleError> {
        let mut p = Vector::zeros(dim)?;
        let mut c = *p.lanes();
        match *self {
            CoreShape::Circle { radius } => {
                c[0] = radius * params[0].cos();
                c[1] = radius * params[0].sin();
            }
            CoreShape::RoundSphere { k, radius } => {
                let n: f64 = params[..=k].iter().map(|x| x * x).sum::<f64>().sqrt();
                for i in 0..=k {
                    c[i] = radius * params[i] / n;
                }
            }
            CoreShape::CliffordTorus { radius } => {
                c[0] = radius * params[0].cos();
                c[1] = radius * params[0].sin();
                c[2] = radius * params[1].cos();
                c[3] = radius * params[1].sin();
            }
        }
        p = Vector::from_lanes(c, dim);
        Ok(p)
    }
}

// Replaces coordinates lo..hi by their residual to the radius-r sphere.
#[inline]
fn pull_to_sphere(c: &mut [f64; MAX_DIM], lo: usize, hi: usize, r: f64) {
    let mut rho2 = 0.0;
    for x in &c[lo..hi] {
        rho2 += x * x;
    }
    let rho = rho2.sqrt();
    if rho > 0.0 {
        let s = 1.0 - r / rho;
        for x in &mut c[lo..hi] {
            *x *= s;
        }
    } else {
        c[lo] = -r;
    }
}

fn positive(x: f64) -> Result<(), ObstacleError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ObstacleError::InvalidShape(
            "radius must be positive and finite",
        ))
    }
}

/// A reflection point on the tube boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceHit {
    pub t: f64,
    pub point: Point,
    /// Outward from the tube.
    pub normal: UnitVector,
    /// Hit lies on (within tolerance of) the intersection of two bubbles.
    pub corner: bool,
    pub sphere_index: Option<usize>,
}

/// Parameter interval where a ray is inside the ball `|x - center| <= radius`.
#[inline]
pub(crate) fn ball_interval(
    origin: &Point,
    dir: &UnitVector,
    center: &Point,
    radius: f64,
) -> Option<(f64, f64)> {
    let oc = *origin - *center;
    let b = dir.dot(&oc);
    let perp = oc.offset(dir, -b);
    let disc = radius * radius - perp.norm_sq();
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some((-b - sq, -b + sq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_match_closed_forms() {
        let circle = CoreShape::circle(0.25).unwrap();
        let p = Vector::new(&[0.5, 0.0, 0.1]).unwrap();
        assert!((circle.distance(&p) - (0.25f64 * 0.25 + 0.01).sqrt()).abs() < 1e-15);
        let cl = CoreShape::clifford_torus(0.3).unwrap();
        let p = Vector::new(&[0.3, 0.0, 0.5, 0.0]).unwrap();
        assert!((cl.distance(&p) - 0.2).abs() < 1e-15);
        // circle axis: every core point is at distance sqrt(r^2 + z^2)
        let p = Vector::new(&[0.0, 0.0, 0.3]).unwrap();
        assert!((circle.distance(&p) - (0.0625f64 + 0.09).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shape_validation() {
        assert!(CoreShape::circle(0.0).is_err());
        assert!(CoreShape::round_sphere(0, 1.0).is_err());
        assert!(CoreShape::round_sphere(8, 1.0).is_err());
        assert_eq!(CoreShape::clifford_torus(0.3).unwrap().intrinsic_dim(), 2);
    }
}

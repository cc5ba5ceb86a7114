//! Euclidean primitives in dimension 2..=8.
//!
//! Vectors are stored in eight zero-padded lanes so every operation runs the
//! same straight-line code whatever the ambient dimension; lanes past `dim`
//! are kept at exactly zero.

use core::fmt;
use core::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::GeometryError;

pub const MAX_DIM: usize = 8;
pub const MIN_DIM: usize = 2;

/// Intersections closer than this along a ray are discarded.
pub const T_MIN_CLIP: f64 = 1e-9;

/// Tolerance for "on the boundary" tests.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    c: [f64; MAX_DIM],
    dim: u8,
}

/// Points and free vectors share one representation.
pub type Point = Vector;

impl Vector {
    pub fn zeros(dim: usize) -> Result<Self, GeometryError> {
        check_dim(dim)?;
        Ok(Self {
            c: [0.0; MAX_DIM],
            dim: dim as u8,
        })
    }

    pub fn new(coords: &[f64]) -> Result<Self, GeometryError> {
        let mut v = Self::zeros(coords.len())?;
        for (dst, &x) in v.c.iter_mut().zip(coords) {
            if !x.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            *dst = x;
        }
        Ok(v)
    }

    /// Unit vector along axis `axis`.
    pub fn basis(dim: usize, axis: usize) -> Result<Self, GeometryError> {
        let mut v = Self::zeros(dim)?;
        if axis >= dim {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: axis + 1,
            });
        }
        v.c[axis] = 1.0;
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim()]
    }

    #[inline]
    pub(crate) fn lanes(&self) -> &[f64; MAX_DIM] {
        &self.c
    }

    #[inline]
    pub(crate) fn from_lanes(c: [f64; MAX_DIM], dim: usize) -> Self {
        Self { c, dim: dim as u8 }
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            s += self.c[i] * other.c[i];
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    /// `self + t * dir`.
    #[inline]
    pub fn offset(&self, dir: &Self, t: f64) -> Self {
        let mut c = self.c;
        for i in 0..MAX_DIM {
            c[i] += t * dir.c[i];
        }
        Self { c, dim: self.dim }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    pub(crate) fn same_dim(&self, other: &Self) -> Result<(), GeometryError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            })
        }
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<(), GeometryError> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(GeometryError::UnsupportedDimension(dim))
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(mut self, rhs: Vector) -> Vector {
        for i in 0..MAX_DIM {
            self.c[i] += rhs.c[i];
        }
        self
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(mut self, rhs: Vector) -> Vector {
        for i in 0..MAX_DIM {
            self.c[i] -= rhs.c[i];
        }
        self
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(mut self, s: f64) -> Vector {
        for x in self.c.iter_mut() {
            *x *= s;
        }
        self
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        self * -1.0
    }
}

/// A direction with Euclidean norm within `1e-12` of one.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitVector(Vector);

impl UnitVector {
    pub const NORM_TOL: f64 = 1e-12;

    /// Accepts `v` only if it is already unit length.
    pub fn new(v: Vector) -> Result<Self, GeometryError> {
        let n = v.norm();
        if (n - 1.0).abs() <= Self::NORM_TOL {
            Ok(Self(v))
        } else {
            Err(GeometryError::NotUnit(n))
        }
    }

    /// Scales `v` to unit length.
    pub fn normalize(v: Vector) -> Result<Self, GeometryError> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(GeometryError::NotUnit(n));
        }
        Ok(Self(v * (1.0 / n)))
    }

    pub fn from_coords(coords: &[f64]) -> Result<Self, GeometryError> {
        Self::normalize(Vector::new(coords)?)
    }

    #[inline]
    pub(crate) fn new_unchecked(v: Vector) -> Self {
        Self(v)
    }

    #[inline]
    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn dot(&self, v: &Vector) -> f64 {
        self.0.dot(v)
    }
}

impl fmt::Debug for UnitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        UnitVector(-self.0)
    }
}

impl core::ops::Deref for UnitVector {
    type Target = Vector;
    fn deref(&self) -> &Vector {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Point,
    pub direction: UnitVector,
}

impl Ray {
    pub fn new(origin: Point, direction: UnitVector) -> Result<Self, GeometryError> {
        origin.same_dim(direction.as_vector())?;
        Ok(Self { origin, direction })
    }

    #[inline]
    pub fn at(&self, t: f64) -> Point {
        self.origin.offset(&self.direction, t)
    }
}

/// Specular reflection `v - 2<v,n> n` of `v` in the hyperplane with normal `n`.
#[inline]
pub fn reflect(v: &UnitVector, normal: &UnitVector) -> UnitVector {
    let k = 2.0 * v.dot(normal);
    UnitVector(v.offset(normal, -k))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisBox {
    pub min: Point,
    pub max: Point,
}

impl AxisBox {
    pub fn new(min: Point, max: Point) -> Result<Self, GeometryError> {
        min.same_dim(&max)?;
        if (0..min.dim()).any(|i| min[i] >= max[i]) {
            return Err(GeometryError::DegenerateContainer);
        }
        Ok(Self { min, max })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, GeometryError> {
        let mut min = Vector::zeros(dim)?;
        let mut max = min;
        for i in 0..dim {
            min.c[i] = lo;
            max.c[i] = hi;
        }
        Self::new(min, max)
    }

    pub fn dim(&self) -> usize {
        self.min.dim()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    /// Area of one of the two faces orthogonal to `axis`.
    pub fn face_area(&self, axis: usize) -> f64 {
        (0..self.dim())
            .filter(|&j| j != axis)
            .map(|j| self.side(j))
            .product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Convex container `M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Container {
    Ball { center: Point, radius: f64 },
    AxisBox(AxisBox),
}

impl Container {
    pub fn ball(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::DegenerateContainer);
        }
        Ok(Container::Ball { center, radius })
    }

    pub fn unit_ball(dim: usize) -> Result<Self, GeometryError> {
        Self::ball(Vector::zeros(dim)?, 1.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Container::Ball { center, .. } => center.dim(),
            Container::AxisBox(b) => b.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Container::Ball { radius, .. } => {
                let n = self.dim();
                crate::measure::ball_volume(n) * radius.powi(n as i32)
            }
            Container::AxisBox(b) => b.volume(),
        }
    }

    pub fn boundary_area(&self) -> f64 {
        match self {
            Container::Ball { radius, .. } => {
                let n = self.dim();
                crate::measure::sphere_area(n - 1) * radius.powi(n as i32 - 1)
            }
            Container::AxisBox(b) => (0..b.dim()).map(|i| 2.0 * b.face_area(i)).sum(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Container::Ball { radius, .. } => 2.0 * radius,
            Container::AxisBox(b) => b.max.distance(&b.min),
        }
    }

    /// Distance from `p` to the boundary when `p` is inside, negative outside.
    pub fn depth(&self, p: &Point) -> f64 {
        match self {
            Container::Ball { center, radius } => radius - p.distance(center),
            Container::AxisBox(b) => (0..b.dim())
                .map(|i| (p[i] - b.min[i]).min(b.max[i] - p[i]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.depth(p) >= 0.0
    }

    /// Bounding box of the container.
    pub fn bounding_box(&self) -> AxisBox {
        match self {
            Container::Ball { center, radius } => {
                let mut min = *center;
                let mut max = *center;
                for i in 0..center.dim() {
                    min.c[i] -= radius;
                    max.c[i] += radius;
                }
                AxisBox { min, max }
            }
            Container::AxisBox(b) => *b,
        }
    }
}

/// Distance to the far boundary of `c` along `ray`.
///
/// The origin may sit on the boundary as long as the direction is not
/// outward; the returned parameter is then the chord length.
pub fn ray_exit_convex(ray: &Ray, c: &Container) -> Result<f64, GeometryError> {
    if c.depth(&ray.origin) < -BOUNDARY_TOL {
        return Err(GeometryError::OriginOutside);
    }
    let d = &ray.direction;
    match c {
        Container::Ball { center, radius } => {
            let oc = ray.origin - *center;
            let b = d.dot(&oc);
            // perpendicular form of b^2 - |oc|^2 + r^2
            let perp = oc.offset(d, -b);
            let disc = (radius * radius - perp.norm_sq()).max(0.0);
            let sq = disc.sqrt();
            if b <= 0.0 {
                Ok(sq - b)
            } else {
                // far root through the product of the roots
                let cterm = oc.norm_sq() - radius * radius;
                Ok((-cterm / (b + sq)).max(0.0))
            }
        }
        Container::AxisBox(bx) => {
            let mut t_exit = f64::INFINITY;
            for i in 0..bx.dim() {
                let di = d[i];
                let t = if di > 0.0 {
                    (bx.max[i] - ray.origin[i]) / di
                } else if di < 0.0 {
                    (bx.min[i] - ray.origin[i]) / di
                } else {
                    continue;
                };
                t_exit = t_exit.min(t);
            }
            Ok(t_exit.max(0.0))
        }
    }
}

/// Smallest `t > T_MIN_CLIP` where the ray meets the sphere, if any.
#[inline]
pub fn ray_hit_sphere(ray: &Ray, center: &Point, radius: f64) -> Option<f64> {
    let oc = ray.origin - *center;
    let b = ray.direction.dot(&oc);
    let cterm = oc.norm_sq() - radius * radius;
    // b^2 - c evaluated as r^2 - |oc - b d|^2 to avoid cancellation
    let perp = oc.offset(&ray.direction, -b);
    let disc = radius * radius - perp.norm_sq();
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = if b >= 0.0 { -(b + sq) } else { sq - b };
    let (t0, t1) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        let r1 = q;
        let r2 = cterm / q;
        if r1 <= r2 {
            (r1, r2)
        } else {
            (r2, r1)
        }
    };
    if t0 > T_MIN_CLIP {
        Some(t0)
    } else if t1 > T_MIN_CLIP {
        Some(t1)
    } else {
        None
    }
}

/// Unit outward normal of the container at a boundary point.
pub fn outward_normal(c: &Container, p: &Point) -> Result<UnitVector, GeometryError> {
    match c {
        Container::Ball { center, radius } => {
            center.same_dim(p)?;
            let r = *p - *center;
            let dist = r.norm();
            let off = (dist - radius).abs();
            if off > BOUNDARY_TOL {
                return Err(GeometryError::NotOnBoundary(off));
            }
            Ok(UnitVector(r * (1.0 / dist)))
        }
        Container::AxisBox(b) => {
            b.min.same_dim(p)?;
            let depth = c.depth(p);
            if depth.abs() > BOUNDARY_TOL {
                return Err(GeometryError::NotOnBoundary(depth.abs()));
            }
            // the face the point is closest to
            let mut best = (f64::INFINITY, 0usize, 1.0);
            for i in 0..b.dim() {
                let lo = (p[i] - b.min[i]).abs();
                let hi = (b.max[i] - p[i]).abs();
                if lo < best.0 {
                    best = (lo, i, -1.0);
                }
                if hi < best.0 {
                    best = (hi, i, 1.0);
                }
            }
            let mut n = Vector::zeros(b.dim())?;
            n.c[best.1] = best.2;
            Ok(UnitVector(n))
        }
    }
}

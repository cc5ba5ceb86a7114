use super::{ball_interval, CoreShape, SurfaceHit};
use crate::error::ObstacleError;
use crate::geometry::{check_dim, AxisBox, Point, Ray, UnitVector, Vector, MAX_DIM, T_MIN_CLIP};

/// Marching step as a fraction of the distance bound.
const SAFETY: f64 = 0.99;
/// Extra advance per marching step, relative to ε. Only a chord shorter than
/// this (a near-tangent graze) can be stepped over.
const WINDOW: f64 = 1e-4;
const MAX_STEPS: usize = 100_000;
const BISECTIONS: usize = 60;
const NEWTON_STEPS: usize = 5;
/// Below this distance to the core the gradient is treated as singular.
const CORE_TOL: f64 = 1e-9;

/// Exact tube `T(K, ε)`: all points within `ε` of the core.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylTube {
    core: CoreShape,
    dim: usize,
    epsilon: f64,
    bound_radius: f64,
    window: f64,
}

impl WeylTube {
    pub fn new(core: CoreShape, dim: usize, epsilon: f64) -> Result<Self, ObstacleError> {
        check_dim(dim)?;
        if dim < core.min_ambient_dim() {
            return Err(ObstacleError::InvalidShape(
                "core does not fit in the ambient dimension",
            ));
        }
        let reach = core.reach();
        if !(epsilon > 0.0 && epsilon < reach) {
            return Err(ObstacleError::BeyondReach { epsilon, reach });
        }
        Ok(Self {
            core,
            dim,
            epsilon,
            bound_radius: core.max_radius() + epsilon,
            window: WINDOW * epsilon,
        })
    }

    pub fn core(&self) -> &CoreShape {
        &self.core
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Signed distance to the tube boundary: negative inside.
    #[inline]
    pub fn sdf(&self, p: &Point) -> f64 {
        self.core.distance(p) - self.epsilon
    }

    /// Unit gradient of [`Self::sdf`], the outward normal on the boundary.
    pub fn sdf_gradient(&self, p: &Point) -> Result<UnitVector, ObstacleError> {
        let off = self.core.core_offset(p);
        let d = off.norm();
        if d < CORE_TOL {
            return Err(ObstacleError::CoreSingularity);
        }
        Ok(UnitVector::new_unchecked(off * (1.0 / d)))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.sdf(p) <= 0.0
    }

    /// Axis-aligned box enclosing the tube.
    pub fn bounding_box(&self) -> AxisBox {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = lo;
        for i in 0..self.dim {
            let e = self.core.axis_extent(i) + self.epsilon;
            lo[i] = -e;
            hi[i] = e;
        }
        AxisBox {
            min: Vector::from_lanes(lo, self.dim),
            max: Vector::from_lanes(hi, self.dim),
        }
    }

    /// Radius of a ball about the origin containing the tube.
    pub fn bound_radius(&self) -> f64 {
        self.bound_radius
    }

    /// First crossing of the tube boundary along `ray` in `(T_MIN_CLIP, t_max]`.
    ///
    /// Marches with steps `0.99 * sdf` (the distance is exact, hence
    /// 1-Lipschitz) plus a window of `1e-4 ε`, then brackets the sign change
    /// and polishes it with bisection and Newton steps. The returned point has
    /// `0 <= sdf < 1e-10`.
    pub fn sphere_trace(&self, ray: &Ray, t_max: f64) -> Result<Option<SurfaceHit>, ObstacleError> {
        let origin = Vector::zeros(self.dim)?;
        let Some((t_in, t_out)) =
            ball_interval(&ray.origin, &ray.direction, &origin, self.bound_radius)
        else {
            return Ok(None);
        };
        let t_end = t_max.min(t_out);
        let mut t = T_MIN_CLIP.max(t_in);
        if t >= t_end {
            return Ok(None);
        }
        let mut f = self.sdf(&ray.at(t));
        if f <= 0.0 {
            // started on or just inside the surface: continue straight until outside
            let mut h = T_MIN_CLIP;
            while f <= 0.0 {
                t += h;
                h *= 2.0;
                if t >= t_end {
                    return Ok(None);
                }
                f = self.sdf(&ray.at(t));
            }
        }
        for _ in 0..MAX_STEPS {
            let t_next = t + SAFETY * f + self.window;
            if t_next >= t_end {
                let f_end = self.sdf(&ray.at(t_end));
                if f_end <= 0.0 {
                    return Ok(Some(self.refine(ray, t, t_end)));
                }
                return Ok(None);
            }
            let f_next = self.sdf(&ray.at(t_next));
            if f_next <= 0.0 {
                return Ok(Some(self.refine(ray, t, t_next)));
            }
            t = t_next;
            f = f_next;
        }
        Err(ObstacleError::StepLimitExceeded(MAX_STEPS))
    }

    // sdf(lo) > 0 >= sdf(hi)
    fn refine(&self, ray: &Ray, mut lo: f64, mut hi: f64) -> SurfaceHit {
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sdf(&ray.at(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut t = lo;
        let mut p = ray.at(t);
        let mut f = self.sdf(&p);
        for _ in 0..NEWTON_STEPS {
            let off = self.core.core_offset(&p);
            let d = off.norm();
            if d == 0.0 {
                break;
            }
            let g = ray.direction.dot(&off) / d;
            if g == 0.0 {
                break;
            }
            let t_new = t - f / g;
            if !(t_new >= lo && t_new <= hi) {
                break;
            }
            let p_new = ray.at(t_new);
            let f_new = self.sdf(&p_new);
            if f_new < 0.0 || f_new >= f {
                break;
            }
            t = t_new;
            p = p_new;
            f = f_new;
        }
        let off = self.core.core_offset(&p);
        let normal = UnitVector::new_unchecked(off * (1.0 / off.norm()));
        SurfaceHit {
            t,
            point: p,
            normal,
            corner: false,
            sphere_index: None,
        }
    }
}

//! The scattering map: trajectories from the container boundary through the
//! table `M \ T(K, ε)`, reflecting off the tube until they leave again.

use crate::error::{BilliardError, ObstacleError};
use crate::geometry::{
    outward_normal, ray_exit_convex, reflect, Container, Point, Ray, UnitVector,
};
use crate::obstacle::{BubbleTube, SurfaceHit, WeylTube};

/// Distance the origin is moved along the new direction after a reflection.
pub const NUDGE: f64 = 1e-9;
/// Tube hits with `|<dir, normal>|` below this are passed straight through.
pub const TANGENT_COS: f64 = 1e-10;
/// `|<dir, normal>|` below this marks a boundary direction as tangent.
pub const ORIENTATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Obstacle {
    Weyl(WeylTube),
    Bubble(BubbleTube),
}

impl Obstacle {
    pub fn dim(&self) -> usize {
        match self {
            Obstacle::Weyl(t) => t.dim(),
            Obstacle::Bubble(b) => b.dim(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Obstacle::Weyl(t) => t.epsilon(),
            Obstacle::Bubble(b) => b.radius(),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Obstacle::Weyl(t) => t.contains(p),
            Obstacle::Bubble(b) => b.contains(p),
        }
    }

    #[inline]
    pub fn hit(&self, ray: &Ray, t_max: f64) -> Result<Option<SurfaceHit>, ObstacleError> {
        match self {
            Obstacle::Weyl(t) => t.sphere_trace(ray, t_max),
            Obstacle::Bubble(b) => Ok(b.ray_hit(ray).filter(|h| h.t <= t_max)),
        }
    }
}

/// Billiard table: a convex container with an optional tube strictly inside.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    container: Container,
    obstacle: Option<Obstacle>,
}

impl Scene {
    pub fn empty(container: Container) -> Self {
        Self {
            container,
            obstacle: None,
        }
    }

    /// Checks that the tube lies strictly inside the container and that the
    /// core has codimension at least two.
    pub fn new(container: Container, obstacle: Obstacle) -> Result<Self, BilliardError> {
        let n = container.dim();
        if obstacle.dim() != n {
            return Err(crate::error::GeometryError::DimensionMismatch {
                expected: n,
                found: obstacle.dim(),
            }
            .into());
        }
        let eps = obstacle.epsilon();
        let clearance = match &obstacle {
            Obstacle::Weyl(t) => {
                let k = t.core().intrinsic_dim();
                if k + 2 > n {
                    return Err(BilliardError::Codimension { k, n });
                }
                core_clearance(&container, t)
            }
            Obstacle::Bubble(b) => b
                .centers()
                .iter()
                .map(|c| container.depth(c))
                .fold(f64::INFINITY, f64::min),
        };
        if !(clearance > eps) {
            return Err(BilliardError::Clearance {
                clearance,
                epsilon: eps,
            });
        }
        Ok(Self {
            container,
            obstacle: Some(obstacle),
        })
    }

    pub fn container(&self) -> &Container {
        &self.container
    }

    pub fn obstacle(&self) -> Option<&Obstacle> {
        self.obstacle.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.container.dim()
    }
}

// Lower bound on dist(core, ∂M); exact for boxes and for balls centred at the origin.
fn core_clearance(container: &Container, tube: &WeylTube) -> f64 {
    let core = tube.core();
    match container {
        Container::Ball { center, radius } => {
            let origin_offset = center.norm();
            radius - origin_offset - core.max_radius()
        }
        Container::AxisBox(b) => (0..b.dim())
            .map(|i| {
                let e = core.axis_extent(i);
                (b.max[i] - e).min(-e - b.min[i])
            })
            .fold(f64::INFINITY, f64::min),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Inward,
    Outward,
    Tangent,
}

/// A foot point on `∂M` with a unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPhasePoint {
    pub foot: Point,
    pub dir: UnitVector,
    pub orientation: Orientation,
}

impl BoundaryPhasePoint {
    /// Classifies `dir` against the outward normal of `c` at `foot`.
    pub fn new(c: &Container, foot: Point, dir: UnitVector) -> Result<Self, BilliardError> {
        let normal = outward_normal(c, &foot)?;
        foot.same_dim(dir.as_vector())?;
        let cos = dir.dot(&normal);
        let orientation = if cos < -ORIENTATION_TOL {
            Orientation::Inward
        } else if cos > ORIENTATION_TOL {
            Orientation::Outward
        } else {
            Orientation::Tangent
        };
        Ok(Self {
            foot,
            dir,
            orientation,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceLimits {
    /// Reflections allowed; a trajectory needing one more is presumed trapped.
    pub max_bounces: u64,
    pub max_length: f64,
}

impl TraceLimits {
    pub const DEFAULT_BOUNCES: u64 = 10_000;

    /// `10^4` bounces and `10^6` container diameters.
    pub fn for_container(c: &Container) -> Self {
        Self {
            max_bounces: Self::DEFAULT_BOUNCES,
            max_length: 1e6 * c.diameter(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceOutcome {
    /// Image of the scattering map together with the travel time.
    Exited {
        exit: BoundaryPhasePoint,
        length: f64,
        bounces: u64,
    },
    /// Bounce or length budget exhausted.
    PresumedTrapped { length_so_far: f64, bounces: u64 },
    /// Hit the ridge of two bubbles; the trajectory ends there.
    CornerTerminated {
        point: Point,
        length: f64,
        bounces: u64,
    },
}

impl TraceOutcome {
    pub fn bounces(&self) -> u64 {
        match *self {
            TraceOutcome::Exited { bounces, .. }
            | TraceOutcome::PresumedTrapped { bounces, .. }
            | TraceOutcome::CornerTerminated { bounces, .. } => bounces,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            TraceOutcome::Exited { length, .. } | TraceOutcome::CornerTerminated { length, .. } => {
                length
            }
            TraceOutcome::PresumedTrapped { length_so_far, .. } => length_so_far,
        }
    }
}

/// How a straight piece of a trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentEnd {
    Reflection {
        normal: UnitVector,
    },
    /// Tangential hit passed straight through.
    Graze,
    Exit {
        normal: UnitVector,
    },
    Corner,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    pub cumulative: f64,
    pub end_kind: SegmentEnd,
}

/// Traces one trajectory from an inward boundary point.
pub fn trace(
    scene: &Scene,
    start: &BoundaryPhasePoint,
    limits: &TraceLimits,
) -> Result<TraceOutcome, BilliardError> {
    trace_with(scene, start, limits, |_| {})
}

/// [`trace`], reporting every straight segment to `visit`.
pub fn trace_with(
    scene: &Scene,
    start: &BoundaryPhasePoint,
    limits: &TraceLimits,
    mut visit: impl FnMut(&Segment),
) -> Result<TraceOutcome, BilliardError> {
    if start.orientation != Orientation::Inward {
        return Err(BilliardError::InvalidStart);
    }
    let container = &scene.container;
    let mut seg_start = start.foot;
    let mut origin = start.foot;
    let mut lead = 0.0;
    let mut dir = start.dir;
    let mut length = 0.0;
    let mut bounces = 0u64;
    loop {
        let ray = Ray {
            origin,
            direction: dir,
        };
        let t_exit = ray_exit_convex(&ray, container)?;
        let hit = match &scene.obstacle {
            Some(obs) => obs.hit(&ray, t_exit)?,
            None => None,
        };
        let Some(hit) = hit else {
            let foot = ray.at(t_exit);
            let seg = lead + t_exit;
            length += seg;
            let normal = outward_normal(container, &foot)
                .or_else(|_| outward_normal(container, &snap_to_boundary(container, &foot)))?;
            visit(&Segment {
                start: seg_start,
                end: foot,
                length: seg,
                cumulative: length,
                end_kind: SegmentEnd::Exit { normal },
            });
            return Ok(TraceOutcome::Exited {
                exit: BoundaryPhasePoint {
                    foot,
                    dir,
                    orientation: Orientation::Outward,
                },
                length,
                bounces,
            });
        };
        let seg = lead + hit.t;
        length += seg;
        if hit.corner {
            visit(&Segment {
                start: seg_start,
                end: hit.point,
                length: seg,
                cumulative: length,
                end_kind: SegmentEnd::Corner,
            });
            return Ok(TraceOutcome::CornerTerminated {
                point: hit.point,
                length,
                bounces,
            });
        }
        let cos = dir.dot(&hit.normal);
        let end_kind = if cos.abs() < TANGENT_COS {
            SegmentEnd::Graze
        } else if bounces >= limits.max_bounces {
            visit(&Segment {
                start: seg_start,
                end: hit.point,
                length: seg,
                cumulative: length,
                end_kind: SegmentEnd::Reflection { normal: hit.normal },
            });
            return Ok(TraceOutcome::PresumedTrapped {
                length_so_far: length,
                bounces,
            });
        } else {
            let out = reflect(&dir, &hit.normal);
            let norm = out.norm();
            dir = UnitVector::new_unchecked(*out * (1.0 / norm));
            let drift = dir.norm() - 1.0;
            if drift.abs() >= UnitVector::NORM_TOL {
                return Err(BilliardError::SpeedDrift(drift));
            }
            bounces += 1;
            SegmentEnd::Reflection { normal: hit.normal }
        };
        visit(&Segment {
            start: seg_start,
            end: hit.point,
            length: seg,
            cumulative: length,
            end_kind,
        });
        if length >= limits.max_length {
            return Ok(TraceOutcome::PresumedTrapped {
                length_so_far: length,
                bounces,
            });
        }
        seg_start = hit.point;
        origin = hit.point.offset(&dir, NUDGE);
        lead = NUDGE;
    }
}

fn snap_to_boundary(c: &Container, p: &Point) -> Point {
    match c {
        Container::Ball { center, radius } => {
            let off = *p - *center;
            *center + off * (radius / off.norm())
        }
        Container::AxisBox(b) => {
            let mut q = *p;
            let mut lanes = *q.lanes();
            for i in 0..b.dim() {
                lanes[i] = lanes[i].clamp(b.min[i], b.max[i]);
            }
            q = Point::from_lanes(lanes, b.dim());
            q
        }
    }
}

/// Inverse of the scattering map on an exit: the same foot with the
/// direction reversed.
pub fn reverse(outcome: &TraceOutcome) -> Result<BoundaryPhasePoint, BilliardError> {
    match outcome {
        TraceOutcome::Exited { exit, .. } => Ok(BoundaryPhasePoint {
            foot: exit.foot,
            dir: -exit.dir,
            orientation: Orientation::Inward,
        }),
        _ => Err(BilliardError::NotExited),
    }
}

/// Length of the free chord of the container from `start`.
pub fn chord_length(
    container: &Container,
    start: &BoundaryPhasePoint,
) -> Result<f64, BilliardError> {
    if start.orientation != Orientation::Inward {
        return Err(BilliardError::InvalidStart);
    }
    let ray = Ray {
        origin: start.foot,
        direction: start.dir,
    };
    Ok(ray_exit_convex(&ray, container)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector;
    use crate::obstacle::CoreShape;
    use alloc::vec;
    use alloc::vec::Vec;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c).unwrap()
    }

    fn unit_ball() -> Container {
        Container::unit_ball(3).unwrap()
    }

    fn start(c: &Container, foot: &[f64], dir: &[f64]) -> BoundaryPhasePoint {
        BoundaryPhasePoint::new(c, v(foot), UnitVector::from_coords(dir).unwrap()).unwrap()
    }

    fn circle_scene(eps: f64) -> Scene {
        let tube = WeylTube::new(CoreShape::circle(0.25).unwrap(), 3, eps).unwrap();
        Scene::new(unit_ball(), Obstacle::Weyl(tube)).unwrap()
    }

    #[test]
    fn empty_chord() {
        let c = unit_ball();
        let scene = Scene::empty(c);
        let s = start(&c, &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        let out = trace(&scene, &s, &TraceLimits::for_container(&c)).unwrap();
        let TraceOutcome::Exited {
            exit,
            length,
            bounces,
        } = out
        else {
            panic!("{out:?}")
        };
        assert!((exit.foot - v(&[1.0, 0.0, 0.0])).norm() < 1e-15);
        assert!((length - 2.0).abs() < 1e-15);
        assert_eq!(bounces, 0);

        let back = reverse(&out).unwrap();
        assert!((*back.dir - v(&[-1.0, 0.0, 0.0])).norm() < 1e-15);
        let out2 = trace(&scene, &back, &TraceLimits::for_container(&c)).unwrap();
        let TraceOutcome::Exited { exit, .. } = out2 else {
            panic!()
        };
        assert!((exit.foot - v(&[-1.0, 0.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn head_on_circle_tube() {
        // in the core plane along x1: the outer equator sits at 0.25 + ε
        let eps = 0.15;
        let scene = circle_scene(eps);
        let c = unit_ball();
        let s = start(&c, &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        let out = trace(&scene, &s, &TraceLimits::for_container(&c)).unwrap();
        let TraceOutcome::Exited {
            exit,
            length,
            bounces,
        } = out
        else {
            panic!()
        };
        assert_eq!(bounces, 1);
        let gap = 1.0 - (0.25 + eps);
        assert!((length - 2.0 * gap).abs() < 1e-8);
        assert!((exit.foot - v(&[-1.0, 0.0, 0.0])).norm() < 1e-8);
        assert!((*exit.dir - v(&[-1.0, 0.0, 0.0])).norm() < 1e-8);
    }

    #[test]
    fn tangent_start_is_invalid() {
        let c = unit_ball();
        let s = start(&c, &[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_eq!(s.orientation, Orientation::Tangent);
        let err = trace(&circle_scene(0.1), &s, &TraceLimits::for_container(&c));
        assert_eq!(err, Err(BilliardError::InvalidStart));
        let outward = start(&c, &[-1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]);
        assert_eq!(outward.orientation, Orientation::Outward);
        assert_eq!(chord_length(&c, &outward), Err(BilliardError::InvalidStart));
    }

    #[test]
    fn chord_lengths() {
        let c = unit_ball();
        assert!(
            (chord_length(&c, &start(&c, &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0])).unwrap() - 2.0)
                .abs()
                < 1e-15
        );
        assert!(
            (chord_length(&c, &start(&c, &[0.0, -1.0, 0.0], &[0.0, 1.0, 0.0])).unwrap() - 2.0)
                .abs()
                < 1e-15
        );
        for phi in [0.1f64, 0.7, 1.2, 1.5] {
            let s = start(&c, &[-1.0, 0.0, 0.0], &[phi.cos(), phi.sin(), 0.0]);
            let len = chord_length(&c, &s).unwrap();
            assert!((len - 2.0 * phi.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn segments_add_up() {
        let scene = circle_scene(0.15);
        let c = unit_ball();
        let s = start(&c, &[-1.0, 0.0, 0.0], &[1.0, 0.02, 0.01]);
        let mut segs: Vec<Segment> = vec![];
        let out = trace_with(&scene, &s, &TraceLimits::for_container(&c), |seg| {
            segs.push(*seg)
        })
        .unwrap();
        let sum: f64 = segs.iter().map(|s| s.length).sum();
        assert!((sum - out.length()).abs() < 1e-12);
        for s in &segs {
            assert!((s.start.distance(&s.end) - s.length).abs() < 1e-9);
        }
        assert_eq!(segs.len() as u64, out.bounces() + 1);
    }

    #[test]
    fn bounce_limit_yields_presumed_trapped() {
        let scene = circle_scene(0.15);
        let c = unit_ball();
        let s = start(&c, &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        let mut limits = TraceLimits {
            max_bounces: 0,
            max_length: 100.0,
        };
        let out = trace(&scene, &s, &limits).unwrap();
        assert_eq!(
            out,
            TraceOutcome::PresumedTrapped {
                length_so_far: out.length(),
                bounces: 0
            }
        );
        assert!((out.length() - 0.6).abs() < 1e-9);
        assert!(reverse(&out).is_err());
        // one bounce is enough to leave
        limits.max_bounces = 1;
        let out = trace(&scene, &s, &limits).unwrap();
        assert!(matches!(out, TraceOutcome::Exited { bounces: 1, .. }));
    }

    #[test]
    fn scene_validation() {
        let c = unit_ball();
        let big = WeylTube::new(CoreShape::round_sphere(1, 0.9).unwrap(), 3, 0.2).unwrap();
        assert!(matches!(
            Scene::new(c, Obstacle::Weyl(big)),
            Err(BilliardError::Clearance { .. })
        ));
        let surface = WeylTube::new(CoreShape::round_sphere(2, 0.5).unwrap(), 3, 0.1).unwrap();
        assert!(matches!(
            Scene::new(c, Obstacle::Weyl(surface)),
            Err(BilliardError::Codimension { .. })
        ));
        let bub = BubbleTube::new(vec![v(&[0.95, 0.0, 0.0])], 0.1).unwrap();
        assert!(Scene::new(c, Obstacle::Bubble(bub)).is_err());
    }

    #[test]
    fn bubble_corner_terminates() {
        let c = unit_ball();
        let bub = BubbleTube::new(vec![v(&[-0.1, 0.0, 0.0]), v(&[0.1, 0.0, 0.0])], 0.15).unwrap();
        let scene = Scene::new(c, Obstacle::Bubble(bub)).unwrap();
        let s = start(&c, &[0.0, -1.0, 0.0], &[0.0, 1.0, 0.0]);
        let out = trace(&scene, &s, &TraceLimits::for_container(&c)).unwrap();
        assert!(matches!(
            out,
            TraceOutcome::CornerTerminated { bounces: 0, .. }
        ));
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weyl_scatter_core::geometry::reflect;
use weyl_scatter_core::{CoreShape, Point, UnitVector, Vector, WeylTube};

fn unit_from(raw: &[f64]) -> Option<UnitVector> {
    let v = Vector::new(raw).ok()?;
    if v.norm() < 1e-3 {
        return None;
    }
    UnitVector::normalize(v).ok()
}

proptest! {
    #[test]
    fn reflection_is_an_isometric_involution(
        raw in (2usize..=8).prop_flat_map(|d| (
            prop::collection::vec(-1.0f64..1.0, d),
            prop::collection::vec(-1.0f64..1.0, d),
        ))
    ) {
        let (a, b) = raw;
        let (Some(v), Some(n)) = (unit_from(&a), unit_from(&b)) else {
            return Ok(());
        };
        let r = reflect(&v, &n);
        prop_assert!((r.norm() - 1.0).abs() < 1e-14);
        prop_assert!((r.dot(&n) + v.dot(&n)).abs() < 1e-14);
        let back = reflect(&r, &n);
        prop_assert!(back.distance(&v) < 1e-14);
        // tangential part is untouched
        let tv = *v - *n * v.dot(&n);
        let tr = *r - *n * r.dot(&n);
        prop_assert!(tv.distance(&tr) < 1e-14);
    }
}

// Core point from unconstrained angles.
fn core_point(core: &CoreShape, dim: usize, angles: &[f64]) -> Point {
    match core {
        CoreShape::RoundSphere { .. } => {
            let (t, p) = (angles[0], angles[1]);
            core.point_at(dim, &[t.sin() * p.cos(), t.sin() * p.sin(), t.cos()])
                .unwrap()
        }
        _ => core.point_at(dim, angles).unwrap(),
    }
}

// Coarse sampling of the core followed by a compass search in angle space.
fn brute_distance(core: &CoreShape, dim: usize, p: &Point, rng: &mut ChaCha8Rng) -> f64 {
    let n_angles = if matches!(core, CoreShape::Circle { .. }) {
        1
    } else {
        2
    };
    let dist = |a: &[f64]| core_point(core, dim, a).distance(p);
    let mut best = [0.0; 2];
    let mut best_d = f64::INFINITY;
    for _ in 0..400 {
        let a = [
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
        ];
        let d = dist(&a[..n_angles]);
        if d < best_d {
            best_d = d;
            best = a;
        }
    }
    let mut step = 0.2;
    while step > 1e-10 {
        let mut improved = false;
        for axis in 0..n_angles {
            for sign in [-1.0, 1.0] {
                let mut a = best;
                a[axis] += sign * step;
                let d = dist(&a[..n_angles]);
                if d < best_d {
                    best_d = d;
                    best = a;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_d
}

#[test]
fn sdf_matches_brute_force_distance() {
    let shapes = [
        (CoreShape::circle(0.25).unwrap(), 3),
        (CoreShape::round_sphere(2, 0.4).unwrap(), 4),
        (CoreShape::clifford_torus(0.3).unwrap(), 4),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (core, dim) in shapes {
        let eps = 0.5 * core.reach();
        let tube = WeylTube::new(core, dim, eps).unwrap();
        let bbox = tube.bounding_box();
        for _ in 0..20_000 {
            let c: Vec<f64> = (0..dim)
                .map(|i| rng.random_range(bbox.min[i]..bbox.max[i]))
                .collect();
            let p = Point::new(&c).unwrap();
            let want = brute_distance(&core, dim, &p, &mut rng) - eps;
            let got = tube.sdf(&p);
            assert!(
                (got - want).abs() < 1e-4,
                "{core:?} at {c:?}: {got} vs {want}"
            );
            assert_eq!(tube.contains(&p), got <= 0.0);
        }
    }
}

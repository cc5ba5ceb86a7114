use weyl_scatter_core::measure::{estimate_scatter, mc_volume};
use weyl_scatter_core::recovery::fit_polynomial;
use weyl_scatter_core::weyl::weyl_polynomial;
use weyl_scatter_core::{BubbleTube, Container, CoreShape, Obstacle, Scene, TraceLimits, WeylTube};

fn circle_scene() -> Scene {
    let tube = WeylTube::new(CoreShape::circle(0.25).unwrap(), 3, 0.15).unwrap();
    Scene::new(Container::unit_ball(3).unwrap(), Obstacle::Weyl(tube)).unwrap()
}

#[test]
fn stderr_shrinks_as_inverse_root_n() {
    let scene = circle_scene();
    let limits = TraceLimits::for_container(scene.container());
    let a = estimate_scatter(&scene, 20_000, 1, &limits).unwrap();
    let b = estimate_scatter(&scene, 320_000, 1, &limits).unwrap();
    let ratio = a.mean_length.stderr / b.mean_length.stderr;
    assert!((ratio / 4.0 - 1.0).abs() < 0.1, "{ratio}");
    let ratio = a.diff_mean.stderr / b.diff_mean.stderr;
    assert!((ratio / 4.0 - 1.0).abs() < 0.15, "{ratio}");
}

#[test]
fn length_plus_deficit_is_the_chord_mean() {
    let scene = circle_scene();
    let empty = Scene::empty(*scene.container());
    let limits = TraceLimits::for_container(scene.container());
    let s = estimate_scatter(&scene, 100_000, 6, &limits).unwrap();
    let e = estimate_scatter(&empty, 100_000, 6, &limits).unwrap();
    assert_eq!(s.n_trapped, 0);
    let lhs = s.mean_length.mean + s.diff_mean.mean;
    assert!((lhs - e.mean_length.mean).abs() < 1e-12, "{lhs}");
}

#[test]
fn tube_volume_is_polynomial_in_epsilon_squared() {
    let shapes = [
        (CoreShape::circle(0.25).unwrap(), 3),
        (CoreShape::round_sphere(2, 0.4).unwrap(), 4),
        (CoreShape::clifford_torus(0.3).unwrap(), 4),
        (CoreShape::round_sphere(4, 0.5).unwrap(), 7),
    ];
    for (core, n) in shapes {
        let w = weyl_polynomial(&core, n).unwrap();
        let codim = (n - core.intrinsic_dim()) as i32;
        let degree = core.intrinsic_dim() / 2;
        let nodes: Vec<f64> = (1..=8)
            .map(|i| (0.1 * i as f64 * core.reach()).powi(2))
            .collect();
        let values: Vec<f64> = nodes
            .iter()
            .map(|x| w.tube_volume(x.sqrt()) / x.sqrt().powi(codim))
            .collect();
        let fit = fit_polynomial(&nodes, &values, degree).unwrap();
        for (got, want) in fit.coefficients.iter().zip(w.coefficients()) {
            assert!(
                (got - want).abs() < 1e-12 * want.abs().max(1.0),
                "{got} vs {want}"
            );
        }
        for (x, v) in nodes.iter().zip(&values) {
            let p: f64 = fit
                .coefficients
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * x + c);
            assert!((p - v).abs() < 1e-12 * v.abs());
        }
    }
}

#[test]
fn bubble_tube_is_inside_weyl_tube() {
    let core = CoreShape::circle(0.25).unwrap();
    let weyl = WeylTube::new(core, 3, 0.15).unwrap();
    let bubble = BubbleTube::around(&core, 3, 0.15, 64).unwrap();
    let bbox = weyl.bounding_box();
    let w = mc_volume(&weyl, &bbox, 400_000, 2).unwrap();
    let b = mc_volume(&bubble, &bbox, 400_000, 2).unwrap();
    // same points: every bubble hit is a tube hit
    assert!(b.mean <= w.mean);
    assert!(b.mean > 0.8 * w.mean);
}

#[test]
fn reported_stderr_matches_seed_spread() {
    let scene = circle_scene();
    let limits = TraceLimits::for_container(scene.container());
    let runs: Vec<_> = (0..32)
        .map(|seed| estimate_scatter(&scene, 8_192, 100 + seed, &limits).unwrap())
        .collect();
    for pick in [
        |s: &weyl_scatter_core::ScatterStats| s.mean_length,
        |s: &weyl_scatter_core::ScatterStats| s.diff_mean,
    ] {
        let means: Vec<f64> = runs.iter().map(|r| pick(r).mean).collect();
        let avg = means.iter().sum::<f64>() / 32.0;
        let spread = (means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / 31.0).sqrt();
        let reported = runs.iter().map(|r| pick(r).stderr).sum::<f64>() / 32.0;
        let ratio = spread / reported;
        assert!((0.5..2.0).contains(&ratio), "{ratio}");
    }
}

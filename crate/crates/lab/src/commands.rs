//! The four experiment pipelines behind the CLI subcommands.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use weyl_scatter_core::billiard::{trace_with, SegmentEnd};
use weyl_scatter_core::geometry::outward_normal;
use weyl_scatter_core::measure::boundary_mass;
use weyl_scatter_core::recovery::{
    recover, LayerObservation, LayerSignal, RecoveryResult, SceneMetadata,
};
use weyl_scatter_core::weyl::tube_volume;
use weyl_scatter_core::{BoundaryPhasePoint, Estimate, Point, TraceOutcome, UnitVector, Vector};

use crate::config::{Estimator, Experiment, TubeMode};
use crate::parallel::{estimate_scatter, mc_volume, with_threads};
use crate::report::{ScatterRow, VolumeRow};

/// Key offset separating volume-sampling streams from scattering streams.
const VOLUME_STREAM_KEY: u64 = 0x766f_6c75_6d65;

fn volume_seed(seed: u64, layer: usize) -> u64 {
    seed ^ VOLUME_STREAM_KEY.wrapping_add(layer as u64)
}

/// One row per tube radius; a single `epsilon = 0` row for an empty table.
pub fn run_scatter(exp: &Experiment) -> Result<Vec<ScatterRow>> {
    let epsilons = if exp.core.is_none() {
        vec![0.0]
    } else {
        exp.epsilons.clone()
    };
    with_threads(exp.threads, || {
        epsilons
            .iter()
            .map(|&eps| {
                let scene = exp.scene(eps)?;
                let s = estimate_scatter(&scene, exp.samples, exp.seed, &exp.limits)
                    .with_context(|| format!("scattering at epsilon {eps}"))?;
                Ok(ScatterRow {
                    epsilon: eps,
                    n_samples: s.n_samples,
                    seed: exp.seed,
                    mean_length: s.mean_length.mean,
                    stderr_length: s.mean_length.stderr,
                    trapped_fraction: s.trapped_fraction,
                    corner_fraction: s.corner_fraction,
                    mean_bounces: s.mean_bounces,
                    diff_mean: s.diff_mean.mean,
                    diff_stderr: s.diff_mean.stderr,
                })
            })
            .collect()
    })
}

/// Hit-or-miss volume of the configured tube and the exact Weyl tube volume;
/// their ratio is `ρ̂` for bubble tubes.
pub fn tube_volumes(exp: &Experiment, epsilon: f64, layer: usize) -> Result<(Estimate, f64)> {
    let core = exp
        .core
        .ok_or_else(|| anyhow!("an empty table has no tube"))?;
    let obstacle = exp.obstacle(epsilon)?.expect("core present");
    let bbox = exp.tube_bbox(epsilon)?.expect("core present");
    let analytic = tube_volume(&core, exp.dimension, epsilon)?;
    let mc = with_threads(exp.threads, || {
        mc_volume(
            &obstacle,
            &bbox,
            exp.volume_samples,
            volume_seed(exp.seed, layer),
        )
    })?;
    Ok((mc, analytic))
}

/// Inverts scatter rows into the invariants `Q_ℓ`.
pub fn run_recover(rows: &[ScatterRow], exp: &Experiment) -> Result<RecoveryResult> {
    let Some(core) = exp.core else {
        bail!("recovery needs a core shape");
    };
    let meta = SceneMetadata::new(&exp.container, core.intrinsic_dim());
    let mut ladder = Vec::with_capacity(rows.len());
    for (j, row) in rows.iter().enumerate() {
        let est = |mean, stderr| Estimate {
            mean,
            stderr,
            n_samples: row.n_samples,
            seed: row.seed,
        };
        let signal = match exp.estimator {
            Estimator::Difference => LayerSignal::Deficit(est(row.diff_mean, row.diff_stderr)),
            Estimator::MeanLength => {
                LayerSignal::MeanLength(est(row.mean_length, row.stderr_length))
            }
        };
        let rho_hat = match exp.tube {
            TubeMode::Weyl => 1.0,
            TubeMode::Bubble { .. } => {
                let (mc, analytic) = tube_volumes(exp, row.epsilon, j)?;
                mc.mean / analytic
            }
        };
        ladder.push(LayerObservation {
            epsilon: row.epsilon,
            signal,
            trapped_fraction: row.trapped_fraction,
            rho_hat,
        });
    }
    Ok(recover(&ladder, &meta, exp.trap_threshold)?)
}

/// Compares the tube polynomial with hit-or-miss volumes, layer by layer.
pub fn run_volume(exp: &Experiment) -> Result<Vec<VolumeRow>> {
    if exp.core.is_none() {
        bail!("volume comparison needs a core shape");
    }
    exp.epsilons
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let (mc, analytic) = tube_volumes(exp, eps, j)?;
            let roughness = match exp.tube {
                TubeMode::Weyl => None,
                TubeMode::Bubble { .. } => {
                    let r = mc.mean / analytic;
                    Some((1.0 - r, r))
                }
            };
            Ok(VolumeRow {
                epsilon: eps,
                analytic_volume: analytic,
                mc_volume: mc.mean,
                mc_stderr: mc.stderr,
                z_score: (mc.mean - analytic) / mc.stderr,
                roughness,
            })
        })
        .collect()
}

fn fmt_point(p: &Vector) -> String {
    let parts: Vec<String> = p.coords().iter().map(|x| format!("{x:.9}")).collect();
    format!("({})", parts.join(", "))
}

/// Default start: the container point furthest along `−e₁`, heading along `e₁`.
pub fn default_start(exp: &Experiment) -> (Point, Vector) {
    let n = exp.dimension;
    let e1 = Vector::basis(n, 0).expect("dimension validated");
    let foot = match exp.container {
        weyl_scatter_core::Container::Ball { center, radius } => center - e1 * radius,
        weyl_scatter_core::Container::AxisBox(b) => {
            let mut c = b.min.coords().to_vec();
            for (i, x) in c.iter_mut().enumerate().skip(1) {
                *x = 0.5 * (b.min[i] + b.max[i]);
            }
            Point::new(&c).expect("finite")
        }
    };
    (foot, e1)
}

/// Human-readable polyline of one trajectory at the first tube radius.
pub fn run_trace(exp: &Experiment, foot: Option<&[f64]>, dir: Option<&[f64]>) -> Result<String> {
    let eps = exp.epsilons.first().copied().unwrap_or(0.0);
    let scene = exp.scene(eps)?;
    let (default_foot, default_dir) = default_start(exp);
    let foot = match foot {
        Some(f) => Point::new(f)?,
        None => default_foot,
    };
    let dir = match dir {
        Some(d) => UnitVector::normalize(Vector::new(d)?)?,
        None => UnitVector::new(default_dir)?,
    };
    let start = BoundaryPhasePoint::new(&exp.container, foot, dir)?;
    let mut out = String::new();
    writeln!(out, "epsilon {eps}").unwrap();
    writeln!(
        out,
        "start {} dir {}",
        fmt_point(&start.foot),
        fmt_point(&start.dir)
    )
    .unwrap();
    let mut index = 0;
    let outcome = trace_with(&scene, &start, &exp.limits, |seg| {
        index += 1;
        let (tag, normal) = match seg.end_kind {
            SegmentEnd::Reflection { normal } => ("Reflection", Some(normal)),
            SegmentEnd::Graze => ("Graze", None),
            SegmentEnd::Exit { normal } => ("Exit", Some(normal)),
            SegmentEnd::Corner => ("Corner", None),
        };
        let normal = normal.map_or_else(|| "-".to_string(), |n| fmt_point(&n));
        writeln!(
            out,
            "segment {index}: hit {} normal {} length {:.12} cumulative {:.12} {tag}",
            fmt_point(&seg.end),
            normal,
            seg.length,
            seg.cumulative
        )
        .unwrap();
    })?;
    match outcome {
        TraceOutcome::Exited {
            exit,
            length,
            bounces,
        } => {
            let normal = outward_normal(&exp.container, &exit.foot)?;
            writeln!(
                out,
                "outcome Exited length {length:.12} bounces {bounces} exit {} dir {} cos {:.9}",
                fmt_point(&exit.foot),
                fmt_point(&exit.dir),
                exit.dir.dot(&normal)
            )
            .unwrap();
        }
        TraceOutcome::PresumedTrapped {
            length_so_far,
            bounces,
        } => {
            writeln!(
                out,
                "outcome PresumedTrapped length {length_so_far:.12} bounces {bounces}"
            )
            .unwrap();
        }
        TraceOutcome::CornerTerminated {
            point,
            length,
            bounces,
        } => {
            writeln!(
                out,
                "outcome CornerTerminated length {length:.12} bounces {bounces} at {}",
                fmt_point(&point)
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// `∫ L_ε ω` from a scatter row.
pub fn length_integral(exp: &Experiment, row: &ScatterRow) -> Estimate {
    Estimate {
        mean: row.mean_length,
        stderr: row.stderr_length,
        n_samples: row.n_samples,
        seed: row.seed,
    }
    .scaled(boundary_mass(&exp.container))
}

//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "dimension": 3,
//!   "container": { "ball": { "center": [0, 0, 0], "radius": 1 } },
//!   "core": { "circle": { "radius": 0.25 } },
//!   "tube": "weyl",
//!   "epsilons": [0.15],
//!   "samples": 1000000,
//!   "seed": 1
//! }
//! ```
//!
//! `core` may be `null` for an empty table. `tube` is `"weyl"` or
//! `{ "bubble": { "count": 64 } }`. Optional fields: `limits`
//! (`max_bounces`, `max_length`), `estimator` (`"difference"` or
//! `"mean_length"`), `trap_threshold`, `volume_samples`, `threads` and
//! `outputs` (`scatter`, `volume`, `recovery` paths).

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;
use weyl_scatter_core::geometry::AxisBox;
use weyl_scatter_core::obstacle::sample_bubble_centers;
use weyl_scatter_core::recovery::TRAP_THRESHOLD;
use weyl_scatter_core::{
    BilliardError, BubbleTube, Container, CoreShape, Obstacle, Point, Scene, TraceLimits, WeylTube,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.field, self.message),
            None => write!(f, "`{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: usize,
    container: RawContainer,
    core: Option<RawCore>,
    #[serde(default)]
    tube: RawTube,
    #[serde(default)]
    epsilons: Option<Vec<f64>>,
    samples: u64,
    seed: u64,
    #[serde(default)]
    limits: RawLimits,
    #[serde(default)]
    estimator: Estimator,
    #[serde(default)]
    trap_threshold: Option<f64>,
    #[serde(default)]
    volume_samples: Option<u64>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    outputs: Outputs,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawContainer {
    Ball { center: Vec<f64>, radius: f64 },
    Box { min: Vec<f64>, max: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawCore {
    Circle { radius: f64 },
    Sphere { k: usize, radius: f64 },
    Clifford { radius: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawTube {
    #[default]
    Weyl,
    Bubble {
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    max_bounces: Option<u64>,
    max_length: Option<f64>,
}

/// Which sample mean feeds the inversion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Mean of `chord − L_ε`.
    #[default]
    Difference,
    MeanLength,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub scatter: Option<PathBuf>,
    pub volume: Option<PathBuf>,
    pub recovery: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeMode {
    Weyl,
    Bubble { count: usize },
}

/// Validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub dimension: usize,
    pub container: Container,
    pub core: Option<CoreShape>,
    pub tube: TubeMode,
    /// Strictly decreasing; empty for an empty table.
    pub epsilons: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub limits: TraceLimits,
    pub estimator: Estimator,
    pub trap_threshold: f64,
    pub volume_samples: u64,
    pub threads: Option<usize>,
    pub outputs: Outputs,
}

struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn line_of(&self, field: &str) -> Option<usize> {
        let key = field.split(['.', '[']).next().unwrap_or(field);
        let needle = format!("\"{key}\"");
        self.text
            .lines()
            .position(|l| l.contains(&needle))
            .map(|i| i + 1)
    }

    fn error(&self, field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            field: field.to_string(),
            line: self.line_of(field),
            message: message.into(),
        }
    }
}

impl Experiment {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            field: "<document>".into(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        validate(raw, &Locator { text })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            field: "<file>".into(),
            line: None,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_json(&text)
    }

    /// Core dimension `k`, 0 for an empty table.
    pub fn core_dim(&self) -> usize {
        self.core.map_or(0, |c| c.intrinsic_dim())
    }

    /// The table at tube radius `epsilon`.
    pub fn scene(&self, epsilon: f64) -> Result<Scene, BilliardError> {
        match self.obstacle(epsilon)? {
            None => Ok(Scene::empty(self.container)),
            Some(o) => Scene::new(self.container, o),
        }
    }

    pub fn obstacle(&self, epsilon: f64) -> Result<Option<Obstacle>, BilliardError> {
        let Some(core) = self.core else {
            return Ok(None);
        };
        let n = self.dimension;
        Ok(Some(match self.tube {
            TubeMode::Weyl => Obstacle::Weyl(WeylTube::new(core, n, epsilon)?),
            TubeMode::Bubble { count } => {
                let centers = sample_bubble_centers(&core, n, epsilon, count)?;
                Obstacle::Bubble(BubbleTube::new(centers, epsilon)?)
            }
        }))
    }

    /// Box enclosing the tube at `epsilon`, for volume sampling.
    pub fn tube_bbox(&self, epsilon: f64) -> Result<Option<AxisBox>, BilliardError> {
        Ok(self.obstacle(epsilon)?.map(|o| match o {
            Obstacle::Weyl(t) => t.bounding_box(),
            Obstacle::Bubble(b) => b.bounding_box(),
        }))
    }
}

fn point(v: &[f64], n: usize, field: &str, loc: &Locator) -> Result<Point, ConfigError> {
    if v.len() != n {
        return Err(loc.error(field, format!("expected {n} coordinates, got {}", v.len())));
    }
    Point::new(v).map_err(|e| loc.error(field, e.to_string()))
}

fn validate(raw: RawConfig, loc: &Locator) -> Result<Experiment, ConfigError> {
    let n = raw.dimension;
    if !(2..=weyl_scatter_core::MAX_DIM).contains(&n) {
        return Err(loc.error("dimension", format!("{n} is outside 2..=8")));
    }
    let container =
        match &raw.container {
            RawContainer::Ball { center, radius } => {
                let c = point(center, n, "container.ball.center", loc)?;
                Container::ball(c, *radius)
                    .map_err(|e| loc.error("container.ball.radius", e.to_string()))?
            }
            RawContainer::Box { min, max } => {
                let lo = point(min, n, "container.box.min", loc)?;
                let hi = point(max, n, "container.box.max", loc)?;
                Container::AxisBox(AxisBox::new(lo, hi).map_err(|_| {
                    loc.error("container.box", "min must be below max on every axis")
                })?)
            }
        };
    let core = raw
        .core
        .as_ref()
        .map(|c| {
            match *c {
                RawCore::Circle { radius } => CoreShape::circle(radius),
                RawCore::Sphere { k, radius } => CoreShape::round_sphere(k, radius),
                RawCore::Clifford { radius } => CoreShape::clifford_torus(radius),
            }
            .map_err(|e| loc.error("core", e.to_string()))
        })
        .transpose()?;
    if let Some(c) = &core {
        let k = c.intrinsic_dim();
        if n < c.min_ambient_dim() {
            return Err(loc.error(
                "core",
                format!("core needs dimension >= {}", c.min_ambient_dim()),
            ));
        }
        if k + 2 > n {
            return Err(loc.error(
                "core",
                format!("scattering needs k <= n - 2 (k = {k}, n = {n})"),
            ));
        }
    }
    let tube = match raw.tube {
        RawTube::Weyl => TubeMode::Weyl,
        RawTube::Bubble { count } => {
            if count == 0 {
                return Err(loc.error("tube.bubble.count", "must be at least 1"));
            }
            TubeMode::Bubble { count }
        }
    };
    let epsilons = match (&core, raw.epsilons) {
        (None, _) => Vec::new(),
        (Some(_), Some(e)) => {
            if e.is_empty() {
                return Err(loc.error("epsilons", "at least one tube radius is needed"));
            }
            e
        }
        (Some(c), None) => {
            weyl_scatter_core::recovery::default_ladder(c.reach(), c.intrinsic_dim() / 2 + 1)
        }
    };
    if let Some(c) = &core {
        let reach = c.reach();
        for (i, &e) in epsilons.iter().enumerate() {
            let field = format!("epsilons[{i}]");
            if !(e > 0.0 && e < reach) {
                return Err(loc.error(
                    &field,
                    format!("{e} must lie in (0, {reach}), the reach of the core"),
                ));
            }
            if i > 0 && !(e < epsilons[i - 1]) {
                return Err(loc.error(&field, "tube radii must be strictly decreasing"));
            }
        }
    }
    if raw.samples == 0 {
        return Err(loc.error("samples", "must be positive"));
    }
    let mut limits = TraceLimits::for_container(&container);
    if let Some(b) = raw.limits.max_bounces {
        limits.max_bounces = b;
    }
    if let Some(l) = raw.limits.max_length {
        if !(l > 0.0) {
            return Err(loc.error("limits.max_length", "must be positive"));
        }
        limits.max_length = l;
    }
    let trap_threshold = raw.trap_threshold.unwrap_or(TRAP_THRESHOLD);
    if !(0.0..=1.0).contains(&trap_threshold) {
        return Err(loc.error("trap_threshold", "must lie in [0, 1]"));
    }
    let volume_samples = raw.volume_samples.unwrap_or(10_000_000);
    if volume_samples == 0 {
        return Err(loc.error("volume_samples", "must be positive"));
    }
    if raw.threads == Some(0) {
        return Err(loc.error("threads", "must be positive"));
    }
    let exp = Experiment {
        dimension: n,
        container,
        core,
        tube,
        epsilons,
        samples: raw.samples,
        seed: raw.seed,
        limits,
        estimator: raw.estimator,
        trap_threshold,
        volume_samples,
        threads: raw.threads,
        outputs: raw.outputs,
    };
    for (i, &e) in exp.epsilons.iter().enumerate() {
        exp.scene(e).map_err(|err| {
            let field = match (&err, exp.tube) {
                (BilliardError::Obstacle(_), TubeMode::Bubble { .. }) => {
                    "tube.bubble.count".to_string()
                }
                (BilliardError::Clearance { .. }, _) => format!("epsilons[{i}]"),
                _ => "core".to_string(),
            };
            loc.error(&field, format!("at epsilon {e}: {err}"))
        })?;
    }
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = r#"{
  "dimension": 3,
  "container": { "ball": { "center": [0, 0, 0], "radius": 1 } },
  "core": { "circle": { "radius": 0.25 } },
  "epsilons": [0.15, 0.05],
  "samples": 1000,
  "seed": 7
}"#;

    #[test]
    fn parses_circle_config() {
        let e = Experiment::from_json(CIRCLE).unwrap();
        assert_eq!(e.dimension, 3);
        assert_eq!(e.epsilons, [0.15, 0.05]);
        assert_eq!(e.tube, TubeMode::Weyl);
        assert_eq!(e.estimator, Estimator::Difference);
        assert_eq!(e.limits.max_bounces, 10_000);
        assert_eq!(e.limits.max_length, 2e6);
        assert!(e.scene(0.15).is_ok());
    }

    #[test]
    fn reach_violation_names_field_and_line() {
        let bad = CIRCLE.replace("[0.15, 0.05]", "[0.3]");
        let err = Experiment::from_json(&bad).unwrap_err();
        assert_eq!(err.field, "epsilons[0]");
        assert_eq!(err.line, Some(5));
        assert!(
            err.to_string().starts_with("line 5: `epsilons[0]`"),
            "{err}"
        );
    }

    #[test]
    fn other_validation_errors() {
        let cases = [
            (
                CIRCLE.replace("[0.15, 0.05]", "[0.05, 0.15]"),
                "epsilons[1]",
            ),
            (
                CIRCLE.replace("\"dimension\": 3", "\"dimension\": 9"),
                "dimension",
            ),
            (
                CIRCLE.replace("[0, 0, 0]", "[0, 0]"),
                "container.ball.center",
            ),
            (
                CIRCLE.replace("\"samples\": 1000", "\"samples\": 0"),
                "samples",
            ),
            (
                CIRCLE.replace(
                    "{ \"circle\": { \"radius\": 0.25 } }",
                    "{ \"sphere\": { \"k\": 2, \"radius\": 0.4 } }",
                ),
                "core",
            ),
            (
                CIRCLE.replace("\"radius\": 1 }", "\"radius\": 0.3 }"),
                "epsilons[0]",
            ),
        ];
        for (text, field) in cases {
            let err = Experiment::from_json(&text).unwrap_err();
            assert_eq!(err.field, field, "{err}");
            assert!(err.line.is_some());
        }
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = Experiment::from_json("{\n \"dimension\": 3,\n \"bogus\": 1\n}").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn empty_and_bubble_configs() {
        let empty = CIRCLE.replace("{ \"circle\": { \"radius\": 0.25 } }", "null");
        let e = Experiment::from_json(&empty).unwrap();
        assert!(e.core.is_none() && e.epsilons.is_empty());
        assert_eq!(e.scene(0.0).unwrap().obstacle(), None);

        let bubble = CIRCLE
            .replace("\"epsilons\": [0.15, 0.05]", "\"epsilons\": [0.15]")
            .replace(
                "\"samples\"",
                "\"tube\": { \"bubble\": { \"count\": 64 } },\n  \"samples\"",
            );
        let e = Experiment::from_json(&bubble).unwrap();
        assert_eq!(e.tube, TubeMode::Bubble { count: 64 });
        assert!(matches!(
            e.obstacle(0.15).unwrap(),
            Some(Obstacle::Bubble(_))
        ));

        let sparse = bubble.replace("\"count\": 64", "\"count\": 3");
        assert_eq!(
            Experiment::from_json(&sparse).unwrap_err().field,
            "tube.bubble.count"
        );
    }

    #[test]
    fn default_ladder_when_epsilons_missing() {
        let text = r#"{
  "dimension": 4,
  "container": { "ball": { "center": [0, 0, 0, 0], "radius": 1 } },
  "core": { "sphere": { "k": 2, "radius": 0.4 } },
  "samples": 10,
  "seed": 1
}"#;
        let e = Experiment::from_json(text).unwrap();
        assert_eq!(e.epsilons.len(), 2);
        assert!(e.epsilons[0] > e.epsilons[1]);
    }
}

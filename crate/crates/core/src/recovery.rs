//! Inversion of layered scattering data into the invariants `Q_ℓ`.
//!
//! Each layer turns an average travel time into `Q_K(ε²) = vol T(K, ε) / ε^{n−k}`
//! (divided by `ρ̂` for bubble tubes). `Q_K` is a polynomial of degree `⌊k/2⌋`
//! in `ε²`, so `⌊k/2⌋ + 1` layers determine it and its coefficients give the
//! `Q_ℓ`. Everything here is linear in the observations, which is how
//! standard errors are carried through.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::RecoveryError;
use crate::geometry::Container;
use crate::measure::{ball_volume, sphere_area, Estimate};
use crate::weyl::denominator;

/// Vandermonde conditioning beyond which an interpolation is flagged.
pub const ILL_CONDITIONED: f64 = 1e8;
/// Default trapped-fraction gate.
pub const TRAP_THRESHOLD: f64 = 1e-4;

/// Dimensions and container measures shared by every layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneMetadata {
    pub n: usize,
    pub k: usize,
    pub vol_m: f64,
    pub vol_dm: f64,
}

impl SceneMetadata {
    pub fn new(container: &Container, k: usize) -> Self {
        Self {
            n: container.dim(),
            k,
            vol_m: container.volume(),
            vol_dm: container.boundary_area(),
        }
    }

    /// `θ_{n−1} / σ_{n−1}`.
    pub fn theta_over_sigma(&self) -> f64 {
        ball_volume(self.n - 1) / sphere_area(self.n - 1)
    }

    /// Number of invariants `⌊k/2⌋ + 1`.
    pub fn invariant_count(&self) -> usize {
        self.k / 2 + 1
    }
}

/// Average travel time `σ_{n−1}(vol M − vol T) / (θ_{n−1} vol ∂M)` of a scene
/// without trapping.
pub fn average_length(meta: &SceneMetadata, tube_volume: f64) -> f64 {
    (meta.vol_m - tube_volume) / (meta.theta_over_sigma() * meta.vol_dm)
}

/// The measured quantity a layer reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSignal {
    /// Mean travel time `𝓛^av`.
    MeanLength(Estimate),
    /// Mean of `chord − L_ε`.
    Deficit(Estimate),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerObservation {
    pub epsilon: f64,
    pub signal: LayerSignal,
    pub trapped_fraction: f64,
    /// `1 − ρ`; 1 for Weyl tubes.
    pub rho_hat: f64,
}

impl LayerObservation {
    pub fn weyl(epsilon: f64, mean_length: Estimate) -> Self {
        Self {
            epsilon,
            signal: LayerSignal::MeanLength(mean_length),
            trapped_fraction: 0.0,
            rho_hat: 1.0,
        }
    }
}

/// One layer of `Q_K(ε²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservedQ {
    pub value: f64,
    pub stderr: f64,
    /// Factor multiplying the error of the raw signal.
    pub noise_factor: f64,
    /// The estimated tube volume came out negative beyond its error.
    pub negative_volume: bool,
}

/// `ρ̂⁻¹ ε^{k−n} [vol M − (θ_{n−1}/σ_{n−1}) vol ∂M 𝓛^av]`, or the equivalent
/// deficit form `ρ̂⁻¹ ε^{k−n} (θ_{n−1}/σ_{n−1}) vol ∂M D^av`.
pub fn observed_q(
    obs: &LayerObservation,
    meta: &SceneMetadata,
) -> Result<ObservedQ, RecoveryError> {
    if !(obs.rho_hat > 0.0 && obs.rho_hat <= 1.0) {
        return Err(RecoveryError::InvalidRhoHat(obs.rho_hat));
    }
    let scale = meta.theta_over_sigma() * meta.vol_dm;
    let (bracket, bracket_err) = match obs.signal {
        LayerSignal::MeanLength(e) => (meta.vol_m - scale * e.mean, scale * e.stderr),
        LayerSignal::Deficit(e) => (scale * e.mean, scale * e.stderr),
    };
    let factor = obs.epsilon.powi(meta.k as i32 - meta.n as i32) / obs.rho_hat;
    let slack = bracket_err + 1e-12 * meta.vol_m;
    Ok(ObservedQ {
        value: factor * bracket,
        stderr: factor * bracket_err,
        noise_factor: factor * scale,
        negative_volume: bracket < -slack,
    })
}

/// Least-squares or interpolating polynomial in `x = ε²`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialFit {
    /// `c_0, …, c_d`.
    pub coefficients: Vec<f64>,
    /// `coefficients[i] = Σ_j map[i][j] · values[j]`.
    pub map: Vec<Vec<f64>>,
    /// 1-norm condition number of the (possibly rectangular) Vandermonde matrix.
    pub condition_number: f64,
}

impl PolynomialFit {
    pub fn ill_conditioned(&self) -> bool {
        !(self.condition_number <= ILL_CONDITIONED)
    }
}

fn check_nodes(nodes: &[f64], values: &[f64]) -> Result<(), RecoveryError> {
    if nodes.len() != values.len() || nodes.is_empty() {
        return Err(RecoveryError::LengthMismatch {
            nodes: nodes.len(),
            values: values.len(),
        });
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].iter().any(|b| a == b) {
            return Err(RecoveryError::DuplicateNodes);
        }
    }
    Ok(())
}

fn vandermonde_norm1(nodes: &[f64], cols: usize) -> f64 {
    (0..cols)
        .map(|j| nodes.iter().map(|x| x.abs().powi(j as i32)).sum::<f64>())
        .fold(0.0, f64::max)
}

fn matrix_norm1(m: &[Vec<f64>]) -> f64 {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| m.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn apply(map: &[Vec<f64>], values: &[f64]) -> Vec<f64> {
    map.iter()
        .map(|row| row.iter().zip(values).map(|(a, b)| a * b).sum())
        .collect()
}

/// Interpolating polynomial through `(nodes[j], values[j])`.
///
/// Built from the barycentric weights `w_j = 1 / Π_{m≠j}(x_j − x_m)`: each
/// Lagrange basis polynomial `w_j Π_{m≠j}(x − x_m)` is expanded into monomials,
/// which are exactly the columns of the inverse Vandermonde matrix.
pub fn lagrange_coefficients(
    nodes: &[f64],
    values: &[f64],
) -> Result<PolynomialFit, RecoveryError> {
    check_nodes(nodes, values)?;
    let m = nodes.len();
    let mut map = vec![vec![0.0; m]; m];
    for j in 0..m {
        let mut w = 1.0;
        // monomial coefficients of Π_{i≠j}(x − x_i), lowest degree first
        let mut basis = vec![1.0];
        for (i, xi) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            w /= nodes[j] - xi;
            let mut next = vec![0.0; basis.len() + 1];
            for (d, b) in basis.iter().enumerate() {
                next[d + 1] += b;
                next[d] -= xi * b;
            }
            basis = next;
        }
        for (d, b) in basis.iter().enumerate() {
            map[d][j] = w * b;
        }
    }
    let coefficients = apply(&map, values);
    let condition_number = vandermonde_norm1(nodes, m) * matrix_norm1(&map);
    Ok(PolynomialFit {
        coefficients,
        map,
        condition_number,
    })
}

/// Polynomial of the given degree through the points, exact when there are
/// `degree + 1` nodes and least squares (via QR) when there are more.
pub fn fit_polynomial(
    nodes: &[f64],
    values: &[f64],
    degree: usize,
) -> Result<PolynomialFit, RecoveryError> {
    check_nodes(nodes, values)?;
    let cols = degree + 1;
    if nodes.len() < cols {
        return Err(RecoveryError::InsufficientLayers {
            needed: cols,
            got: nodes.len(),
        });
    }
    if nodes.len() == cols {
        return lagrange_coefficients(nodes, values);
    }
    // modified Gram–Schmidt on the m × cols Vandermonde matrix
    let rows = nodes.len();
    let mut q: Vec<Vec<f64>> = (0..cols)
        .map(|j| nodes.iter().map(|x| x.powi(j as i32)).collect())
        .collect();
    let mut r = vec![vec![0.0; cols]; cols];
    for j in 0..cols {
        for i in 0..j {
            let d: f64 = (0..rows).map(|t| q[i][t] * q[j][t]).sum();
            r[i][j] = d;
            for t in 0..rows {
                q[j][t] -= d * q[i][t];
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        r[j][j] = norm;
        for t in 0..rows {
            q[j][t] /= norm;
        }
    }
    // pseudo-inverse R⁻¹ Qᵀ by back substitution, one column per node
    let mut map = vec![vec![0.0; rows]; cols];
    for t in 0..rows {
        for i in (0..cols).rev() {
            let mut s = q[i][t];
            for l in i + 1..cols {
                s -= r[i][l] * map[l][t];
            }
            map[i][t] = s / r[i][i];
        }
    }
    let coefficients = apply(&map, values);
    let condition_number = vandermonde_norm1(nodes, cols) * matrix_norm1(&map);
    Ok(PolynomialFit {
        coefficients,
        map,
        condition_number,
    })
}

/// `Q_{2i} = c_i Π_{j=1}^{i}(n−k+2j) / θ_{n−k}`.
pub fn extract_invariants(
    coefficients: &[f64],
    n: usize,
    k: usize,
) -> Result<Vec<f64>, RecoveryError> {
    let expected = k / 2 + 1;
    if coefficients.len() != expected {
        return Err(RecoveryError::CoefficientCount {
            expected,
            got: coefficients.len(),
        });
    }
    Ok(invariant_scales(n, k)
        .iter()
        .zip(coefficients)
        .map(|(s, c)| s * c)
        .collect())
}

fn invariant_scales(n: usize, k: usize) -> Vec<f64> {
    let d = n - k;
    let theta = ball_volume(d);
    (0..=k / 2).map(|i| denominator(d, i) / theta).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// Trapped fraction of a layer above the gate: the shadow volume is not
    /// known to vanish there.
    HypothesisA {
        epsilon: f64,
        trapped_fraction: f64,
    },
    NegativeVolume {
        epsilon: f64,
    },
    IllConditioned {
        condition_number: f64,
    },
}

impl Warning {
    pub fn is_hypothesis_a(&self) -> bool {
        matches!(self, Warning::HypothesisA { .. })
    }
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::HypothesisA {
                epsilon,
                trapped_fraction,
            } => write!(
                f,
                "HypothesisA: trapped fraction {trapped_fraction:e} at epsilon {epsilon} exceeds the gate"
            ),
            Warning::NegativeVolume { epsilon } => {
                write!(f, "NegativeVolume: tube volume estimate below zero at epsilon {epsilon}")
            }
            Warning::IllConditioned { condition_number } => {
                write!(f, "IllConditioned: interpolation condition number {condition_number:e}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    pub n: usize,
    pub k: usize,
    pub epsilons: Vec<f64>,
    /// `(ε_j², Q_K(ε_j²))`.
    pub q_values: Vec<(f64, f64)>,
    pub q_stderr: Vec<f64>,
    pub noise_factors: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub q_ell: Vec<f64>,
    pub stderr_q_ell: Vec<f64>,
    pub condition_number: f64,
    pub warnings: Vec<Warning>,
}

impl RecoveryResult {
    pub fn has_hypothesis_a_warning(&self) -> bool {
        self.warnings.iter().any(Warning::is_hypothesis_a)
    }
}

/// Runs the whole inversion over a ladder of layers.
pub fn recover(
    ladder: &[LayerObservation],
    meta: &SceneMetadata,
    trap_threshold: f64,
) -> Result<RecoveryResult, RecoveryError> {
    let needed = meta.invariant_count();
    if ladder.len() < needed {
        return Err(RecoveryError::InsufficientLayers {
            needed,
            got: ladder.len(),
        });
    }
    let ordered = ladder.windows(2).all(|w| w[0].epsilon > w[1].epsilon)
        && ladder.iter().all(|l| l.epsilon > 0.0);
    if !ordered {
        return Err(RecoveryError::UnorderedLadder);
    }
    let mut warnings = Vec::new();
    let mut observed = Vec::with_capacity(ladder.len());
    for layer in ladder {
        let q = observed_q(layer, meta)?;
        if layer.trapped_fraction > trap_threshold {
            warnings.push(Warning::HypothesisA {
                epsilon: layer.epsilon,
                trapped_fraction: layer.trapped_fraction,
            });
        }
        if q.negative_volume {
            warnings.push(Warning::NegativeVolume {
                epsilon: layer.epsilon,
            });
        }
        observed.push(q);
    }
    let nodes: Vec<f64> = ladder.iter().map(|l| l.epsilon * l.epsilon).collect();
    let values: Vec<f64> = observed.iter().map(|q| q.value).collect();
    let fit = fit_polynomial(&nodes, &values, needed - 1)?;
    if fit.ill_conditioned() {
        warnings.push(Warning::IllConditioned {
            condition_number: fit.condition_number,
        });
    }
    let scales = invariant_scales(meta.n, meta.k);
    let q_ell = extract_invariants(&fit.coefficients, meta.n, meta.k)?;
    let stderr_q_ell = fit
        .map
        .iter()
        .zip(&scales)
        .map(|(row, s)| {
            let var: f64 = row
                .iter()
                .zip(&observed)
                .map(|(a, q)| (a * q.stderr).powi(2))
                .sum();
            s * var.sqrt()
        })
        .collect();
    Ok(RecoveryResult {
        n: meta.n,
        k: meta.k,
        epsilons: ladder.iter().map(|l| l.epsilon).collect(),
        q_values: nodes.iter().copied().zip(values.iter().copied()).collect(),
        q_stderr: observed.iter().map(|q| q.stderr).collect(),
        noise_factors: observed.iter().map(|q| q.noise_factor).collect(),
        coefficients: fit.coefficients,
        q_ell,
        stderr_q_ell,
        condition_number: fit.condition_number,
        warnings,
    })
}

/// Length of a closed curve in `𝔼³` from one layer:
/// `ℓ(K) = (4π vol M − V(ε)) / (4π² ε²)`.
pub fn recover_length_one_layer(v_eps: f64, vol_m: f64, epsilon: f64) -> f64 {
    (4.0 * PI * vol_m - v_eps) / (4.0 * PI * PI * epsilon * epsilon)
}

/// Phase volume of the forward-trapped data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowVolume {
    pub epsilon: f64,
    pub w: f64,
    pub stderr: f64,
}

/// `W(ε) = σ_{n−1} vol M − σ_{n−1} vol T − ∫ L_ε ω`.
pub fn shadow_volume(
    epsilon: f64,
    n: usize,
    vol_m: f64,
    tube_volume: f64,
    integral_l: &Estimate,
) -> ShadowVolume {
    let sigma = sphere_area(n - 1);
    ShadowVolume {
        epsilon,
        w: sigma * vol_m - sigma * tube_volume - integral_l.mean,
        stderr: integral_l.stderr,
    }
}

/// `count` tube radii, decreasing, whose squares are Chebyshev nodes on
/// `[(0.25 reach)², (0.75 reach)²]`.
pub fn default_ladder(reach: f64, count: usize) -> Vec<f64> {
    let lo = (0.25 * reach).powi(2);
    let hi = (0.75 * reach).powi(2);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..count)
        .map(|i| {
            let x = mid + half * (PI * (2 * i + 1) as f64 / (2 * count) as f64).cos();
            x.sqrt()
        })
        .collect()
}

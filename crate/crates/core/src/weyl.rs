//! Weyl's tube-volume polynomial and the invariants `Q_ℓ` of the canonical
//! cores.
//!
//! For a closed `k`-dimensional `K ⊂ 𝔼ⁿ` and `ε` below its reach,
//!
//! ```text
//! vol T(K, ε) = θ_{n−k} Σ_{ℓ even} Q_ℓ / ((n−k+2)(n−k+4)…(n−k+ℓ)) · ε^{n−k+ℓ}
//! ```
//!
//! `Q_0` is the `k`-volume, `Q_2` half the total scalar curvature and, for even
//! `k`, `Q_k = (2π)^{k/2} χ(K)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::ObstacleError;
use crate::measure::{ball_volume, sphere_area};
use crate::obstacle::CoreShape;

#[derive(Clone, Debug, PartialEq)]
pub struct WeylPolynomial {
    n: usize,
    k: usize,
    q: Vec<f64>,
}

impl WeylPolynomial {
    /// `q[i]` is `Q_{2i}`; there must be `⌊k/2⌋ + 1` of them.
    pub fn new(n: usize, k: usize, q: Vec<f64>) -> Result<Self, ObstacleError> {
        if k == 0 || k >= n {
            return Err(ObstacleError::InvalidShape("need 1 <= k < n"));
        }
        if q.len() != k / 2 + 1 {
            return Err(ObstacleError::InvalidShape(
                "need floor(k/2) + 1 invariants",
            ));
        }
        Ok(Self { n, k, q })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `Q_0, Q_2, …, Q_{2⌊k/2⌋}`.
    pub fn invariants(&self) -> &[f64] {
        &self.q
    }

    /// Coefficients `c_i` of `Q_K(x) = Σ c_i x^i`, with `vol T = ε^{n−k} Q_K(ε²)`.
    pub fn coefficients(&self) -> Vec<f64> {
        coefficients_from_invariants(&self.q, self.n, self.k)
    }

    /// `Q_K(ε²) = vol T(K, ε) / ε^{n−k}`.
    pub fn reduced(&self, epsilon: f64) -> f64 {
        let x = epsilon * epsilon;
        self.coefficients()
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }

    pub fn tube_volume(&self, epsilon: f64) -> f64 {
        epsilon.powi((self.n - self.k) as i32) * self.reduced(epsilon)
    }
}

/// `Π_{j=1}^{i} (d + 2j)`.
pub(crate) fn denominator(d: usize, i: usize) -> f64 {
    (1..=i).map(|j| (d + 2 * j) as f64).product()
}

pub(crate) fn coefficients_from_invariants(q: &[f64], n: usize, k: usize) -> Vec<f64> {
    let d = n - k;
    let theta = ball_volume(d);
    q.iter()
        .enumerate()
        .map(|(i, qi)| theta * qi / denominator(d, i))
        .collect()
}

/// Closed-form invariants of a canonical core.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeInvariants {
    pub shape: CoreShape,
    /// `Q_0, Q_2, …`.
    pub q: Vec<f64>,
    /// Euler characteristic, for even `k`.
    pub chi: Option<i64>,
}

impl ShapeInvariants {
    pub fn q0(&self) -> f64 {
        self.q[0]
    }

    pub fn q2(&self) -> Option<f64> {
        self.q.get(1).copied()
    }
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn double_factorial_odd(i: usize) -> f64 {
    // (2i − 1)!!
    (1..=i).map(|j| (2 * j - 1) as f64).product()
}

pub fn shape_invariants(core: &CoreShape) -> ShapeInvariants {
    match *core {
        CoreShape::Circle { radius } => ShapeInvariants {
            shape: *core,
            q: alloc::vec![2.0 * PI * radius],
            chi: None,
        },
        CoreShape::RoundSphere { k, radius } => {
            // volume of the tube is σ_k ∫_{B^{n−k}_ε} (a + y₁)^k dy
            let q = (0..=k / 2)
                .map(|i| {
                    sphere_area(k)
                        * binomial(k, 2 * i)
                        * double_factorial_odd(i)
                        * radius.powi((k - 2 * i) as i32)
                })
                .collect();
            ShapeInvariants {
                shape: *core,
                q,
                chi: (k % 2 == 0).then_some(2),
            }
        }
        CoreShape::CliffordTorus { radius } => ShapeInvariants {
            shape: *core,
            q: alloc::vec![4.0 * PI * PI * radius * radius, 0.0],
            chi: Some(0),
        },
    }
}

/// The tube polynomial of `core` in `𝔼ⁿ`.
pub fn weyl_polynomial(core: &CoreShape, n: usize) -> Result<WeylPolynomial, ObstacleError> {
    if n < core.min_ambient_dim() || n > crate::geometry::MAX_DIM {
        return Err(ObstacleError::InvalidShape(
            "core does not fit the ambient dimension",
        ));
    }
    WeylPolynomial::new(n, core.intrinsic_dim(), shape_invariants(core).q)
}

/// Exact tube volume of a canonical core, checking `ε` against the reach.
pub fn tube_volume(core: &CoreShape, n: usize, epsilon: f64) -> Result<f64, ObstacleError> {
    let reach = core.reach();
    if !(epsilon > 0.0 && epsilon < reach) {
        return Err(ObstacleError::BeyondReach { epsilon, reach });
    }
    Ok(weyl_polynomial(core, n)?.tube_volume(epsilon))
}

/// Two-sided tube of a closed surface in `𝔼³`: `2ε·area + (4π/3) ε³ χ`.
pub fn surface_cubic(area: f64, chi: i64, epsilon: f64) -> f64 {
    2.0 * epsilon * area + 4.0 * PI / 3.0 * epsilon.powi(3) * chi as f64
}

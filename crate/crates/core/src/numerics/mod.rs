//! Shared numeric types: operator parameters, quadrature budgets, and the
//! extended-real measure value used by the sublevel machinery.

pub mod mc;
pub mod quad;
pub mod special;
pub mod wkernel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The triple `(n, k, s)` plus the fractional-Laplacian normalization `c_{n,s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    /// Ambient dimension (≥ 2).
    pub n: usize,
    /// Plane dimension, `1 ≤ k ≤ n`.
    pub k: usize,
    /// Fractional order, strictly inside `(1/2, 1)`.
    pub s: f64,
    /// Normalization constant of `Δ^s`; computed by [`special::frac_constant`].
    #[serde(default)]
    pub c_ns: f64,
}

impl OperatorParams {
    pub fn new(n: usize, k: usize, s: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("n must be ≥ 2, got {n}")));
        }
        if k < 1 || k > n {
            return Err(Error::domain(format!("k must satisfy 1 ≤ k ≤ n, got {k}")));
        }
        if !(s > 0.5 && s < 1.0) {
            return Err(Error::domain(format!("s must lie strictly in (1/2, 1), got {s}")));
        }
        let c_ns = special::frac_constant(n, s)?;
        Ok(OperatorParams { n, k, s, c_ns })
    }

    /// Exponent `n + 2s` of the kernel singularity.
    pub fn kernel_exponent(&self) -> f64 {
        self.n as f64 + 2.0 * self.s
    }

    /// Codimension `m = n - k` of the slicing planes.
    pub fn codim(&self) -> usize {
        self.n - self.k
    }

    /// Same parameters with a different plane dimension.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.n, k, self.s)
    }

    /// Validates a deserialized value and fills in `c_ns` if absent.
    pub fn validated(mut self) -> Result<Self> {
        let fresh = Self::new(self.n, self.k, self.s)?;
        if self.c_ns <= 0.0 {
            self.c_ns = fresh.c_ns;
        }
        Ok(self)
    }
}

/// Node budgets, truncation radii, tolerances, and the Monte Carlo seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Nodes for radial/ρ integrals (also the per-side z-node count in the
    /// fixed-grid layer-cake mode).
    pub radial_nodes: usize,
    /// Nodes for angular integrals on the circle.
    pub angular_nodes: usize,
    /// Nodes for the t-integral of the layer-cake route (fixed-grid mode).
    pub t_nodes: usize,
    /// Truncation radius for z-integrals.
    pub z_truncation: f64,
    /// Truncation radius for x-integrals (and the Monte Carlo window).
    pub x_truncation: f64,
    /// Monte Carlo sample count.
    pub mc_samples: u64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_nodes: 48,
            angular_nodes: 64,
            t_nodes: 48,
            z_truncation: 50.0,
            x_truncation: 50.0,
            mc_samples: 1_000_000,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            seed: 0x5eed,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 2 || self.angular_nodes < 2 || self.t_nodes < 2 {
            return Err(Error::domain("all node counts must be ≥ 2"));
        }
        if self.z_truncation <= 0.0 || self.x_truncation <= 0.0 {
            return Err(Error::domain("truncation radii must be positive"));
        }
        if self.abs_tol <= 0.0 || self.rel_tol <= 0.0 {
            return Err(Error::domain("tolerances must be positive"));
        }
        Ok(())
    }

    /// Scales both tolerances, clamped away from denormals.
    pub fn scale_tolerances(&mut self, factor: f64) {
        self.abs_tol = (self.abs_tol * factor).max(1e-300);
        self.rel_tol = (self.rel_tol * factor).max(1e-300);
    }

    pub fn quad_options(&self) -> quad::QuadOptions {
        quad::QuadOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_intervals: 4096.max(self.radial_nodes * self.angular_nodes),
        }
    }
}

/// A nonnegative measure value that may be exactly infinite.
///
/// Infinity is a tag, not a floating-point sentinel: it absorbs addition and
/// dominates every finite value in comparisons, and `W(Infinity)` is exactly 0
/// so layer-cake integrands never touch NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtendedMeasure {
    Finite(f64),
    Infinite,
}

impl ExtendedMeasure {
    pub fn finite(v: f64) -> Result<Self> {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::domain(format!("measure must be finite and ≥ 0, got {v}")));
        }
        Ok(ExtendedMeasure::Finite(v))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedMeasure::Infinite)
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            ExtendedMeasure::Finite(v) => Some(*v),
            ExtendedMeasure::Infinite => None,
        }
    }

    /// Finite value or panic; callers use this after a finiteness certificate.
    pub fn expect_finite(&self, what: &str) -> f64 {
        self.as_finite()
            .unwrap_or_else(|| panic!("{what}: unexpected infinite measure"))
    }
}

impl std::ops::Add for ExtendedMeasure {
    type Output = ExtendedMeasure;
    fn add(self, rhs: ExtendedMeasure) -> ExtendedMeasure {
        match (self, rhs) {
            (ExtendedMeasure::Finite(a), ExtendedMeasure::Finite(b)) => {
                ExtendedMeasure::Finite(a + b)
            }
            _ => ExtendedMeasure::Infinite,
        }
    }
}

impl PartialOrd for ExtendedMeasure {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use ExtendedMeasure::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Infinite) => Some(std::cmp::Ordering::Less),
            (Infinite, Finite(_)) => Some(std::cmp::Ordering::Greater),
            (Infinite, Infinite) => Some(std::cmp::Ordering::Equal),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_reject_bad_inputs() {
        assert!(OperatorParams::new(1, 1, 0.75).is_err());
        assert!(OperatorParams::new(2, 0, 0.75).is_err());
        assert!(OperatorParams::new(2, 3, 0.75).is_err());
        assert!(OperatorParams::new(2, 1, 0.5).is_err());
        assert!(OperatorParams::new(2, 1, 1.0).is_err());
        let p = OperatorParams::new(2, 1, 0.75).unwrap();
        assert!(p.c_ns > 0.0);
    }

    #[test]
    fn infinity_absorbs_and_dominates() {
        let inf = ExtendedMeasure::Infinite;
        let one = ExtendedMeasure::Finite(1.0);
        assert_eq!(inf + one, inf);
        assert!(one < inf);
        assert!(ExtendedMeasure::finite(-1.0).is_err());
    }
}

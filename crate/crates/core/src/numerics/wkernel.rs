//! The radial weight `W(ρ) = k ω_k ∫_ρ^∞ r^{k-1} (1+r²)^{-(n+2s)/2} dr`
//! consumed by the layer-cake representation.
//!
//! Quadrature covers `[ρ, ρ*]` with `ρ* = max(ρ, 10)`; beyond `ρ*` the
//! integrand is within `O(ρ*^{-4})` of its leading power law, so the tail is
//! taken in closed form with a first-order correction.

use crate::error::{Error, Result};
use crate::numerics::quad::{quad_1d, QuadOptions};
use crate::numerics::special::unit_ball_measure;
use crate::numerics::{ExtendedMeasure, OperatorParams};

const TAIL_SPLIT: f64 = 10.0;

/// `W(ρ)` for a finite argument; strictly decreasing, `W(∞) = 0` exactly.
pub fn w_kernel(rho: ExtendedMeasure, params: &OperatorParams) -> Result<f64> {
    let rho = match rho {
        ExtendedMeasure::Infinite => return Ok(0.0),
        ExtendedMeasure::Finite(r) => r,
    };
    if rho < 0.0 || !rho.is_finite() {
        return Err(Error::domain(format!("w_kernel requires ρ ≥ 0, got {rho}")));
    }
    let k = params.k as f64;
    let p = params.kernel_exponent();
    let komega = k * unit_ball_measure(params.k)?;

    let split = rho.max(TAIL_SPLIT);
    let mut value = power_tail(split, k, p);
    if rho < split {
        let opt = QuadOptions::with_tols(1e-13, 1e-11);
        value += quad_1d(
            |r: f64| r.powf(k - 1.0) * (1.0 + r * r).powf(-0.5 * p),
            rho,
            split,
            &opt,
        )?
        .value;
    }
    Ok(komega * value)
}

/// Closed-form `∫_ρ^∞ r^{k-1}(1+r²)^{-p/2} dr` to first order in `ρ^{-2}`:
/// `(1+r^{-2})^{-p/2} ≈ r^{-p}(1 - p/(2r²))`.
fn power_tail(rho: f64, k: f64, p: f64) -> f64 {
    let lead = rho.powf(k - p) / (p - k);
    let corr = -0.5 * p * rho.powf(k - p - 2.0) / (p - k + 2.0);
    lead + corr
}

/// Convenience wrapper for a finite ρ.
pub fn w_kernel_finite(rho: f64, params: &OperatorParams) -> Result<f64> {
    w_kernel(ExtendedMeasure::Finite(rho), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::quad_tail;
    use approx::assert_relative_eq;
    use statrs::function::beta::beta;

    fn params(n: usize, k: usize, s: f64) -> OperatorParams {
        OperatorParams::new(n, k, s).unwrap()
    }

    #[test]
    fn infinite_argument_is_exactly_zero() {
        let p = params(2, 1, 0.75);
        assert_eq!(w_kernel(ExtendedMeasure::Infinite, &p).unwrap(), 0.0);
    }

    #[test]
    fn value_at_zero_matches_beta_oracle() {
        // substituting r² = t/(1-t) gives W(0) = k ω_k B(k/2, (n+2s-k)/2) / 2;
        // the first-order tail correction leaves an O(ρ*^{-4}) ≈ 3e-6 residue
        for (n, k, s) in [(2, 1, 0.75), (2, 2, 0.6), (3, 2, 0.9), (3, 1, 0.55)] {
            let p = params(n, k, s);
            let komega = k as f64 * unit_ball_measure(k).unwrap();
            let oracle =
                komega * 0.5 * beta(k as f64 / 2.0, (n as f64 + 2.0 * s - k as f64) / 2.0);
            assert_relative_eq!(w_kernel_finite(0.0, &p).unwrap(), oracle, max_relative = 1e-5);
        }
    }

    #[test]
    fn value_at_one_matches_independent_quadrature() {
        // n=2, k=1, s=0.75: W(1) = 2 ∫_1^∞ (1+r²)^{-1.75} dr
        let p = params(2, 1, 0.75);
        let opt = QuadOptions::with_tols(1e-13, 1e-12);
        let oracle = 2.0
            * quad_tail(|r: f64| (1.0 + r * r).powf(-1.75), 1.0, 3.5, &opt)
                .unwrap()
                .value;
        assert_relative_eq!(w_kernel_finite(1.0, &p).unwrap(), oracle, max_relative = 1e-6);
    }

    #[test]
    fn strictly_decreasing_with_power_law_limit() {
        let p = params(2, 1, 0.75);
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let rho = 0.1 * i as f64;
            let w = w_kernel_finite(rho, &p).unwrap();
            assert!(w < prev);
            prev = w;
        }
        // W(ρ)·ρ^{n+2s-k} → k ω_k / (n+2s-k)
        let limit = 2.0 / (p.kernel_exponent() - 1.0);
        let mut prev_dev = f64::INFINITY;
        for rho in [10.0, 100.0, 1000.0] {
            let w = w_kernel_finite(rho, &p).unwrap();
            let dev = (w * rho.powf(p.kernel_exponent() - 1.0) / limit - 1.0).abs();
            assert!(dev < prev_dev, "ratio not converging at ρ={rho}");
            prev_dev = dev;
        }
        assert!(prev_dev < 1e-5);
    }

    #[test]
    fn negative_argument_rejected() {
        let p = params(2, 1, 0.75);
        assert!(w_kernel_finite(-0.1, &p).is_err());
    }
}

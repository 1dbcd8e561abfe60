//! Gamma-function based constants: unit-ball measures and the fractional
//! Laplacian normalization.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Measure of the unit ball in `R^l`: `ω_l = π^{l/2} / Γ(l/2 + 1)`.
pub fn unit_ball_measure(l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::domain("unit_ball_measure requires l ≥ 1"));
    }
    let lf = l as f64;
    Ok(std::f64::consts::PI.powf(lf / 2.0) / gamma(lf / 2.0 + 1.0))
}

/// Normalization constant of the fractional Laplacian,
/// `c_{n,s} = 4^s Γ(n/2 + s) / (π^{n/2} |Γ(-s)|)`.
///
/// The reflection identity `|Γ(-s)| = Γ(1-s)/s` keeps all gamma arguments
/// positive. The constant vanishes linearly as `s → 1`.
pub fn frac_constant(n: usize, s: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("frac_constant requires n ≥ 1"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("frac_constant requires s ∈ (0,1), got {s}")));
    }
    let nf = n as f64;
    let c = 4.0_f64.powf(s) * s * gamma(nf / 2.0 + s)
        / (std::f64::consts::PI.powf(nf / 2.0) * gamma(1.0 - s));
    Ok(c)
}

/// Surface measure of the unit sphere `S^{n-1}`: `n ω_n`.
pub fn sphere_surface(n: usize) -> Result<f64> {
    Ok(n as f64 * unit_ball_measure(n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_balls_match_known_values() {
        // length of (-1,1), area of the disk, and the Γ(5/2) = 3√π/4 oracle
        assert_relative_eq!(unit_ball_measure(1).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(
            unit_ball_measure(2).unwrap(),
            std::f64::consts::PI,
            max_relative = 1e-14
        );
        let gamma_5_2 = 3.0 * std::f64::consts::PI.sqrt() / 4.0;
        let omega3 = std::f64::consts::PI.powf(1.5) / gamma_5_2;
        assert_relative_eq!(unit_ball_measure(3).unwrap(), omega3, max_relative = 1e-13);
        assert!(unit_ball_measure(0).is_err());
    }

    #[test]
    fn unit_ball_recursion() {
        // ω_{k+1} = ω_k · √π Γ(k/2+1) / Γ((k+1)/2 + 1)
        for k in 1..=6 {
            let kf = k as f64;
            let lhs = unit_ball_measure(k + 1).unwrap();
            let rhs = unit_ball_measure(k).unwrap() * std::f64::consts::PI.sqrt()
                * gamma(kf / 2.0 + 1.0)
                / gamma((kf + 1.0) / 2.0 + 1.0);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn frac_constant_known_value_and_limit() {
        // c_{1,1/2} = 4^{1/2} Γ(1) / (π^{1/2} |Γ(-1/2)|) with |Γ(-1/2)| = 2√π
        assert_relative_eq!(
            frac_constant(1, 0.5).unwrap(),
            1.0 / std::f64::consts::PI,
            max_relative = 1e-13
        );
        assert!(frac_constant(2, 0.75).unwrap() > 0.0);

        // c_{2,s}/(1-s) stabilizes as s → 1 (linear vanishing)
        let r: Vec<f64> = [0.9, 0.95, 0.99]
            .iter()
            .map(|&s| frac_constant(2, s).unwrap() / (1.0 - s))
            .collect();
        assert!(r.iter().all(|v| v.is_finite() && *v > 0.0));
        // extrapolated ratio difference shrinks along the sweep
        assert!((r[2] - r[1]).abs() < (r[1] - r[0]).abs());
        assert!(frac_constant(2, 1.0).is_err());
    }

    #[test]
    fn frac_constant_continuous_on_sweep() {
        // c_{n,s} vanishes linearly at s=1, so test continuity of c/(1-s)
        let mut prev = None;
        for i in 1..40 {
            let s = 0.5 + 0.0125 * i as f64;
            if s >= 1.0 {
                break;
            }
            let c = frac_constant(2, s).unwrap() / (1.0 - s);
            assert!(c > 0.0);
            if let Some(p) = prev {
                let rel: f64 = (c - p) / p;
                assert!(rel.abs() < 0.1, "jump at s={s}");
            }
            prev = Some(c);
        }
    }
}

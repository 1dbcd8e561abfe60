//! Admissible kernels: construction of the optimal kernel from the sublevel
//! profile and the Monte Carlo membership verifier for the defining
//! slice-measure identity
//! `H^k({y : K(y,z) > r^{-(n+2s)}}) = ω_k (r² - |z|²)_+^{k/2}`.

use serde::{Deserialize, Serialize};

use crate::convex::{Finiteness, SublevelProfile};
use crate::error::{Error, Result};
use crate::numerics::mc::mc_region_measure;
use crate::numerics::quad::BoxDomain;
use crate::numerics::special::unit_ball_measure;
use crate::numerics::{ExtendedMeasure, OperatorParams, QuadratureSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelProvenance {
    Isotropic,
    Shifted { xbar: Vec<f64> },
    OptimalFromRyff,
    Custom { label: String },
}

/// A kernel on `R^n = R^k × R^{n-k}` with a per-slice window hint for the
/// membership sampler.
pub struct KernelDescriptor<'a> {
    pub provenance: KernelProvenance,
    params: OperatorParams,
    eval: Box<dyn Fn(&[f64], &[f64]) -> f64 + Sync + 'a>,
    /// half-width of a y-box guaranteed to contain
    /// `{y : K(y, z) > r^{-(n+2s)}}`
    window: Box<dyn Fn(f64, &[f64]) -> f64 + Sync + 'a>,
}

impl<'a> KernelDescriptor<'a> {
    pub fn eval(&self, y: &[f64], z: &[f64]) -> f64 {
        (self.eval)(y, z)
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    /// `|x|^{-(n+2s)}`
    pub fn isotropic(params: OperatorParams) -> Self {
        let p = params.kernel_exponent();
        KernelDescriptor {
            provenance: KernelProvenance::Isotropic,
            params,
            eval: Box::new(move |y, z| {
                let r2: f64 = y.iter().chain(z).map(|v| v * v).sum();
                r2.powf(-0.5 * p)
            }),
            window: Box::new(|r, _z| 1.05 * r + 0.1),
        }
    }

    /// `|x - x̄|^{-(n+2s)}` with `x̄ = (ȳ, 0)` in the k-plane.
    pub fn shifted(params: OperatorParams, ybar: Vec<f64>) -> Result<Self> {
        if ybar.len() != params.k {
            return Err(Error::domain("shift must lie in the k-plane"));
        }
        let p = params.kernel_exponent();
        let shift_norm: f64 = ybar.iter().map(|v| v * v).sum::<f64>().sqrt();
        let yb = ybar.clone();
        Ok(KernelDescriptor {
            provenance: KernelProvenance::Shifted { xbar: ybar },
            params,
            eval: Box::new(move |y, z| {
                let r2: f64 = y
                    .iter()
                    .zip(&yb)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    + z.iter().map(|v| v * v).sum::<f64>();
                r2.powf(-0.5 * p)
            }),
            window: Box::new(move |r, _z| 1.05 * (r + shift_norm) + 0.1),
        })
    }

    /// `|A^{-1}x|^{-(n+2s)}` for a volume-preserving `A` mixing only the
    /// first k coordinates: slices deform but keep their measures.
    pub fn linear_mixed(params: OperatorParams, a: nalgebra::DMatrix<f64>) -> Result<Self> {
        let n = params.n;
        let k = params.k;
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::domain("matrix dimension mismatch"));
        }
        // must fix the z coordinates and have unit determinant
        for i in k..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (a[(i, j)] - expect).abs() > 1e-12 || (a[(j, i)] - expect).abs() > 1e-12 {
                    return Err(Error::domain("A must mix only the first k coordinates"));
                }
            }
        }
        if (a.determinant().abs() - 1.0).abs() > 1e-10 {
            return Err(Error::domain("A must be volume preserving (|det A| = 1)"));
        }
        let ainv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::domain("A not invertible"))?;
        let p = params.kernel_exponent();
        let op_norm = a.clone().svd(false, false).singular_values.max();
        Ok(KernelDescriptor {
            provenance: KernelProvenance::Custom { label: "linear_mixed".into() },
            params,
            eval: Box::new(move |y, z| {
                let x: Vec<f64> = y.iter().chain(z).copied().collect();
                let xv = nalgebra::DVector::from_vec(x);
                let w = &ainv * xv;
                w.norm().powf(-p)
            }),
            window: Box::new(move |r, _z| 1.05 * op_norm * r + 0.1),
        })
    }

    /// The kernel attaining the infimum in Case 1:
    /// `K(y,z) = (μ(ũ(y,z), z)^{2/k} + |z|²)^{-(n+2s)/2}`, the Ryff-map
    /// realization through the strict sublevel measure.
    pub fn optimal(profile: &'a SublevelProfile, params: OperatorParams) -> Result<Self> {
        if !matches!(profile.finiteness(), Finiteness::AllFinite) {
            return Err(Error::RouteNotApplicable(
                "optimal kernel construction requires Case 1 (finite slice measures)".into(),
            ));
        }
        if profile.k() != params.k || profile.excess().dim() != params.n {
            return Err(Error::domain("profile/params shape mismatch"));
        }
        let p = params.kernel_exponent();
        let k = params.k;
        let kf = k as f64;
        let dim = params.n;
        let eval_profile = profile;
        let window_profile = profile;
        Ok(KernelDescriptor {
            provenance: KernelProvenance::OptimalFromRyff,
            params,
            eval: Box::new(move |y, z| {
                let mut x = vec![0.0; dim];
                x[..k].copy_from_slice(y);
                x[k..].copy_from_slice(z);
                let level = eval_profile.excess().eval(&x);
                let mu = match eval_profile.measure(level, z) {
                    Ok(ExtendedMeasure::Finite(m)) => m,
                    _ => return f64::NAN,
                };
                let z2: f64 = z.iter().map(|v| v * v).sum();
                (mu.powf(2.0 / kf) + z2).powf(-0.5 * p)
            }),
            window: Box::new(move |r, z| {
                // {K > r^{-(n+2s)}} = {μ(ũ(y,z), z) < (r²-|z|²)^{k/2}} is
                // contained in a sublevel set of ũ; bracket its level
                let z2: f64 = z.iter().map(|v| v * v).sum();
                let target = (r * r - z2).max(0.0).powf(kf / 2.0);
                let mut level = 1.0;
                for _ in 0..80 {
                    match window_profile.measure(level, z) {
                        Ok(ExtendedMeasure::Finite(m)) if m <= target => level *= 2.0,
                        _ => break,
                    }
                }
                // radius of the ũ-slice at that level along the y-axes
                let mut radius: f64 = 0.1;
                for axis in 0..k {
                    let mut hi = 0.5;
                    for _ in 0..60 {
                        let mut x = vec![0.0; dim];
                        x[k..].copy_from_slice(z);
                        x[axis] = hi;
                        if window_profile.excess().eval(&x) > level {
                            break;
                        }
                        hi *= 2.0;
                    }
                    radius = radius.max(hi);
                }
                1.2 * radius + 0.1
            }),
        })
    }

    /// Pointwise-scaled kernel (planted-fault probe; scaling breaks the
    /// slice-measure identity).
    pub fn scaled(base: KernelDescriptor<'a>, factor: f64) -> Self {
        let p = base.params.kernel_exponent();
        let KernelDescriptor { provenance: _, params, eval, window } = base;
        // the superlevel of the scaled kernel at r matches the base at
        // r·factor^{1/(n+2s)}
        let blow = factor.powf(1.0 / p).max(1.0);
        KernelDescriptor {
            provenance: KernelProvenance::Custom { label: format!("scaled×{factor}") },
            params,
            eval: Box::new(move |y, z| factor * eval(y, z)),
            window: Box::new(move |r, z| window(blow * r, z)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipRow {
    pub r: f64,
    pub z: Vec<f64>,
    pub expected: f64,
    pub estimated: f64,
    pub std_err: f64,
    pub deviation_sigmas: f64,
    pub rel_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipReport {
    pub rows: Vec<MembershipRow>,
    pub worst_rel_deviation: f64,
    pub worst_sigmas: f64,
    pub pass: bool,
}

/// Monte Carlo check of the kernel-family identity on an `(r, z)` grid.
pub fn kernel_membership(
    kernel: &KernelDescriptor,
    params: &OperatorParams,
    spec: &QuadratureSpec,
) -> Result<MembershipReport> {
    let k = params.k;
    let m = params.codim();
    let omega_k = unit_ball_measure(k)?;
    let rs = [0.45, 0.8, 1.2, 1.8, 2.6];
    let z_fracs = [0.0, 0.3, 0.55, 0.8, 1.15];

    let mut rows = Vec::new();
    for &r in &rs {
        for &frac in &z_fracs {
            let mut z = vec![0.0; m];
            if m > 0 {
                z[0] = frac * r;
            } else if frac > 0.0 {
                continue; // k = n has a single slice family
            }
            let z2: f64 = z.iter().map(|v| v * v).sum();
            let expected = if z2 < r * r {
                omega_k * (r * r - z2).powf(k as f64 / 2.0)
            } else {
                0.0
            };
            let threshold = r.powf(-params.kernel_exponent());
            let half = (kernel.window)(r, &z).max(1e-3);
            let domain = BoxDomain::new(vec![-half; k], vec![half; k])?;
            let est = mc_region_measure(
                |y: &[f64]| kernel.eval(y, &z) > threshold,
                &domain,
                spec.mc_samples,
                spec.seed ^ (rows.len() as u64).wrapping_mul(0x9e3779b97f4a7c15),
            )?;
            let sigma = est.std_err.max(1e-12);
            let dev = (est.value - expected).abs();
            let pass = if expected == 0.0 {
                est.value == 0.0
            } else {
                dev <= 3.0 * sigma
            };
            rows.push(MembershipRow {
                r,
                z,
                expected,
                estimated: est.value,
                std_err: est.std_err,
                deviation_sigmas: dev / sigma,
                rel_deviation: if expected > 0.0 { dev / expected } else { dev },
                pass,
            });
        }
    }
    let worst_rel = rows.iter().map(|r| r.rel_deviation).fold(0.0, f64::max);
    let worst_sig = rows.iter().map(|r| r.deviation_sigmas).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.pass);
    Ok(MembershipReport {
        rows,
        worst_rel_deviation: worst_rel,
        worst_sigmas: worst_sig,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexFunction;
    use crate::numerics::quad::{quad_1d_singular, quad_tail, QuadOptions};

    fn spec_fast() -> QuadratureSpec {
        QuadratureSpec { mc_samples: 200_000, ..Default::default() }
    }

    #[test]
    fn isotropic_kernel_is_member() {
        let params = OperatorParams::new(2, 1, 0.75).unwrap();
        let kern = KernelDescriptor::isotropic(params);
        let report = kernel_membership(&kern, &params, &spec_fast()).unwrap();
        assert!(report.pass, "worst {}σ", report.worst_sigmas);
    }

    #[test]
    fn shifted_kernel_is_member() {
        let params = OperatorParams::new(2, 1, 0.75).unwrap();
        let kern = KernelDescriptor::shifted(params, vec![0.8]).unwrap();
        let report = kernel_membership(&kern, &params, &spec_fast()).unwrap();
        assert!(report.pass, "worst {}σ", report.worst_sigmas);
    }

    #[test]
    fn volume_preserving_mix_is_member() {
        // n = 3, k = 2: shear+squeeze inside the 2-plane, det = 1
        let params = OperatorParams::new(3, 2, 0.7).unwrap();
        let a = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.0],
        );
        let kern = KernelDescriptor::linear_mixed(params, a).unwrap();
        let report = kernel_membership(&kern, &params, &spec_fast()).unwrap();
        assert!(report.pass, "worst {}σ", report.worst_sigmas);
    }

    #[test]
    fn scaled_kernel_fails_membership() {
        let params = OperatorParams::new(2, 1, 0.75).unwrap();
        let kern = KernelDescriptor::scaled(KernelDescriptor::isotropic(params), 2.0);
        let report = kernel_membership(&kern, &params, &spec_fast()).unwrap();
        assert!(!report.pass);
        assert!(report.worst_rel_deviation > 0.1);
    }

    #[test]
    fn optimal_kernel_of_radial_input_is_isotropic() {
        let params = OperatorParams::new(2, 1, 0.75).unwrap();
        let u = ConvexFunction::radial_cone(2, 1.0).unwrap();
        let profile =
            SublevelProfile::new_exact(u.excess_at(&[0.0, 0.0]).unwrap(), 1).unwrap();
        let kern = KernelDescriptor::optimal(&profile, params).unwrap();
        let iso = KernelDescriptor::isotropic(params);
        for (y, z) in [(0.5, 0.3), (1.5, -0.4), (0.1, 1.0)] {
            let a = kern.eval(&[y], &[z]);
            let b = iso.eval(&[y], &[z]);
            assert!((a - b).abs() <= 1e-8 * b, "optimal {a} vs isotropic {b}");
        }
    }

    #[test]
    fn optimal_kernel_passes_membership_on_anisotropic_input() {
        let params = OperatorParams::new(2, 1, 0.75).unwrap();
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let u = ConvexFunction::smoothed_cone(a).unwrap();
        let profile =
            SublevelProfile::new_exact(u.excess_at(&[0.5, 0.3]).unwrap(), 1).unwrap();
        let kern = KernelDescriptor::optimal(&profile, params).unwrap();
        let report = kernel_membership(&kern, &params, &spec_fast()).unwrap();
        assert!(
            report.pass,
            "worst {}σ rel {}",
            report.worst_sigmas, report.worst_rel_deviation
        );
    }

    #[test]
    fn pairing_with_optimal_kernel_reproduces_operator_value() {
        // ∫ ũ K_opt dx = F_1^s u(x0) within 2%
        let s = 0.75;
        let params = OperatorParams::new(2, 1, s).unwrap();
        let spec = QuadratureSpec::default();
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let u = ConvexFunction::smoothed_cone(a).unwrap();
        let x0 = [0.5, 0.3];
        let profile = SublevelProfile::new_exact(u.excess_at(&x0).unwrap(), 1).unwrap();
        let kern = KernelDescriptor::optimal(&profile, params).unwrap();
        let excess = profile.excess();

        // pairing in polar coordinates: integrand ~ r^{1-2s} at 0
        let opt = QuadOptions::with_tols(1e-10, 1e-8);
        let ntheta = 96;
        let mut total = 0.0;
        for j in 0..ntheta {
            let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / ntheta as f64;
            let dir = [th.cos(), th.sin()];
            let integrand = |r: f64| {
                let x = [r * dir[0], r * dir[1]];
                let v = excess.eval(&x) * kern.eval(&x[..1], &x[1..]) * r;
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            let head =
                quad_1d_singular(integrand, 0.0, 50.0, Some(2.0 * s - 1.0), None, &opt)
                    .unwrap();
            let tail = quad_tail(integrand, 50.0, 2.0 * s, &opt).unwrap();
            total += head.value + tail.value;
        }
        let pairing = params.c_ns * total * 2.0 * std::f64::consts::PI / ntheta as f64;
        let reference = super::super::f_ks_layercake(&profile, &params, &spec)
            .unwrap()
            .value
            .as_f64();
        assert!(
            ((pairing - reference) / reference).abs() < 0.02,
            "pairing {pairing} vs layer-cake {reference}"
        );
    }
}

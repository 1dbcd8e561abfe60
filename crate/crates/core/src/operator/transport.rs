//! 1-D transport representation check (n = 2, k = 1).
//!
//! For each slice offset z ≠ 0 the monotone (Brenier) map `T_z` pushing the
//! isotropic slice density `f_z(y) = (y²+z²)^{-(n+2s)/2}` forward to the
//! rearranged density `g_z(y) = (μ(ũ(y,z),z)² + z²)^{-(n+2s)/2}` is built
//! from anchored CDFs. With `φ_z = T_z^{-1}` the verifier samples the
//! measure-preservation relation `ω_1 |φ_z(y)| = σ_z(y)` and compares the two
//! sides of the transported integral representation.

use serde::{Deserialize, Serialize};

use crate::convex::SublevelProfile;
use crate::error::{Error, Result};
use crate::numerics::quad::{gauss_legendre, quad_1d, quad_tail, QuadOptions};
use crate::numerics::{ExtendedMeasure, OperatorParams, QuadratureSpec};
use crate::operator::{classify_case, f_ks_layercake, CaseTag};

/// Anchored CDF of a positive integrable density on R with power tails.
struct Cdf {
    ys: Vec<f64>,
    /// cumulative mass from the left anchor
    cum: Vec<f64>,
    left_tail: f64,
    total: f64,
    density: Box<dyn Fn(f64) -> f64 + Sync>,
}

impl Cdf {
    fn build(density: Box<dyn Fn(f64) -> f64 + Sync>, scale: f64, decay: f64) -> Result<Self> {
        let sc = scale.max(1e-3);
        let mut ys = Vec::new();
        let per_side = 200;
        for i in (0..per_side).rev() {
            ys.push(-sc * 10f64.powf(-4.0 + 10.0 * i as f64 / per_side as f64));
        }
        ys.push(0.0);
        for i in 0..per_side {
            ys.push(sc * 10f64.powf(-4.0 + 10.0 * i as f64 / per_side as f64));
        }
        let opt = QuadOptions::with_tols(1e-300, 1e-11);
        let mut cum = Vec::with_capacity(ys.len());
        cum.push(0.0);
        let mut acc = 0.0;
        for w in ys.windows(2) {
            acc += quad_1d(&density, w[0], w[1], &opt)?.value;
            cum.push(acc);
        }
        let edge = *ys.last().unwrap();
        let right_tail = quad_tail(&density, edge, decay, &opt)?.value;
        let left_tail = quad_tail(|y: f64| density(-y), edge, decay, &opt)?.value;
        let total = left_tail + acc + right_tail;
        Ok(Cdf { ys, cum, left_tail, total, density })
    }

    fn panel_quad(&self, a: f64, b: f64) -> f64 {
        quad_1d(&self.density, a, b, &QuadOptions::with_tols(1e-300, 1e-11))
            .map(|r| r.value)
            .unwrap_or(0.0)
    }

    fn value(&self, x: f64) -> f64 {
        let n = self.ys.len();
        if x <= self.ys[0] {
            return (self.left_tail - self.panel_quad(x, self.ys[0])).max(0.0);
        }
        if x >= self.ys[n - 1] {
            return (self.left_tail + self.cum[n - 1] + self.panel_quad(self.ys[n - 1], x))
                .min(self.total);
        }
        let j = self.ys.partition_point(|&y| y <= x) - 1;
        self.left_tail + self.cum[j] + self.panel_quad(self.ys[j], x)
    }

    /// Inverse CDF: panel lookup then safeguarded Newton.
    fn invert(&self, target: f64) -> f64 {
        let n = self.ys.len();
        let t = (target - self.left_tail).clamp(0.0, self.cum[n - 1]);
        let j = self.cum.partition_point(|&c| c <= t).clamp(1, n - 1) - 1;
        let (mut lo, mut hi) = (self.ys[j], self.ys[(j + 1).min(n - 1)]);
        if hi <= lo {
            return lo;
        }
        let mut x = 0.5 * (lo + hi);
        let base = self.left_tail + self.cum[j];
        let goal = target - base;
        for _ in 0..60 {
            let val = self.panel_quad(self.ys[j], x);
            if (val - goal).abs() <= 1e-13 * (1.0 + self.total) {
                break;
            }
            if val < goal {
                lo = x;
            } else {
                hi = x;
            }
            let d = (self.density)(x);
            let newton = x - (val - goal) / d.max(1e-300);
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportReport {
    pub z_samples: Vec<f64>,
    /// worst |ω_1 |φ_z(y)| - σ_z(y)| over the sampled (y, z)
    pub relation_max_dev: f64,
    /// worst ||φ_z^{-1}([a,b])| - (b-a)| over random intervals
    pub preservation_max_dev: f64,
    /// worst relative mass mismatch between the two densities
    pub mass_rel_dev: f64,
    /// layer-cake value of `F_k^s u(x0)`
    pub lhs: f64,
    /// transported integral of `ũ(φ_z^{-1}(y), z)` against the isotropic kernel
    pub rhs: f64,
    pub rel_gap: f64,
}

/// Builds both slice CDFs at offset z.
fn slice_cdfs(
    profile: &SublevelProfile,
    params: &OperatorParams,
    z: f64,
) -> Result<(Cdf, Cdf)> {
    let p = params.kernel_exponent();
    let z2 = z * z;
    let f_dens =
        Box::new(move |y: f64| (y * y + z2).powf(-0.5 * p)) as Box<dyn Fn(f64) -> f64 + Sync>;
    let prof = profile.clone();
    let g_dens = Box::new(move |y: f64| {
        let level = prof.excess().eval(&[y, z]);
        match prof.measure(level, &[z]) {
            Ok(ExtendedMeasure::Finite(m)) => (m * m + z2).powf(-0.5 * p),
            _ => f64::NAN,
        }
    }) as Box<dyn Fn(f64) -> f64 + Sync>;
    let f_cdf = Cdf::build(f_dens, z.abs(), p)?;
    let g_cdf = Cdf::build(g_dens, z.abs().max(1.0), p)?;
    Ok((f_cdf, g_cdf))
}

/// Runs the transport verification; requires n = 2, k = 1 and Case 1.
///
/// The relation and preservation checks sample the user-provided offsets
/// `zs`; the two-sided integral comparison integrates over all of z. The
/// relation `ω_1|φ_z| = σ_z` characterizes measure-preserving maps, which the
/// monotone map realizes when the slice sublevel intervals share a fixed
/// center per z (radial and sheared-cone instances).
pub fn transport_verify_1d(
    profile: &SublevelProfile,
    params: &OperatorParams,
    spec: &QuadratureSpec,
    zs: &[f64],
    check_relation: bool,
) -> Result<TransportReport> {
    if params.n != 2 || params.k != 1 {
        return Err(Error::Unsupported("transport verifier requires n = 2, k = 1".into()));
    }
    let (case, _) = classify_case(profile, spec)?;
    if !matches!(case, CaseTag::Case1) {
        return Err(Error::RouteNotApplicable("transport verifier requires Case 1".into()));
    }
    if zs.iter().any(|&z| z == 0.0) {
        return Err(Error::domain("transport slices require z ≠ 0"));
    }
    let s = params.s;
    let p = params.kernel_exponent();
    let excess = profile.excess();

    let slice_mu = |y: f64, z: f64| -> Result<f64> {
        let level = excess.eval(&[y, z]);
        match profile.measure(level, &[z])? {
            ExtendedMeasure::Finite(m) => Ok(m),
            ExtendedMeasure::Infinite => Err(Error::RouteNotApplicable(
                "infinite slice measure in transport".into(),
            )),
        }
    };

    let mut relation_max_dev: f64 = 0.0;
    let mut preservation_max_dev: f64 = 0.0;
    let mut mass_rel_dev: f64 = 0.0;

    if check_relation {
        for &z in zs {
            let (f_cdf, g_cdf) = slice_cdfs(profile, params, z)?;
            mass_rel_dev =
                mass_rel_dev.max((f_cdf.total - g_cdf.total).abs() / f_cdf.total);
            let phi = |y: f64| f_cdf.invert(g_cdf.value(y));
            let t_map = |y: f64| g_cdf.invert(f_cdf.value(y));
            for i in 0..12 {
                let y = -3.0 + 6.0 * (i as f64 + 0.5) / 12.0;
                let sigma = 2.0 * slice_mu(y, z)?;
                let dev = (2.0 * phi(y).abs() - sigma).abs();
                relation_max_dev = relation_max_dev.max(dev);
            }
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed ^ 0xfeed);
            for _ in 0..34 {
                let a: f64 = rng.gen_range(-2.0..2.0);
                let len: f64 = rng.gen_range(0.0..1.5);
                // φ monotone increasing: preimage of [a, a+len] is [T(a), T(a+len)]
                let measured = t_map(a + len) - t_map(a);
                preservation_max_dev = preservation_max_dev.max((measured - len).abs());
            }
        }
    }

    // transported inner integral at one offset
    let inner_rhs = |z: f64| -> Result<f64> {
        let (f_cdf, g_cdf) = slice_cdfs(profile, params, z)?;
        let t_map = |y: f64| g_cdf.invert(f_cdf.value(y));
        // the map evaluation carries inversion noise around 1e-9 relative,
        // so the quadrature targets a tolerance above that floor
        let integrand = |y: f64| {
            let w = t_map(y);
            excess.eval(&[w, z]) * (y * y + z * z).powf(-0.5 * p)
        };
        let opt = QuadOptions { abs_tol: 1e-290, rel_tol: 3e-6, max_intervals: 8192 };
        let split = 10.0 * (1.0 + z.abs());
        let mut total = 0.0;
        for sgn in [1.0, -1.0] {
            let h = quad_1d(|y: f64| integrand(sgn * y), 0.0, split, &opt)?;
            let tl = quad_tail(|y: f64| integrand(sgn * y), split, 1.0 + 2.0 * s, &opt)?;
            total += h.value + tl.value;
        }
        Ok(total)
    };

    // outer z-integral of the transported representation on a substituted
    // Gauss grid (the integrand behaves like |z|^{1-2s} near 0)
    let z_split: f64 = 12.0;
    let (xs, ws) = gauss_legendre(20);
    let mut rhs = 0.0;
    for sgn in [1.0, -1.0] {
        // z = z_split·u² flattens the |z|^{-(2s-1)} endpoint
        for (x, w) in xs.iter().zip(&ws) {
            let u = 0.5 * (x + 1.0);
            let z = sgn * z_split * u * u;
            if z == 0.0 {
                continue;
            }
            let jac = z_split * 2.0 * u * 0.5;
            rhs += w * jac * inner_rhs(z)?;
        }
        // tail |z| > z_split with decay 2s: z = z_split/u
        let alpha = (2.0 - 2.0 * s).max(0.0);
        let pexp = 1.0 / (1.0 - alpha);
        for (x, w) in xs.iter().zip(&ws) {
            let v = 0.5 * (x + 1.0);
            let u = v.powf(pexp);
            let jac_sub = pexp * v.powf(pexp - 1.0) * 0.5;
            let z = sgn * z_split / u;
            rhs += w * jac_sub * inner_rhs(z)? * z_split / (u * u);
        }
    }
    rhs *= params.c_ns;

    let lhs = f_ks_layercake(profile, params, spec)?.value.as_f64();
    let rel_gap = ((lhs - rhs) / lhs).abs();
    Ok(TransportReport {
        z_samples: zs.to_vec(),
        relation_max_dev,
        preservation_max_dev,
        mass_rel_dev,
        lhs,
        rhs,
        rel_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexFunction;

    #[test]
    fn radial_input_has_identity_transport() {
        let params = OperatorParams::new(2, 1, 0.75).unwrap();
        let spec = QuadratureSpec::default();
        let u = ConvexFunction::radial_cone(2, 1.0).unwrap();
        let profile = SublevelProfile::new_exact(u.excess_at(&[0.0, 0.0]).unwrap(), 1).unwrap();
        let report =
            transport_verify_1d(&profile, &params, &spec, &[0.4, -0.8, 1.5], true).unwrap();
        assert!(report.relation_max_dev < 1e-6, "relation dev {}", report.relation_max_dev);
        assert!(
            report.preservation_max_dev < 1e-6,
            "preservation dev {}",
            report.preservation_max_dev
        );
        assert!(report.rel_gap < 0.02, "lhs {} rhs {}", report.lhs, report.rhs);
    }

    #[test]
    fn sheared_cone_has_shift_transport() {
        // A = [[1,-1],[-1,2]]: slices are centered at c(z) = z, so the
        // Brenier map is the shift y ↦ y - z and the relation is exact
        let params = OperatorParams::new(2, 1, 0.75).unwrap();
        let spec = QuadratureSpec::default();
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 2.0]);
        let u = ConvexFunction::smoothed_cone(a).unwrap();
        let profile = SublevelProfile::new_exact(u.excess_at(&[0.0, 0.0]).unwrap(), 1).unwrap();
        let report =
            transport_verify_1d(&profile, &params, &spec, &[0.5, -0.7], true).unwrap();
        assert!(report.relation_max_dev < 1e-6, "relation dev {}", report.relation_max_dev);
        assert!(
            report.preservation_max_dev < 1e-6,
            "preservation dev {}",
            report.preservation_max_dev
        );
        assert!(report.rel_gap < 0.02, "lhs {} rhs {}", report.lhs, report.rhs);
    }
}

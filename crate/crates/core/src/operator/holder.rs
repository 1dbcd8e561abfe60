//! Hölder regularity probe: `|F(x1) - F(x0)| / |x1 - x0|^{1-s}` under
//! step-halving, with the section diameter and the operator value entering
//! the reported budget. The unnamed constant of the continuity estimate is
//! reported empirically, never asserted against a presumed value.

use serde::{Deserialize, Serialize};

use crate::convex::{section_diameter, ConvexFunction, SublevelProfile};
use crate::error::{Error, Result};
use crate::numerics::{OperatorParams, QuadratureSpec};
use crate::operator::f_ks_layercake;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderReport {
    pub lambda: f64,
    pub f_at_center: f64,
    pub h_values: Vec<f64>,
    pub f_values: Vec<f64>,
    /// `|F(x0 + h e) - F(x0)| / h^{1-s}`
    pub ratios: Vec<f64>,
    /// empirical constant after subtracting the `(4Λ/ε) h F(x0)` budget term
    pub empirical_constants: Vec<f64>,
    /// ratios stay within a factor 2 across the halvings
    pub bounded: bool,
}

pub fn holder_probe(
    u: &ConvexFunction,
    x0: &[f64],
    r0: f64,
    eps: f64,
    params: &OperatorParams,
    spec: &QuadratureSpec,
) -> Result<HolderReport> {
    if r0 <= 0.0 || eps <= 0.0 {
        return Err(Error::domain("holder_probe requires r0, eps > 0"));
    }
    let n = u.dim();
    // Λ = sup of section diameters over the probe ball, approximated on the
    // center and four axis points
    let mut lambda: f64 = 0.0;
    let mut probes = vec![x0.to_vec()];
    for d in 0..n {
        for sgn in [1.0, -1.0] {
            let mut x = x0.to_vec();
            x[d] += sgn * r0 / 2.0;
            probes.push(x);
        }
    }
    for x in &probes {
        match section_diameter(u, x, eps)? {
            Some(d) => lambda = lambda.max(d),
            None => {
                return Err(Error::RouteNotApplicable(
                    "unbounded sections: Hölder probe not applicable".into(),
                ))
            }
        }
    }

    let h0 = 0.9 * (r0 / 4.0).min(lambda).min(eps / (8.0 * lambda));
    let s = params.s;
    let value_at = |x: &[f64]| -> Result<f64> {
        let profile = SublevelProfile::new_exact(u.excess_at(x)?, params.k)?;
        Ok(f_ks_layercake(&profile, params, spec)?.value.as_f64())
    };
    let f0 = value_at(x0)?;

    let mut h_values = Vec::new();
    let mut f_values = Vec::new();
    let mut ratios = Vec::new();
    let mut constants = Vec::new();
    for j in 0..4 {
        let h = h0 / 2f64.powi(j);
        let mut x1 = x0.to_vec();
        x1[0] += h;
        let f1 = value_at(&x1)?;
        let diff = (f1 - f0).abs();
        let ratio = diff / h.powf(1.0 - s);
        let budget_term = 4.0 * lambda / eps * h * f0;
        let c = (diff - budget_term).max(0.0) / (lambda.powf(1.0 - s) * h.powf(1.0 - s));
        h_values.push(h);
        f_values.push(f1);
        ratios.push(ratio);
        constants.push(c);
    }
    let base = ratios[0].max(1e-12);
    let bounded = ratios.iter().all(|&r| r <= 2.0 * base || r <= 1e-9);
    Ok(HolderReport {
        lambda,
        f_at_center: f0,
        h_values,
        f_values,
        ratios,
        empirical_constants: constants,
        bounded,
    })
}

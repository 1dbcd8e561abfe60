//! The local (s → 1) limit: `F_k^s u → MA_k u + Δ_{n-k} u`, where `MA_k` is
//! the k-variable Monge-Ampère operator `k det((u_ij)_{i,j≤k})^{1/k}` and
//! `Δ_{n-k}` the Laplacian in the remaining variables, plus the s-sweep
//! extrapolation that checks it numerically.

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexFunction, SublevelProfile};
use crate::error::{Error, Result};
use crate::numerics::{OperatorParams, QuadratureSpec};
use crate::operator::{f_ks_layercake, EvalValue};

/// `MA_k u(x0) + Δ_{n-k} u(x0)` from the analytic Hessian where available,
/// otherwise central finite differences.
pub fn local_limit(u: &ConvexFunction, x0: &[f64], k: usize) -> Result<f64> {
    let n = u.dim();
    if k == 0 || k > n {
        return Err(Error::domain("local_limit requires 1 ≤ k ≤ n"));
    }
    let h = match u.hessian(x0) {
        Some(h) => h,
        None => u.fd_hessian(x0, 1e-4),
    };
    let eig = h.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if eig.eigenvalues.iter().any(|&l| l < -1e-7 * (1.0 + scale)) {
        return Err(Error::domain(format!(
            "Hessian has a negative eigenvalue ({})",
            eig.eigenvalues.min()
        )));
    }
    let block = h.view((0, 0), (k, k)).into_owned();
    let det = block.determinant().max(0.0);
    let ma_k = k as f64 * det.powf(1.0 / k as f64);
    let trace_rest: f64 = (k..n).map(|i| h[(i, i)]).sum();
    Ok(ma_k + trace_rest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub s_values: Vec<f64>,
    pub f_values: Vec<f64>,
    pub err_estimates: Vec<f64>,
    /// quadratic-in-(1-s) extrapolation to s = 1
    pub extrapolated: f64,
    pub fit_residual: f64,
    /// the sweep was not monotone beyond its error bars
    pub monotone_warning: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,value,err\n");
        for ((s, v), e) in self.s_values.iter().zip(&self.f_values).zip(&self.err_estimates) {
            out.push_str(&format!("{s},{v},{e}\n"));
        }
        out
    }
}

/// Evaluates `F_k^s` over an s-grid and extrapolates to `s → 1` by a
/// least-squares quadratic in `(1 - s)`.
pub fn s_sweep_limit(
    u: &ConvexFunction,
    x0: &[f64],
    k: usize,
    s_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<SweepReport> {
    if s_grid.len() < 3 {
        return Err(Error::domain("s-sweep needs at least 3 grid points"));
    }
    if s_grid.iter().any(|&s| !(s > 0.5 && s < 1.0)) {
        return Err(Error::domain("s-sweep grid must lie in (1/2, 1)"));
    }
    let n = u.dim();
    let mut f_values = Vec::with_capacity(s_grid.len());
    let mut errs = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let params = OperatorParams::new(n, k, s)?;
        let profile = SublevelProfile::new_exact(u.excess_at(x0)?, k)?;
        let r = f_ks_layercake(&profile, &params, spec)?;
        match r.value {
            EvalValue::Finite(v) => {
                f_values.push(v);
                errs.push(r.err_estimate);
            }
            other => {
                return Err(Error::domain(format!(
                    "sweep expects finite values, got {other:?} at s = {s}"
                )))
            }
        }
    }

    // least squares for v ≈ a + b(1-s) + c(1-s)²
    let m = s_grid.len();
    let mut ata = nalgebra::DMatrix::zeros(3, 3);
    let mut atb = nalgebra::DVector::zeros(3);
    for i in 0..m {
        let x = 1.0 - s_grid[i];
        let row = [1.0, x, x * x];
        for a in 0..3 {
            for b in 0..3 {
                ata[(a, b)] += row[a] * row[b];
            }
            atb[a] += row[a] * f_values[i];
        }
    }
    let coef = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::domain("degenerate sweep fit"))?;
    let mut residual: f64 = 0.0;
    for i in 0..m {
        let x = 1.0 - s_grid[i];
        let fit: f64 = coef[0] + coef[1] * x + coef[2] * x * x;
        residual = residual.max((fit - f_values[i]).abs());
    }

    // monotonicity check along increasing s
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| s_grid[a].partial_cmp(&s_grid[b]).unwrap());
    let mut inc = true;
    let mut dec = true;
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slack = errs[a] + errs[b];
        if f_values[b] < f_values[a] - slack {
            inc = false;
        }
        if f_values[b] > f_values[a] + slack {
            dec = false;
        }
    }

    Ok(SweepReport {
        s_values: s_grid.to_vec(),
        f_values,
        err_estimates: errs,
        extrapolated: coef[0],
        fit_residual: residual,
        monotone_warning: !(inc || dec),
    })
}

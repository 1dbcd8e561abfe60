//! Analytic convex test functions: values, gradients, Hessians, excess
//! functions, growth certificates for (P1), nonnegativity probes for (P2),
//! and section diameters.
//!
//! Every descriptor is immutable after construction and all evaluators are
//! pure, so instances can be shared freely across threads.

pub mod descriptor;
pub mod measure;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;

pub use measure::{Finiteness, MeasureRoute, SublevelProfile};

/// Huber transition: quadratic inside `|t| ≤ m`, linear outside; `C^{1,1}`.
fn huber(m: f64, t: f64) -> f64 {
    let a = t.abs();
    if a <= m {
        0.5 * t * t
    } else {
        m * a - 0.5 * m * m
    }
}

fn huber_prime(m: f64, t: f64) -> f64 {
    t.clamp(-m, m)
}

/// Inverse of `huber(m, ·)` on `t ≥ 0`.
fn huber_inv(m: f64, c: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else if c <= 0.5 * m * m {
        (2.0 * c).sqrt()
    } else {
        c / m + 0.5 * m
    }
}

/// 1-D convex profile used by ridge descriptors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RidgeProfile {
    /// `r²`
    Square,
    /// `|r|`
    Abs,
}

impl RidgeProfile {
    fn eval(&self, r: f64) -> f64 {
        match self {
            RidgeProfile::Square => r * r,
            RidgeProfile::Abs => r.abs(),
        }
    }

    fn growth(&self) -> f64 {
        match self {
            RidgeProfile::Square => 2.0,
            RidgeProfile::Abs => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ConvexKind {
    /// `u(x) = √(1 + xᵀAx)` with `A` symmetric positive definite; growth 1.
    SmoothedCone { a: DMatrix<f64> },
    /// Huberized quadratic: equals `½ xᵀHx` on `|x| ≤ crossover` and grows
    /// linearly outside; globally convex and `C^{1,1}`. `H` symmetric PSD.
    LocalizedQuadratic {
        h: DMatrix<f64>,
        crossover: f64,
        /// eigenbasis of `h`, columns of `q` orthonormal
        q: DMatrix<f64>,
        d: DVector<f64>,
    },
    /// `u(x) = profile(|x_S|)` for a coordinate subset `S`; flat off `S`.
    Ridge { axes: Vec<usize>, profile: RidgeProfile },
    /// `base(x) + p·x + b`.
    AffineShift {
        base: Box<ConvexFunction>,
        p: DVector<f64>,
        b: f64,
    },
    /// `½ xᵀHx` without localization; growth 2, so (P1) fails for all s < 1.
    PureQuadratic { h: DMatrix<f64> },
    /// `-√(1 + |x|²)`: concave probe admitted only for the NegativeWitness
    /// test path.
    NegatedSmoothedCone,
}

#[derive(Debug, Clone)]
pub struct ConvexFunction {
    kind: ConvexKind,
    dim: usize,
    growth_exponent: f64,
}

fn check_symmetric(m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::domain("matrix dimension mismatch"));
    }
    for i in 0..dim {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()) {
                return Err(Error::domain("matrix must be symmetric"));
            }
        }
    }
    Ok(())
}

impl ConvexFunction {
    pub fn smoothed_cone(a: DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        check_symmetric(&a, dim)?;
        let eig = a.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::domain("SmoothedCone requires positive definite A"));
        }
        Ok(ConvexFunction {
            kind: ConvexKind::SmoothedCone { a },
            dim,
            growth_exponent: 1.0,
        })
    }

    /// Isotropic smoothed cone `√(1 + c|x|²)`.
    pub fn radial_cone(dim: usize, c: f64) -> Result<Self> {
        Self::smoothed_cone(DMatrix::identity(dim, dim) * c)
    }

    pub fn localized_quadratic(h: DMatrix<f64>, crossover: f64) -> Result<Self> {
        let dim = h.nrows();
        check_symmetric(&h, dim)?;
        if crossover <= 0.0 {
            return Err(Error::domain("crossover radius must be positive"));
        }
        let eig = h.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
            return Err(Error::domain("LocalizedQuadratic requires PSD H"));
        }
        let growth = if eig.eigenvalues.iter().all(|&l| l.abs() < 1e-14) {
            0.0
        } else {
            1.0
        };
        Ok(ConvexFunction {
            kind: ConvexKind::LocalizedQuadratic {
                h,
                crossover,
                q: eig.eigenvectors,
                d: eig.eigenvalues,
            },
            dim,
            growth_exponent: growth,
        })
    }

    pub fn ridge(dim: usize, axes: Vec<usize>, profile: RidgeProfile) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|&a| a >= dim) {
            return Err(Error::domain("ridge axes must be nonempty and within dimension"));
        }
        let growth = profile.growth();
        Ok(ConvexFunction {
            kind: ConvexKind::Ridge { axes, profile },
            dim,
            growth_exponent: growth,
        })
    }

    pub fn affine_shift(base: ConvexFunction, p: Vec<f64>, b: f64) -> Result<Self> {
        if p.len() != base.dim {
            return Err(Error::domain("shift vector dimension mismatch"));
        }
        let dim = base.dim;
        let growth = base.growth_exponent.max(1.0);
        Ok(ConvexFunction {
            kind: ConvexKind::AffineShift {
                base: Box::new(base),
                p: DVector::from_vec(p),
                b,
            },
            dim,
            growth_exponent: growth,
        })
    }

    /// A purely affine function `p·x + b`.
    pub fn affine(p: Vec<f64>, b: f64) -> Result<Self> {
        let dim = p.len();
        let zero = Self::localized_quadratic(DMatrix::zeros(dim, dim), 1.0)?;
        Self::affine_shift(zero, p, b)
    }

    pub fn pure_quadratic(h: DMatrix<f64>) -> Result<Self> {
        let dim = h.nrows();
        check_symmetric(&h, dim)?;
        Ok(ConvexFunction {
            kind: ConvexKind::PureQuadratic { h },
            dim,
            growth_exponent: 2.0,
        })
    }

    pub fn negated_cone(dim: usize) -> Self {
        ConvexFunction {
            kind: ConvexKind::NegatedSmoothedCone,
            dim,
            growth_exponent: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ConvexKind {
        &self.kind
    }

    /// Declared growth exponent at infinity; metadata, not inferred.
    pub fn growth_exponent(&self) -> f64 {
        self.growth_exponent
    }

    pub fn is_globally_convex(&self) -> bool {
        match &self.kind {
            ConvexKind::NegatedSmoothedCone => false,
            ConvexKind::AffineShift { base, .. } => base.is_globally_convex(),
            _ => true,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            ConvexKind::SmoothedCone { a } => {
                let v = DVector::from_column_slice(x);
                (1.0 + (&v.transpose() * a * &v)[(0, 0)]).sqrt()
            }
            ConvexKind::LocalizedQuadratic { q, d, crossover, .. } => {
                let v = DVector::from_column_slice(x);
                let w = q.transpose() * v;
                w.iter()
                    .zip(d.iter())
                    .map(|(&wi, &di)| di * huber(*crossover, wi))
                    .sum()
            }
            ConvexKind::Ridge { axes, profile } => {
                let r = axes.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
                profile.eval(r)
            }
            ConvexKind::AffineShift { base, p, b } => {
                base.eval(x) + p.iter().zip(x).map(|(pi, xi)| pi * xi).sum::<f64>() + b
            }
            ConvexKind::PureQuadratic { h } => {
                let v = DVector::from_column_slice(x);
                0.5 * (&v.transpose() * h * &v)[(0, 0)]
            }
            ConvexKind::NegatedSmoothedCone => {
                -(1.0 + x.iter().map(|xi| xi * xi).sum::<f64>()).sqrt()
            }
        }
    }

    /// Gradient where differentiable; the minimal-norm subgradient at kinks
    /// (ridge vertices and the `Abs` profile at the origin).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            ConvexKind::SmoothedCone { a } => {
                let v = DVector::from_column_slice(x);
                let q = 1.0 + (&v.transpose() * a * &v)[(0, 0)];
                let g = a * v / q.sqrt();
                g.iter().copied().collect()
            }
            ConvexKind::LocalizedQuadratic { q, d, crossover, .. } => {
                let v = DVector::from_column_slice(x);
                let w = q.transpose() * &v;
                let gw = DVector::from_iterator(
                    w.len(),
                    w.iter()
                        .zip(d.iter())
                        .map(|(&wi, &di)| di * huber_prime(*crossover, wi)),
                );
                (q * gw).iter().copied().collect()
            }
            ConvexKind::Ridge { axes, profile } => {
                let r = axes.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
                let mut g = vec![0.0; self.dim];
                if r > 0.0 {
                    let dr = match profile {
                        RidgeProfile::Square => 2.0 * r,
                        RidgeProfile::Abs => 1.0,
                    };
                    for &i in axes {
                        g[i] = dr * x[i] / r;
                    }
                }
                // at r = 0 the minimal-norm subgradient is 0 for both profiles
                g
            }
            ConvexKind::AffineShift { base, p, .. } => {
                let mut g = base.gradient(x);
                for (gi, pi) in g.iter_mut().zip(p.iter()) {
                    *gi += pi;
                }
                g
            }
            ConvexKind::PureQuadratic { h } => {
                let v = DVector::from_column_slice(x);
                (h * v).iter().copied().collect()
            }
            ConvexKind::NegatedSmoothedCone => {
                let q = 1.0 + x.iter().map(|xi| xi * xi).sum::<f64>();
                x.iter().map(|xi| -xi / q.sqrt()).collect()
            }
        }
    }

    /// Analytic Hessian where available.
    pub fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        match &self.kind {
            ConvexKind::SmoothedCone { a } => {
                let v = DVector::from_column_slice(x);
                let q = 1.0 + (&v.transpose() * a * &v)[(0, 0)];
                let av = a * &v;
                Some(a / q.sqrt() - &av * av.transpose() / q.powf(1.5))
            }
            ConvexKind::LocalizedQuadratic { h, crossover, .. } => {
                if x.iter().map(|xi| xi * xi).sum::<f64>().sqrt() < *crossover {
                    Some(h.clone())
                } else {
                    None
                }
            }
            ConvexKind::PureQuadratic { h } => Some(h.clone()),
            ConvexKind::AffineShift { base, .. } => base.hessian(x),
            _ => None,
        }
    }

    /// Central finite-difference Hessian.
    pub fn fd_hessian(&self, x: &[f64], h: f64) -> DMatrix<f64> {
        let n = self.dim;
        let mut out = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        let f0 = self.eval(x);
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    xp.copy_from_slice(x);
                    xp[i] = x[i] + h;
                    let fp = self.eval(&xp);
                    xp[i] = x[i] - h;
                    let fm = self.eval(&xp);
                    (fp - 2.0 * f0 + fm) / (h * h)
                } else {
                    xp.copy_from_slice(x);
                    xp[i] = x[i] + h;
                    xp[j] = x[j] + h;
                    let fpp = self.eval(&xp);
                    xp[j] = x[j] - h;
                    let fpm = self.eval(&xp);
                    xp[i] = x[i] - h;
                    let fmm = self.eval(&xp);
                    xp[j] = x[j] + h;
                    let fmp = self.eval(&xp);
                    (fpp - fpm - fmp + fmm) / (4.0 * h * h)
                };
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Global `C^{1,1}` seminorm bound (sup of the largest Hessian eigenvalue).
    pub fn c11_bound(&self) -> Option<f64> {
        match &self.kind {
            ConvexKind::SmoothedCone { a } => {
                Some(a.clone().symmetric_eigen().eigenvalues.max())
            }
            ConvexKind::LocalizedQuadratic { d, .. } => Some(d.max().max(0.0)),
            ConvexKind::PureQuadratic { h } => {
                Some(h.clone().symmetric_eigen().eigenvalues.max())
            }
            ConvexKind::Ridge { profile, .. } => match profile {
                RidgeProfile::Square => Some(2.0),
                RidgeProfile::Abs => None,
            },
            ConvexKind::AffineShift { base, .. } => base.c11_bound(),
            ConvexKind::NegatedSmoothedCone => Some(1.0),
        }
    }

    /// Directions along which the function is flat (constant); these make
    /// sections and sublevel slices unbounded.
    pub fn flat_directions(&self) -> Vec<DVector<f64>> {
        match &self.kind {
            ConvexKind::Ridge { axes, .. } => (0..self.dim)
                .filter(|i| !axes.contains(i))
                .map(|i| {
                    let mut v = DVector::zeros(self.dim);
                    v[i] = 1.0;
                    v
                })
                .collect(),
            ConvexKind::LocalizedQuadratic { q, d, .. } => (0..self.dim)
                .filter(|&i| d[i].abs() < 1e-14)
                .map(|i| q.column(i).into_owned())
                .collect(),
            ConvexKind::PureQuadratic { h } => {
                let eig = h.clone().symmetric_eigen();
                (0..self.dim)
                    .filter(|&i| eig.eigenvalues[i].abs() < 1e-14)
                    .map(|i| eig.eigenvectors.column(i).into_owned())
                    .collect()
            }
            ConvexKind::AffineShift { base, .. } => base.flat_directions(),
            _ => Vec::new(),
        }
    }

    /// Excess function `ũ(x) = u(x0 + x) - u(x0) - x·∇u(x0)` at `x0`.
    ///
    /// Affine shifts cancel inside the excess exactly and are unwrapped here,
    /// which keeps the evaluation free of their cancellation error.
    pub fn excess_at(&self, x0: &[f64]) -> Result<ExcessFunction> {
        if x0.len() != self.dim {
            return Err(Error::domain("x0 dimension mismatch"));
        }
        let mut base = self;
        while let ConvexKind::AffineShift { base: inner, .. } = &base.kind {
            base = inner;
        }
        let p = base.gradient(x0);
        let u0 = base.eval(x0);
        Ok(ExcessFunction {
            source: ExcessSource::Pointed {
                base: base.clone(),
                x0: x0.to_vec(),
                p,
                u0,
            },
        })
    }
}

/// Cancellation-free excess of `√(1 + vᵀAv)` at `x0`:
/// with `w = x·Ax0`, `m = xᵀAx`, `S0 = √(1+x0ᵀAx0)`, `S = √(S0² + 2w + m)`,
///
/// `ũ(x) = (m·S0 - w(2w+m)/(S0+S)) / (S0 (S0+S))`,
///
/// every factor of which is `O(|x|²)` without subtracting near-equal numbers.
fn cone_excess_stable(a: &DMatrix<f64>, x0: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut w = 0.0;
    let mut m = 0.0;
    let mut q0 = 1.0;
    for i in 0..n {
        let mut ax_i = 0.0;
        let mut ax0_i = 0.0;
        for j in 0..n {
            ax_i += a[(i, j)] * x[j];
            ax0_i += a[(i, j)] * x0[j];
        }
        w += x[i] * ax0_i;
        m += x[i] * ax_i;
        q0 += x0[i] * ax0_i;
    }
    let s0 = q0.sqrt();
    let s = (q0 + 2.0 * w + m).sqrt();
    (m * s0 - w * (2.0 * w + m) / (s0 + s)) / (s0 * (s0 + s))
}

/// Per-coordinate Huber excess `huber(a+h) - huber(a) - h·huber'(a)`, exact in
/// the pure-quadratic and pure-linear regimes.
fn huber_excess(m: f64, a: f64, h: f64) -> f64 {
    let b = a + h;
    if a.abs() <= m && b.abs() <= m {
        return 0.5 * h * h;
    }
    if (a >= m && b >= m) || (a <= -m && b <= -m) {
        return 0.0;
    }
    // regime transition: h is at least the distance to the crossover, so the
    // direct difference is well conditioned
    huber(m, b) - huber(m, a) - h * huber_prime(m, a)
}

/// Named closed-form excess functions used by classification tests; these are
/// not excesses of library convex functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticExcess {
    /// `ũ(y,z) = |z|²`: flat in y, every nonempty slice has infinite measure.
    RidgeSquare,
    /// `ũ(y,z) = (1 - e^{-|y|²}) + |z|²`: slice measures finite exactly below
    /// the plateau height, so the finiteness threshold is `λ0 = 1`.
    PlateauPlusSquare,
    /// `ũ(y,z) = |z|² - (1 - e^{-|y|²})`: negative on the k-plane away from 0.
    SaddlePlateau,
}

#[derive(Debug, Clone)]
pub enum ExcessSource {
    Pointed {
        base: ConvexFunction,
        x0: Vec<f64>,
        p: Vec<f64>,
        u0: f64,
    },
    Analytic {
        form: AnalyticExcess,
        dim: usize,
        k: usize,
    },
}

/// The convexity deficit `ũ(x) = u(x0+x) - u(x0) - x·∇u(x0)`; `ũ(0) = 0` and
/// `ũ ≥ 0` exactly when (P2) holds at `x0`.
#[derive(Debug, Clone)]
pub struct ExcessFunction {
    pub source: ExcessSource,
}

impl ExcessFunction {
    pub fn analytic(form: AnalyticExcess, dim: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= dim {
            return Err(Error::domain("analytic excess requires 1 ≤ k < dim"));
        }
        Ok(ExcessFunction {
            source: ExcessSource::Analytic { form, dim, k },
        })
    }

    pub fn dim(&self) -> usize {
        match &self.source {
            ExcessSource::Pointed { base, .. } => base.dim(),
            ExcessSource::Analytic { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.source {
            ExcessSource::Pointed { base, x0, p, u0 } => match &base.kind {
                // closed forms that avoid the catastrophic cancellation of
                // u(x0+x) - u(x0) - x·∇u(x0) at small |x|
                ConvexKind::SmoothedCone { a } => cone_excess_stable(a, x0, x),
                ConvexKind::NegatedSmoothedCone => {
                    let eye = DMatrix::identity(base.dim, base.dim);
                    -cone_excess_stable(&eye, x0, x)
                }
                ConvexKind::LocalizedQuadratic { q, d, crossover, .. } => {
                    let n = base.dim;
                    let mut total = 0.0;
                    for i in 0..n {
                        let mut w0 = 0.0;
                        let mut h = 0.0;
                        for j in 0..n {
                            w0 += q[(j, i)] * x0[j];
                            h += q[(j, i)] * x[j];
                        }
                        total += d[i] * huber_excess(*crossover, w0, h);
                    }
                    total
                }
                // a quadratic's excess is its own quadratic form
                ConvexKind::PureQuadratic { h } => {
                    let n = base.dim;
                    let mut m = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            m += h[(i, j)] * x[i] * x[j];
                        }
                    }
                    0.5 * m
                }
                ConvexKind::Ridge { axes, profile: RidgeProfile::Square } => {
                    axes.iter().map(|&i| x[i] * x[i]).sum()
                }
                _ => {
                    let shifted: Vec<f64> = x0.iter().zip(x).map(|(a, b)| a + b).collect();
                    base.eval(&shifted) - u0
                        - p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                }
            },
            ExcessSource::Analytic { form, dim, k } => {
                let y2: f64 = x[..*k].iter().map(|v| v * v).sum();
                let z2: f64 = x[*k..*dim].iter().map(|v| v * v).sum();
                let plateau = -(-y2).exp_m1(); // 1 - e^{-|y|²} without cancellation
                match form {
                    AnalyticExcess::RidgeSquare => z2,
                    AnalyticExcess::PlateauPlusSquare => plateau + z2,
                    AnalyticExcess::SaddlePlateau => z2 - plateau,
                }
            }
        }
    }

    pub fn growth_exponent(&self) -> f64 {
        match &self.source {
            ExcessSource::Pointed { base, .. } => base.growth_exponent().max(1.0),
            ExcessSource::Analytic { .. } => 2.0,
        }
    }

    /// `C^{1,1}` seminorm bound inherited from the base function.
    pub fn c11_bound(&self) -> Option<f64> {
        match &self.source {
            ExcessSource::Pointed { base, .. } => base.c11_bound(),
            ExcessSource::Analytic { .. } => Some(2.0),
        }
    }
}

/// Result of the (P1) growth check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Certificate {
    pub growth_exponent: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// (P1) holds when the declared growth exponent is below `2s`; certificates
/// are metadata, never inferred from samples.
pub fn check_p1(u: &ConvexFunction, s: f64) -> P1Certificate {
    let g = u.growth_exponent();
    P1Certificate {
        growth_exponent: g,
        threshold: 2.0 * s,
        holds: g < 2.0 * s,
    }
}

pub fn check_p1_excess(e: &ExcessFunction, s: f64) -> P1Certificate {
    let g = match &e.source {
        ExcessSource::Pointed { base, .. } => base.growth_exponent(),
        ExcessSource::Analytic { .. } => 2.0,
    };
    P1Certificate {
        growth_exponent: g,
        threshold: 2.0 * s,
        holds: g < 2.0 * s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlaneConvexity {
    Convex,
    NegativeWitness(Vec<f64>),
}

/// Samples `ũ(y, 0)` over the k-plane; a negative value there certifies
/// `F_k^s u(x0) = -∞`. Absence of a witness is a sampled certificate only.
pub fn check_p2_on_plane(
    excess: &ExcessFunction,
    k: usize,
    spec: &QuadratureSpec,
) -> PlaneConvexity {
    let dim = excess.dim();
    let tol = -1e-12;
    let radii: Vec<f64> = (0..24)
        .map(|i| 1e-3 * (spec.x_truncation / 1e-3).powf(i as f64 / 23.0))
        .collect();
    let probe = |y: &[f64]| -> Option<Vec<f64>> {
        let mut x = vec![0.0; dim];
        x[..k].copy_from_slice(y);
        if excess.eval(&x) < tol {
            Some(y.to_vec())
        } else {
            None
        }
    };
    match k {
        1 => {
            for &r in &radii {
                for sgn in [-1.0, 1.0] {
                    if let Some(w) = probe(&[sgn * r]) {
                        return PlaneConvexity::NegativeWitness(w);
                    }
                }
            }
        }
        2 => {
            let nth = 32;
            for &r in &radii {
                for j in 0..nth {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / nth as f64;
                    if let Some(w) = probe(&[r * th.cos(), r * th.sin()]) {
                        return PlaneConvexity::NegativeWitness(w);
                    }
                }
            }
        }
        _ => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
            for _ in 0..10_000 {
                let y: Vec<f64> = (0..k)
                    .map(|_| rng.gen_range(-spec.x_truncation..spec.x_truncation))
                    .collect();
                if let Some(w) = probe(&y) {
                    return PlaneConvexity::NegativeWitness(w);
                }
            }
        }
    }
    PlaneConvexity::Convex
}

/// Diameter of the section `D_{x0}u(eps) = {ũ ≤ eps}`; `None` means unbounded.
pub fn section_diameter(u: &ConvexFunction, x0: &[f64], eps: f64) -> Result<Option<f64>> {
    if eps <= 0.0 {
        return Err(Error::domain("section_diameter requires eps > 0"));
    }
    if !u.flat_directions().is_empty() {
        return Ok(None);
    }
    let excess = u.excess_at(x0)?;

    // exact ellipsoid geometry for the smoothed cone
    if let ConvexKind::SmoothedCone { a } = &u.kind {
        let x0v = DVector::from_column_slice(x0);
        let q0 = 1.0 + (&x0v.transpose() * a * &x0v)[(0, 0)];
        let beta = q0.sqrt();
        let w = a * &x0v / beta;
        let m = a - &w * w.transpose();
        let r2 = eps * eps
            + 2.0 * eps * beta
            + eps * eps * (&w.transpose() * m.clone().try_inverse().unwrap() * &w)[(0, 0)];
        let lmin = m.symmetric_eigen().eigenvalues.min();
        return Ok(Some(2.0 * (r2 / lmin).sqrt()));
    }

    // outer estimate: longest chord through the origin over a direction fan
    let dim = u.dim();
    let dirs: Vec<Vec<f64>> = if dim == 1 {
        vec![vec![1.0]]
    } else if dim == 2 {
        (0..128)
            .map(|j| {
                let th = std::f64::consts::PI * j as f64 / 128.0;
                vec![th.cos(), th.sin()]
            })
            .collect()
    } else {
        return Err(Error::Unsupported("section_diameter fan only for n ≤ 2".into()));
    };
    let mut best: f64 = 0.0;
    for d in &dirs {
        let mut chord = 0.0;
        for sgn in [1.0, -1.0] {
            let ray = |r: f64| {
                let x: Vec<f64> = d.iter().map(|di| sgn * r * di).collect();
                excess.eval(&x)
            };
            // expand until the section is escaped
            let mut hi = 1.0;
            let mut bounded = false;
            for _ in 0..80 {
                if ray(hi) > eps {
                    bounded = true;
                    break;
                }
                hi *= 2.0;
            }
            if !bounded {
                return Ok(None);
            }
            let mut lo = 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if ray(mid) <= eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            chord += lo;
        }
        best = best.max(chord);
    }
    Ok(Some(best))
}

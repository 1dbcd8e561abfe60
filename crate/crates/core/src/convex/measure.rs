//! Sublevel-slice measures `μ(t, z) = ω_k^{-1} H^k({y : ũ(y,z) ≤ t})`.
//!
//! Closed forms cover the smoothed cone (ellipsoid slices at any base point),
//! separable Huberized quadratics, plateau excesses, and ridge kinds; a
//! bisection engine on convex slices covers the rest. A Monte Carlo route is
//! available for cross-checking. Infinite measures are certified analytically
//! from the descriptor (never inferred from samples), so Case 2/3
//! classification is exact.

use nalgebra::{DMatrix, DVector};

use super::{huber, huber_inv, AnalyticExcess, ConvexKind, ExcessFunction, ExcessSource};
use crate::error::{Error, Result};
use crate::numerics::mc::mc_region_measure;
use crate::numerics::quad::{quad_1d, BoxDomain, QuadOptions};
use crate::numerics::special::unit_ball_measure;
use crate::numerics::ExtendedMeasure;

/// Analytic certificate about which slice measures are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Finiteness {
    /// Every slice measure is finite (Case 1 hypothesis).
    AllFinite,
    /// Measures are finite for every z exactly when `t < lambda0` (Case 2).
    Threshold { lambda0: f64 },
    /// The excess is flat along a direction inside the k-plane, so every
    /// nonempty slice has infinite measure (Case 3 by convention).
    FlatInPlane,
    /// No certificate; classification falls back to sampling.
    Unknown,
}

#[derive(Debug, Clone)]
pub enum MeasureRoute {
    ClosedForm,
    MonteCarlo { window: f64, samples: u64, seed: u64 },
}

#[derive(Debug, Clone)]
enum SliceForm {
    /// Smoothed cone: slices of the ellipsoid `{xᵀMx - 2t wᵀx ≤ t² + 2tβ}`.
    ConeEllipsoid {
        myy: DMatrix<f64>,
        myy_inv: DMatrix<f64>,
        det_myy: f64,
        myz: DMatrix<f64>,
        mzz: DMatrix<f64>,
        wy: DVector<f64>,
        wz: DVector<f64>,
        beta: f64,
    },
    /// Diagonal Huberized quadratic at x0 = 0.
    HuberSeparable { dy: Vec<f64>, dz: Vec<f64>, m: f64 },
    /// Flat in every y direction: the slice is ∅ or all of R^k.
    FlatInY,
    /// `(1 - e^{-|y|²}) + |z|²`: ball slices below the plateau.
    Plateau,
    /// Root-bracketing on convex slices.
    Generic,
}

/// Evaluator for `μ_x u(t, z)` with a route tag and a finiteness certificate.
#[derive(Debug, Clone)]
pub struct SublevelProfile {
    excess: ExcessFunction,
    k: usize,
    route: MeasureRoute,
    form: SliceForm,
    finiteness: Finiteness,
    /// Monte Carlo route only: the last window-truncation state is reported
    /// through `measure_detailed`.
    _reserved: (),
}

/// Measure together with sampling metadata (zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSample {
    pub value: ExtendedMeasure,
    pub std_err: f64,
    /// Monte Carlo window may have clipped the slice.
    pub truncated: bool,
}

fn flat_in_plane(base_flat: &[DVector<f64>], k: usize) -> bool {
    // a flat direction lying inside the k-plane makes slices flat
    for v in base_flat {
        let znorm: f64 = v.iter().skip(k).map(|c| c * c).sum::<f64>().sqrt();
        let ynorm: f64 = v.iter().take(k).map(|c| c * c).sum::<f64>().sqrt();
        if znorm < 1e-12 && ynorm > 1e-12 {
            return true;
        }
    }
    false
}

impl SublevelProfile {
    /// Builds the exact (closed-form or bisection) route.
    pub fn new_exact(excess: ExcessFunction, k: usize) -> Result<Self> {
        let dim = excess.dim();
        if k == 0 || k > dim {
            return Err(Error::domain("profile requires 1 ≤ k ≤ dim"));
        }
        let (form, finiteness) = Self::analyze(&excess, k)?;
        Ok(SublevelProfile {
            excess,
            k,
            route: MeasureRoute::ClosedForm,
            form,
            finiteness,
            _reserved: (),
        })
    }

    /// Monte Carlo route over the window `[-window, window]^k`.
    pub fn new_monte_carlo(
        excess: ExcessFunction,
        k: usize,
        window: f64,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let dim = excess.dim();
        if k == 0 || k > dim {
            return Err(Error::domain("profile requires 1 ≤ k ≤ dim"));
        }
        if window <= 0.0 {
            return Err(Error::domain("window must be positive"));
        }
        let (_, finiteness) = Self::analyze(&excess, k)?;
        Ok(SublevelProfile {
            excess,
            k,
            route: MeasureRoute::MonteCarlo { window, samples, seed },
            form: SliceForm::Generic,
            finiteness,
            _reserved: (),
        })
    }

    fn analyze(excess: &ExcessFunction, k: usize) -> Result<(SliceForm, Finiteness)> {
        match &excess.source {
            ExcessSource::Analytic { form, .. } => match form {
                AnalyticExcess::RidgeSquare => Ok((SliceForm::FlatInY, Finiteness::FlatInPlane)),
                AnalyticExcess::PlateauPlusSquare => {
                    Ok((SliceForm::Plateau, Finiteness::Threshold { lambda0: 1.0 }))
                }
                AnalyticExcess::SaddlePlateau => Ok((SliceForm::Generic, Finiteness::Unknown)),
            },
            ExcessSource::Pointed { base, x0, .. } => {
                // the affine part of a shift cancels inside the excess
                let mut kind = base.kind();
                while let ConvexKind::AffineShift { base: inner, .. } = kind {
                    kind = inner.kind();
                }
                let flats = base.flat_directions();
                match kind {
                    ConvexKind::SmoothedCone { a } => {
                        let x0v = DVector::from_column_slice(x0);
                        let q0 = 1.0 + (&x0v.transpose() * a * &x0v)[(0, 0)];
                        let beta = q0.sqrt();
                        let w = a * &x0v / beta;
                        let m = a - &w * w.transpose();
                        let dim = base.dim();
                        let myy = m.view((0, 0), (k, k)).into_owned();
                        let myz = m.view((0, k), (k, dim - k)).into_owned();
                        let mzz = m.view((k, k), (dim - k, dim - k)).into_owned();
                        let myy_inv = myy.clone().try_inverse().ok_or_else(|| {
                            Error::domain("degenerate cone slice block")
                        })?;
                        let det_myy = myy.determinant();
                        Ok((
                            SliceForm::ConeEllipsoid {
                                myy,
                                myy_inv,
                                det_myy,
                                myz,
                                mzz,
                                wy: w.rows(0, k).into_owned(),
                                wz: w.rows(k, dim - k).into_owned(),
                                beta,
                            },
                            Finiteness::AllFinite,
                        ))
                    }
                    ConvexKind::LocalizedQuadratic { h, crossover, .. } => {
                        if flat_in_plane(&flats, k) {
                            return Ok((SliceForm::FlatInY, Finiteness::FlatInPlane));
                        }
                        let dim = base.dim();
                        let diagonal = (0..dim).all(|i| {
                            (0..dim).all(|j| i == j || h[(i, j)].abs() < 1e-14)
                        });
                        let centered = x0.iter().all(|c| c.abs() < 1e-14);
                        if diagonal && centered && (k == 1 || k == dim) {
                            let dy: Vec<f64> = (0..k).map(|i| h[(i, i)]).collect();
                            let dz: Vec<f64> = (k..dim).map(|i| h[(i, i)]).collect();
                            if dy.iter().all(|&d| d > 0.0) {
                                return Ok((
                                    SliceForm::HuberSeparable { dy, dz, m: *crossover },
                                    Finiteness::AllFinite,
                                ));
                            }
                        }
                        Ok((SliceForm::Generic, Finiteness::AllFinite))
                    }
                    ConvexKind::Ridge { .. } | ConvexKind::PureQuadratic { .. } => {
                        if flat_in_plane(&flats, k) {
                            Ok((SliceForm::FlatInY, Finiteness::FlatInPlane))
                        } else {
                            Ok((SliceForm::Generic, Finiteness::AllFinite))
                        }
                    }
                    ConvexKind::NegatedSmoothedCone => {
                        Ok((SliceForm::Generic, Finiteness::Unknown))
                    }
                    ConvexKind::AffineShift { .. } => unreachable!("shifts unwrapped above"),
                }
            }
        }
    }

    pub fn excess(&self) -> &ExcessFunction {
        &self.excess
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codim(&self) -> usize {
        self.excess.dim() - self.k
    }

    pub fn finiteness(&self) -> Finiteness {
        self.finiteness
    }

    pub fn route(&self) -> &MeasureRoute {
        &self.route
    }

    /// `μ(t, z)`; `z.len()` must equal `dim - k`.
    pub fn measure(&self, t: f64, z: &[f64]) -> Result<ExtendedMeasure> {
        Ok(self.measure_detailed(t, z)?.value)
    }

    pub fn measure_detailed(&self, t: f64, z: &[f64]) -> Result<MeasureSample> {
        if z.len() != self.codim() {
            return Err(Error::domain("z dimension mismatch"));
        }
        if let MeasureRoute::MonteCarlo { window, samples, seed } = &self.route {
            return self.measure_monte_carlo(t, z, *window, *samples, *seed);
        }
        let value = self.measure_exact(t, z)?;
        Ok(MeasureSample { value, std_err: 0.0, truncated: false })
    }

    fn measure_exact(&self, t: f64, z: &[f64]) -> Result<ExtendedMeasure> {
        if t < 0.0 {
            return Ok(ExtendedMeasure::Finite(0.0));
        }
        let k = self.k;
        match &self.form {
            SliceForm::ConeEllipsoid {
                myy_inv,
                det_myy,
                myz,
                mzz,
                wy,
                wz,
                beta,
                ..
            } => {
                let zv = DVector::from_column_slice(z);
                let b = if z.is_empty() {
                    -wy.clone() * t
                } else {
                    myz * &zv - wy * t
                };
                let c = if z.is_empty() {
                    -t * t - 2.0 * t * beta
                } else {
                    (&zv.transpose() * mzz * &zv)[(0, 0)]
                        - 2.0 * t * wz.dot(&zv)
                        - t * t
                        - 2.0 * t * beta
                };
                let r2 = (&b.transpose() * myy_inv * &b)[(0, 0)] - c;
                if r2 <= 0.0 {
                    Ok(ExtendedMeasure::Finite(0.0))
                } else {
                    Ok(ExtendedMeasure::Finite(r2.powf(k as f64 / 2.0) / det_myy.sqrt()))
                }
            }
            SliceForm::HuberSeparable { dy, dz, m } => {
                let mut tau = t;
                for (d, zi) in dz.iter().zip(z) {
                    tau -= d * huber(*m, *zi);
                }
                if tau < 0.0 {
                    return Ok(ExtendedMeasure::Finite(0.0));
                }
                if k == 1 {
                    Ok(ExtendedMeasure::Finite(huber_inv(*m, tau / dy[0])))
                } else if k == 2 && dz.is_empty() {
                    // area of {d0·huber(y0) + d1·huber(y1) ≤ τ} by 1-D reduction
                    let (d0, d1, m) = (dy[0], dy[1], *m);
                    let y0max = huber_inv(m, tau / d0);
                    if y0max == 0.0 {
                        return Ok(ExtendedMeasure::Finite(0.0));
                    }
                    let opt = QuadOptions::with_tols(1e-12, 1e-10);
                    let area4 = quad_1d(
                        |y0: f64| huber_inv(m, (tau - d0 * huber(m, y0)) / d1),
                        0.0,
                        y0max,
                        &opt,
                    )?
                    .value;
                    Ok(ExtendedMeasure::Finite(
                        4.0 * area4 / unit_ball_measure(2)?,
                    ))
                } else {
                    self.measure_generic(t, z)
                }
            }
            SliceForm::FlatInY => {
                let mut x = vec![0.0; self.excess.dim()];
                x[k..].copy_from_slice(z);
                if self.excess.eval(&x) <= t {
                    Ok(ExtendedMeasure::Infinite)
                } else {
                    Ok(ExtendedMeasure::Finite(0.0))
                }
            }
            SliceForm::Plateau => {
                let z2: f64 = z.iter().map(|v| v * v).sum();
                let tau = t - z2;
                if tau <= 0.0 {
                    Ok(ExtendedMeasure::Finite(0.0))
                } else if tau >= 1.0 {
                    Ok(ExtendedMeasure::Infinite)
                } else {
                    Ok(ExtendedMeasure::Finite((-(1.0 - tau).ln()).powf(k as f64 / 2.0)))
                }
            }
            SliceForm::Generic => self.measure_generic(t, z),
        }
    }

    /// Convex-slice fallback: interval endpoints by bisection for k = 1 and a
    /// polar ray sweep for full-dimensional slices.
    fn measure_generic(&self, t: f64, z: &[f64]) -> Result<ExtendedMeasure> {
        let k = self.k;
        let dim = self.excess.dim();
        let slice = |y: &[f64]| {
            let mut x = vec![0.0; dim];
            x[..k].copy_from_slice(y);
            x[k..].copy_from_slice(z);
            self.excess.eval(&x)
        };
        const CAP: f64 = 1e18;
        match k {
            1 => {
                let g = |y: f64| slice(&[y]);
                let (ymin, gmin) = convex_min_1d(&g);
                if gmin > t {
                    return Ok(ExtendedMeasure::Finite(0.0));
                }
                let mut ends = [0.0f64; 2];
                for (slot, sgn) in ends.iter_mut().zip([1.0, -1.0]) {
                    let mut step = 1.0;
                    let mut hi = ymin + sgn * step;
                    let mut escaped = false;
                    while step < CAP {
                        if g(hi) > t {
                            escaped = true;
                            break;
                        }
                        step *= 2.0;
                        hi = ymin + sgn * step;
                    }
                    if !escaped {
                        return Ok(ExtendedMeasure::Infinite);
                    }
                    let mut lo = ymin;
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if g(mid) <= t {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    *slot = lo;
                }
                Ok(ExtendedMeasure::Finite((ends[0] - ends[1]).abs() / 2.0))
            }
            2 if k == dim => {
                // polar area sweep around the origin (contained for t ≥ 0)
                let nth = 512;
                let mut acc = 0.0;
                for j in 0..nth {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / nth as f64;
                    let dir = [th.cos(), th.sin()];
                    let ray = |r: f64| slice(&[r * dir[0], r * dir[1]]);
                    let mut hi = 1.0;
                    let mut escaped = false;
                    while hi < CAP {
                        if ray(hi) > t {
                            escaped = true;
                            break;
                        }
                        hi *= 2.0;
                    }
                    if !escaped {
                        return Ok(ExtendedMeasure::Infinite);
                    }
                    let mut lo = 0.0;
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if ray(mid) <= t {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    acc += 0.5 * lo * lo;
                }
                let area = acc * 2.0 * std::f64::consts::PI / nth as f64;
                Ok(ExtendedMeasure::Finite(area / unit_ball_measure(2)?))
            }
            _ => Err(Error::Unsupported(format!(
                "generic slice measure for k={k}, dim={dim}"
            ))),
        }
    }

    fn measure_monte_carlo(
        &self,
        t: f64,
        z: &[f64],
        window: f64,
        samples: u64,
        seed: u64,
    ) -> Result<MeasureSample> {
        let k = self.k;
        let dim = self.excess.dim();
        // flat certificates stay analytic even on the Monte Carlo route
        if matches!(self.finiteness, Finiteness::FlatInPlane) {
            let mut x = vec![0.0; dim];
            x[k..].copy_from_slice(z);
            let value = if self.excess.eval(&x) <= t {
                ExtendedMeasure::Infinite
            } else {
                ExtendedMeasure::Finite(0.0)
            };
            return Ok(MeasureSample { value, std_err: 0.0, truncated: false });
        }
        let omega_k = unit_ball_measure(k)?;
        let domain = BoxDomain::new(vec![-window; k], vec![window; k])?;
        let est = mc_region_measure(
            |y: &[f64]| {
                let mut x = vec![0.0; dim];
                x[..k].copy_from_slice(y);
                x[k..].copy_from_slice(z);
                self.excess.eval(&x) <= t
            },
            &domain,
            samples,
            seed,
        )?;
        // window certification: the slice must not reach the boundary
        let mut truncated = false;
        let probes: Vec<Vec<f64>> = match k {
            1 => vec![vec![window], vec![-window]],
            _ => (0..16)
                .map(|j| {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
                    let mut y = vec![0.0; k];
                    y[0] = window * th.cos();
                    y[1] = window * th.sin();
                    y
                })
                .collect(),
        };
        for y in probes {
            let mut x = vec![0.0; dim];
            x[..k].copy_from_slice(&y);
            x[k..].copy_from_slice(z);
            if self.excess.eval(&x) <= t {
                truncated = true;
                break;
            }
        }
        Ok(MeasureSample {
            value: ExtendedMeasure::Finite(est.value / omega_k),
            std_err: est.std_err / omega_k,
            truncated,
        })
    }

    /// For codimension 1: the z-interval outside which `μ(t, ·) = 0`.
    pub fn z_interval(&self, t: f64) -> Result<(f64, f64)> {
        if self.codim() != 1 {
            return Err(Error::Unsupported("z_interval requires codimension 1".into()));
        }
        let positive = |z: f64| -> Result<bool> {
            Ok(match self.measure(t, &[z])? {
                ExtendedMeasure::Infinite => true,
                ExtendedMeasure::Finite(v) => v > 0.0,
            })
        };
        let mut out = [0.0f64; 2];
        for (slot, sgn) in out.iter_mut().zip([1.0f64, -1.0]) {
            let mut step = 1.0;
            let mut escaped = false;
            while step < 1e12 {
                if !positive(sgn * step)? {
                    escaped = true;
                    break;
                }
                step *= 2.0;
            }
            if !escaped {
                return Err(Error::domain("slice support unbounded in z"));
            }
            let mut lo = 0.0;
            let mut hi = step;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if positive(sgn * mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            *slot = sgn * hi;
        }
        Ok((out[1], out[0]))
    }
}

/// Golden-section minimum of a 1-D convex function with bracket growth.
pub(crate) fn convex_min_1d(g: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let mut a = -1.0;
    let mut b = 0.0;
    let mut fa = g(a);
    let mut fb = g(b);
    let mut c = 1.0;
    let mut fc = g(c);
    // slide the bracket downhill until the middle point is lowest
    let mut width = 1.0;
    for _ in 0..90 {
        if fb <= fa && fb <= fc {
            break;
        }
        width *= 2.0;
        if fa < fb {
            c = b;
            fc = fb;
            b = a;
            fb = fa;
            a = b - width;
            fa = g(a);
        } else {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            c = b + width;
            fc = g(c);
        }
    }
    let phi = 0.5 * (3.0 - 5.0_f64.sqrt());
    let mut lo = a;
    let mut hi = c;
    let mut x1 = lo + phi * (hi - lo);
    let mut x2 = hi - phi * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..120 {
        if (hi - lo).abs() < 1e-13 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + phi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - phi * (hi - lo);
            f2 = g(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, g(xm))
}

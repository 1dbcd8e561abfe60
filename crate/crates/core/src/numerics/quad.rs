//! Adaptive Gauss–Kronrod quadrature over intervals and boxes, with declared
//! endpoint singularities and power-law tails on `[a, ∞)`.
//!
//! Integrable endpoint singularities of declared exponent `α < 1` are removed
//! by the power substitution `x = a + (b-a) u^{1/(1-α)}`; semi-infinite tails
//! of declared decay `f ~ r^{-q}`, `q > 1`, by `r = a/u`. Both reduce to the
//! same bounded-interval adaptive core.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// 7-point Gauss / 15-point Kronrod abscissae (positive half) and weights.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 4096,
        }
    }
}

impl QuadOptions {
    pub fn with_tols(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult { value: 0.0, err: 0.0 };

    pub fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            err: self.err + other.err,
        }
    }
}

/// One Gauss–Kronrod pass on `[a, b]`: returns (kronrod, error, resabs).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    // resasc-based rescale as in QUADPACK's qk rules
    let mean = kronrod * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();

    let mut err = (kronrod - gauss).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0_f64.min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (kronrod, err, resabs)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive integration of a bounded integrand on `[a, b]`.
pub fn quad_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opt: &QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult::ZERO);
    }
    let (v, e, _) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total_value = v;
    let mut total_err = e;

    while total_err > opt.abs_tol.max(opt.rel_tol * total_value.abs()) {
        if heap.len() >= opt.max_intervals {
            return Err(Error::BudgetExceeded { best: total_value, err: total_err });
        }
        let worst = heap.pop().expect("heap nonempty while error positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution; accept its estimate
            total_err -= worst.err;
            heap.push(Segment { err: 0.0, ..worst });
            continue;
        }
        let (v1, e1, _) = gk15(&f, worst.a, mid);
        let (v2, e2, _) = gk15(&f, mid, worst.b);
        total_value += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }
    Ok(QuadResult { value: total_value, err: total_err })
}

/// Adaptive integration with declared integrable endpoint singularities.
///
/// `left`/`right` give the exponent `α ∈ [0, 1)` such that the integrand
/// behaves like `|x - endpoint|^{-α}` there.
pub fn quad_1d_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    left: Option<f64>,
    right: Option<f64>,
    opt: &QuadOptions,
) -> Result<QuadResult> {
    quad_1d_singular_dyn(&f, a, b, left, right, opt)
}

fn quad_1d_singular_dyn(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    left: Option<f64>,
    right: Option<f64>,
    opt: &QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult::ZERO);
    }
    for alpha in [left, right].into_iter().flatten() {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::domain(format!(
                "endpoint singularity exponent must lie in [0,1), got {alpha}"
            )));
        }
    }
    match (left, right) {
        (None, None) => quad_1d(f, a, b, opt),
        (Some(alpha), None) => {
            let p = 1.0 / (1.0 - alpha);
            let len = b - a;
            quad_1d(
                |u: f64| f(a + len * u.powf(p)) * len * p * u.powf(p - 1.0),
                0.0,
                1.0,
                opt,
            )
        }
        (None, Some(alpha)) => {
            let p = 1.0 / (1.0 - alpha);
            let len = b - a;
            quad_1d(
                |u: f64| f(b - len * u.powf(p)) * len * p * u.powf(p - 1.0),
                0.0,
                1.0,
                opt,
            )
        }
        (Some(_), Some(_)) => {
            let mid = 0.5 * (a + b);
            let half = QuadOptions { abs_tol: opt.abs_tol * 0.5, ..*opt };
            let l = quad_1d_singular_dyn(f, a, mid, left, None, &half)?;
            let r = quad_1d_singular_dyn(f, mid, b, None, right, &half)?;
            Ok(l.combine(r))
        }
    }
}

/// Tail `∫_from^∞ f(r) dr` for integrands with certified decay `f ~ r^{-q}`,
/// `q > 1`, via the substitution `r = from / u`.
pub fn quad_tail<F: Fn(f64) -> f64>(
    f: F,
    from: f64,
    decay_q: f64,
    opt: &QuadOptions,
) -> Result<QuadResult> {
    if from <= 0.0 {
        return Err(Error::domain("tail integration requires from > 0"));
    }
    if decay_q <= 1.0 {
        return Err(Error::Divergent(format!(
            "tail decay exponent {decay_q} ≤ 1: integral diverges"
        )));
    }
    let g = |u: f64| {
        let r = from / u;
        f(r) * from / (u * u)
    };
    let alpha = (2.0 - decay_q).max(0.0);
    if alpha > 0.0 {
        quad_1d_singular(g, 0.0, 1.0, Some(alpha.min(0.999)), None, opt)
    } else {
        quad_1d(g, 0.0, 1.0, opt)
    }
}

/// `∫_0^∞`: singular-aware piece on `[0, split]` plus a certified tail.
pub fn quad_0_inf<F: Fn(f64) -> f64>(
    f: F,
    split: f64,
    left_exponent: Option<f64>,
    tail_decay_q: f64,
    opt: &QuadOptions,
) -> Result<QuadResult> {
    let head = quad_1d_singular(&f, 0.0, split, left_exponent, None, opt)?;
    let tail = quad_tail(&f, split, tail_decay_q, opt)?;
    Ok(head.combine(tail))
}

/// An axis-aligned box in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::domain("box bounds must have equal, nonzero dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::domain("box must have positive extent in every axis"));
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

struct Rect {
    lo: [f64; 2],
    hi: [f64; 2],
    value: f64,
    err: f64,
}

impl PartialEq for Rect {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Rect {}
impl PartialOrd for Rect {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Rect {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Tensor Gauss–Kronrod on a rectangle: (kronrod⊗kronrod, error estimate).
fn gk15_2d<F: Fn(f64, f64) -> f64>(f: &F, lo: [f64; 2], hi: [f64; 2]) -> (f64, f64) {
    let cx = 0.5 * (lo[0] + hi[0]);
    let hx = 0.5 * (hi[0] - lo[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    let hy = 0.5 * (hi[1] - lo[1]);

    // nodes and both weight sets along one axis
    let mut xs = [0.0f64; 15];
    let mut wk = [0.0f64; 15];
    let mut wg = [0.0f64; 15];
    for j in 0..7 {
        xs[j] = -XGK[j];
        xs[14 - j] = XGK[j];
        wk[j] = WGK[j];
        wk[14 - j] = WGK[j];
        if j % 2 == 1 {
            wg[j] = WG[j / 2];
            wg[14 - j] = WG[j / 2];
        }
    }
    xs[7] = 0.0;
    wk[7] = WGK[7];
    wg[7] = WG[3];

    let mut kk = 0.0;
    let mut gg = 0.0;
    for (i, &xi) in xs.iter().enumerate() {
        let x = cx + hx * xi;
        for (j, &yj) in xs.iter().enumerate() {
            let v = f(x, cy + hy * yj);
            kk += wk[i] * wk[j] * v;
            gg += wg[i] * wg[j] * v;
        }
    }
    let scale = hx * hy;
    let kk = kk * scale;
    let gg = gg * scale;
    let err = (kk - gg).abs().max(50.0 * f64::EPSILON * kk.abs());
    (kk, err)
}

/// Adaptive integration over a 2-D box (largest-error rectangle first, split
/// along its longer side).
pub fn quad_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    domain: &BoxDomain,
    opt: &QuadOptions,
) -> Result<QuadResult> {
    if domain.dim() != 2 {
        return Err(Error::domain("quad_2d requires a 2-D box"));
    }
    let lo = [domain.lo[0], domain.lo[1]];
    let hi = [domain.hi[0], domain.hi[1]];
    let (v, e) = gk15_2d(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Rect { lo, hi, value: v, err: e });
    let mut total_value = v;
    let mut total_err = e;

    while total_err > opt.abs_tol.max(opt.rel_tol * total_value.abs()) {
        if heap.len() >= opt.max_intervals {
            return Err(Error::BudgetExceeded { best: total_value, err: total_err });
        }
        let worst = heap.pop().expect("rect heap nonempty");
        let axis = if worst.hi[0] - worst.lo[0] >= worst.hi[1] - worst.lo[1] { 0 } else { 1 };
        let mid = 0.5 * (worst.lo[axis] + worst.hi[axis]);
        if mid <= worst.lo[axis] || mid >= worst.hi[axis] {
            heap.push(Rect { err: 0.0, ..worst });
            total_err -= worst.err;
            continue;
        }
        let mut hi1 = worst.hi;
        hi1[axis] = mid;
        let mut lo2 = worst.lo;
        lo2[axis] = mid;
        let (v1, e1) = gk15_2d(&f, worst.lo, hi1);
        let (v2, e2) = gk15_2d(&f, lo2, worst.hi);
        total_value += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Rect { lo: worst.lo, hi: hi1, value: v1, err: e1 });
        heap.push(Rect { lo: lo2, hi: worst.hi, value: v2, err: e2 });
    }
    Ok(QuadResult { value: total_value, err: total_err })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const OPT: QuadOptions = QuadOptions { abs_tol: 1e-10, rel_tol: 1e-9, max_intervals: 4096 };

    #[test]
    fn constant_integrand() {
        let r = quad_1d(|_| 1.0, 0.0, 1.0, &OPT).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn declared_sqrt_singularity() {
        // ∫_0^1 t^{-1/2} dt = 2
        let r = quad_1d_singular(|t| t.powf(-0.5), 0.0, 1.0, Some(0.5), None, &OPT).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn both_endpoints_singular() {
        // ∫_0^1 t^{-1/2}(1-t)^{-1/2} dt = π
        let r = quad_1d_singular(
            |t| t.powf(-0.5) * (1.0 - t).powf(-0.5),
            0.0,
            1.0,
            Some(0.5),
            Some(0.5),
            &OPT,
        )
        .unwrap();
        assert_relative_eq!(r.value, std::f64::consts::PI, max_relative = 1e-8);
    }

    #[test]
    fn tail_power_law() {
        // ∫_1^∞ r^{-2.5} dr = 1/1.5
        let r = quad_tail(|x| x.powf(-2.5), 1.0, 2.5, &OPT).unwrap();
        assert_relative_eq!(r.value, 1.0 / 1.5, max_relative = 1e-9);
        // slow tails near the q > 1 boundary still work
        let r = quad_tail(|x| x.powf(-1.2), 1.0, 1.2, &OPT).unwrap();
        assert_relative_eq!(r.value, 5.0, max_relative = 1e-8);
        assert!(quad_tail(|x| 1.0 / x, 1.0, 1.0, &OPT).is_err());
    }

    #[test]
    fn disk_moment_in_polar_coordinates() {
        // ∫_{B_1 ⊂ R²} |x|² dx = ∫_0^{2π}∫_0^1 r³ dr dθ = π/2
        let domain = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 2.0 * std::f64::consts::PI]).unwrap();
        let r = quad_2d(|rad, _| rad.powi(3), &domain, &OPT).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::PI / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn budget_exceeded_carries_best_estimate() {
        let tight = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-16, max_intervals: 8 };
        let e = quad_1d(|t: f64| (50.0 * t).sin().abs(), 0.0, 1.0, &tight).unwrap_err();
        match e {
            Error::BudgetExceeded { best, err } => {
                assert!(best.is_finite() && err > 0.0);
            }
            other => panic!("expected BudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn gauss_legendre_rule_is_exact_on_polynomials() {
        let (xs, ws) = gauss_legendre(8);
        // degree 15 exactness: ∫_{-1}^1 x^14 dx = 2/15
        let v: f64 = xs.iter().zip(&ws).map(|(&x, &w)| w * x.powi(14)).sum();
        assert_relative_eq!(v, 2.0 / 15.0, max_relative = 1e-12);
        let total: f64 = ws.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-13);
    }
}

//! Decreasing/increasing rearrangements, the k-symmetric increasing
//! rearrangement, and the closed-form rearranged kernel slice.
//!
//! Rearrangements are computed from distribution-function oracles by monotone
//! bisection, with the right-continuous generalized-inverse convention at
//! plateaus (`sup ∅ = 0`, `inf ∅ = ∞`).

pub mod ryff;
pub mod step;

use crate::convex::SublevelProfile;
use crate::error::{Error, Result};
use crate::numerics::special::unit_ball_measure;
use crate::numerics::{ExtendedMeasure, OperatorParams};

pub use ryff::{ryff_map_1d, Direction, PiecewiseLinear, RyffMap};

/// A nonnegative measurable function on `R^k` exposing its distribution
/// functions; the rearrangement routines consume only these oracles.
pub trait MeasurableFn: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64]) -> f64;
    /// `|{f > λ}|`
    fn superlevel_measure(&self, lambda: f64) -> ExtendedMeasure;
    /// `|{f ≤ λ}|`
    fn sublevel_measure(&self, lambda: f64) -> ExtendedMeasure;
}

/// A monotone profile on `[0, ∞)` sampled at breakpoints, linearly
/// interpolated in between; values may be exactly infinite (tagged).
#[derive(Debug, Clone)]
pub struct Rearrangement1D {
    pub ts: Vec<f64>,
    pub values: Vec<ExtendedMeasure>,
    pub direction: Direction,
    pub limit_at_infinity: ExtendedMeasure,
}

impl Rearrangement1D {
    pub fn eval(&self, t: f64) -> ExtendedMeasure {
        if self.ts.is_empty() {
            return self.limit_at_infinity;
        }
        if t <= self.ts[0] {
            return self.values[0];
        }
        if t >= *self.ts.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let i = self.ts.partition_point(|&x| x <= t) - 1;
        match (self.values[i], self.values[i + 1]) {
            (ExtendedMeasure::Finite(a), ExtendedMeasure::Finite(b)) => {
                let w = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i]);
                ExtendedMeasure::Finite(a + w * (b - a))
            }
            _ => ExtendedMeasure::Infinite,
        }
    }

    /// CSV rows `t,value` with `inf` for tagged infinities.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.ts.iter().zip(&self.values) {
            match v {
                ExtendedMeasure::Finite(x) => out.push_str(&format!("{t},{x}\n")),
                ExtendedMeasure::Infinite => out.push_str(&format!("{t},inf\n")),
            }
        }
        out
    }
}

const LAMBDA_CAP: f64 = 1e60;

/// `f*(t) = sup{λ > 0 : |{f > λ}| > t}` with `sup ∅ = 0`.
pub fn decreasing_rearrangement<F: MeasurableFn>(f: &F, ts: &[f64]) -> Result<Rearrangement1D> {
    let mut values = Vec::with_capacity(ts.len());
    for &t in ts {
        if t < 0.0 {
            return Err(Error::domain("rearrangement arguments must be ≥ 0"));
        }
        values.push(decreasing_value(f, t)?);
    }
    Ok(Rearrangement1D {
        ts: ts.to_vec(),
        values,
        direction: Direction::Decreasing,
        limit_at_infinity: ExtendedMeasure::Finite(0.0),
    })
}

fn decreasing_value<F: MeasurableFn>(f: &F, t: f64) -> Result<ExtendedMeasure> {
    let above = |lambda: f64| f.superlevel_measure(lambda) > ExtendedMeasure::Finite(t);
    // grow λ until the superlevel measure drops to t or below
    let mut hi = 1.0;
    let mut bounded = false;
    while hi < LAMBDA_CAP {
        if !above(hi) {
            bounded = true;
            break;
        }
        hi *= 2.0;
    }
    if !bounded {
        return Ok(ExtendedMeasure::Infinite);
    }
    // if no λ > 0 qualifies the bisection collapses to 0 (sup ∅ = 0)
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ExtendedMeasure::Finite(lo))
}

/// `f_*(t) = inf{λ > 0 : |{f ≤ λ}| > t}` with `inf ∅ = ∞`.
pub fn increasing_rearrangement<F: MeasurableFn>(f: &F, ts: &[f64]) -> Result<Rearrangement1D> {
    let mut values = Vec::with_capacity(ts.len());
    let mut limit = ExtendedMeasure::Finite(0.0);
    for &t in ts {
        if t < 0.0 {
            return Err(Error::domain("rearrangement arguments must be ≥ 0"));
        }
        let v = increasing_value(f, t)?;
        values.push(v);
        limit = v;
    }
    Ok(Rearrangement1D {
        ts: ts.to_vec(),
        values,
        direction: Direction::Increasing,
        limit_at_infinity: limit,
    })
}

fn increasing_value<F: MeasurableFn>(f: &F, t: f64) -> Result<ExtendedMeasure> {
    let qualifies = |lambda: f64| f.sublevel_measure(lambda) > ExtendedMeasure::Finite(t);
    let mut hi = 1.0;
    let mut found = false;
    while hi < LAMBDA_CAP {
        if qualifies(hi) {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    if !found {
        // sublevel measures stay ≤ t: inf ∅ = ∞
        return Ok(ExtendedMeasure::Infinite);
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if qualifies(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ExtendedMeasure::Finite(hi))
}

/// Closed form of the rearranged kernel slice,
/// `K_z^*(t) = ((ω_k^{-1} t)^{2/k} + |z|²)^{-(n+2s)/2}`.
pub fn kernel_rearranged_value(t: f64, z: &[f64], params: &OperatorParams) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::domain("kernel_rearranged_value requires t ≥ 0"));
    }
    let z2: f64 = z.iter().map(|v| v * v).sum();
    if t == 0.0 && z2 == 0.0 {
        return Err(Error::domain("kernel slice rearrangement singular at t = 0, z = 0"));
    }
    let omega_k = unit_ball_measure(params.k)?;
    let r2 = (t / omega_k).powf(2.0 / params.k as f64) + z2;
    Ok(r2.powf(-0.5 * params.kernel_exponent()))
}

/// The kernel slice `y ↦ (|y|² + |z|²)^{-(n+2s)/2}` as a measurable function,
/// with closed-form distribution oracles.
pub struct KernelSlice<'a> {
    pub params: &'a OperatorParams,
    pub z: Vec<f64>,
}

impl MeasurableFn for KernelSlice<'_> {
    fn dim(&self) -> usize {
        self.params.k
    }

    fn eval(&self, y: &[f64]) -> f64 {
        let r2: f64 =
            y.iter().map(|v| v * v).sum::<f64>() + self.z.iter().map(|v| v * v).sum::<f64>();
        r2.powf(-0.5 * self.params.kernel_exponent())
    }

    fn superlevel_measure(&self, lambda: f64) -> ExtendedMeasure {
        if lambda <= 0.0 {
            return ExtendedMeasure::Infinite;
        }
        let z2: f64 = self.z.iter().map(|v| v * v).sum();
        let r2 = lambda.powf(-2.0 / self.params.kernel_exponent()) - z2;
        if r2 <= 0.0 {
            ExtendedMeasure::Finite(0.0)
        } else {
            let omega_k = unit_ball_measure(self.params.k).expect("k ≥ 1");
            ExtendedMeasure::Finite(omega_k * r2.powf(self.params.k as f64 / 2.0))
        }
    }

    fn sublevel_measure(&self, _lambda: f64) -> ExtendedMeasure {
        // small values fill the complement of a ball
        ExtendedMeasure::Infinite
    }
}

/// The k-symmetric increasing rearrangement
/// `ũ_{*,k}(y, z) = inf{λ : μ(λ, z) > |y|^k}`, evaluated by inverting the
/// sublevel profile with the right-continuous convention.
pub struct KSymmetricProfile<'a> {
    profile: &'a SublevelProfile,
}

impl<'a> KSymmetricProfile<'a> {
    pub fn new(profile: &'a SublevelProfile) -> Self {
        KSymmetricProfile { profile }
    }

    pub fn profile(&self) -> &SublevelProfile {
        self.profile
    }

    /// Value at radius `r = |y|` and offset `z`; `Infinite` when the target
    /// exceeds every finite slice measure (bounded-sublevel case).
    pub fn eval(&self, r: f64, z: &[f64]) -> Result<ExtendedMeasure> {
        if r < 0.0 {
            return Err(Error::domain("radius must be ≥ 0"));
        }
        let target = r.powi(self.profile.k() as i32);
        let exceeds = |lambda: f64| -> Result<bool> {
            Ok(match self.profile.measure(lambda, z)? {
                ExtendedMeasure::Infinite => true,
                ExtendedMeasure::Finite(m) => m > target,
            })
        };
        let mut hi = 1.0;
        let mut found = false;
        while hi < LAMBDA_CAP {
            if exceeds(hi)? {
                found = true;
                break;
            }
            hi *= 2.0;
        }
        if !found {
            return Ok(ExtendedMeasure::Infinite);
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if exceeds(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(ExtendedMeasure::Finite(hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexFunction;
    use approx::assert_relative_eq;

    /// indicator of a set of measure `m`
    struct Indicator {
        m: f64,
    }

    impl MeasurableFn for Indicator {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, y: &[f64]) -> f64 {
            if y[0].abs() <= self.m / 2.0 {
                1.0
            } else {
                0.0
            }
        }
        fn superlevel_measure(&self, lambda: f64) -> ExtendedMeasure {
            if lambda < 1.0 {
                ExtendedMeasure::Finite(self.m)
            } else {
                ExtendedMeasure::Finite(0.0)
            }
        }
        fn sublevel_measure(&self, _lambda: f64) -> ExtendedMeasure {
            // complement of the support is unbounded
            ExtendedMeasure::Infinite
        }
    }

    /// `f(y) = (1 + y²)^{-1}` on R
    struct RationalDecay;

    impl MeasurableFn for RationalDecay {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, y: &[f64]) -> f64 {
            1.0 / (1.0 + y[0] * y[0])
        }
        fn superlevel_measure(&self, lambda: f64) -> ExtendedMeasure {
            if lambda >= 1.0 {
                ExtendedMeasure::Finite(0.0)
            } else if lambda <= 0.0 {
                ExtendedMeasure::Infinite
            } else {
                ExtendedMeasure::Finite(2.0 * (1.0 / lambda - 1.0).sqrt())
            }
        }
        fn sublevel_measure(&self, lambda: f64) -> ExtendedMeasure {
            if lambda <= 0.0 {
                ExtendedMeasure::Finite(0.0)
            } else {
                ExtendedMeasure::Infinite
            }
        }
    }

    /// `f(y) = |y|` on R
    struct AbsVal;

    impl MeasurableFn for AbsVal {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, y: &[f64]) -> f64 {
            y[0].abs()
        }
        fn superlevel_measure(&self, _lambda: f64) -> ExtendedMeasure {
            ExtendedMeasure::Infinite
        }
        fn sublevel_measure(&self, lambda: f64) -> ExtendedMeasure {
            if lambda < 0.0 {
                ExtendedMeasure::Finite(0.0)
            } else {
                ExtendedMeasure::Finite(2.0 * lambda)
            }
        }
    }

    #[test]
    fn indicator_rearranges_to_interval() {
        let f = Indicator { m: 1.5 };
        let ts = [0.0, 0.4, 1.0, 1.4, 1.6, 3.0];
        let r = decreasing_rearrangement(&f, &ts).unwrap();
        for (t, v) in ts.iter().zip(&r.values) {
            let expect = if *t < 1.5 { 1.0 } else { 0.0 };
            assert_relative_eq!(
                v.expect_finite("indicator"),
                expect,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rational_decay_rearrangement_closed_form() {
        // level sets are intervals of length 2√(1/λ - 1): f*(t) = (1+(t/2)²)^{-1}
        let f = RationalDecay;
        let ts = [0.1, 0.5, 1.0, 2.0, 5.0];
        let r = decreasing_rearrangement(&f, &ts).unwrap();
        for (t, v) in ts.iter().zip(&r.values) {
            assert_relative_eq!(
                v.expect_finite("decay"),
                1.0 / (1.0 + (t / 2.0) * (t / 2.0)),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn increasing_rearrangement_of_abs() {
        let f = AbsVal;
        let ts = [0.0, 0.5, 1.0, 4.0];
        let r = increasing_rearrangement(&f, &ts).unwrap();
        for (t, v) in ts.iter().zip(&r.values) {
            assert_relative_eq!(v.expect_finite("abs"), t / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_function_rearranges_to_itself() {
        struct Constant;
        impl MeasurableFn for Constant {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _y: &[f64]) -> f64 {
                3.0
            }
            fn superlevel_measure(&self, lambda: f64) -> ExtendedMeasure {
                if lambda < 3.0 {
                    ExtendedMeasure::Infinite
                } else {
                    ExtendedMeasure::Finite(0.0)
                }
            }
            fn sublevel_measure(&self, lambda: f64) -> ExtendedMeasure {
                if lambda < 3.0 {
                    ExtendedMeasure::Finite(0.0)
                } else {
                    ExtendedMeasure::Infinite
                }
            }
        }
        let r = increasing_rearrangement(&Constant, &[0.3, 2.0, 10.0]).unwrap();
        for v in &r.values {
            assert_relative_eq!(v.expect_finite("const"), 3.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn bounded_sublevels_give_infinity() {
        // f with sublevel measures capped at M: f_*(t) = ∞ for t > M
        struct Capped;
        impl MeasurableFn for Capped {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, y: &[f64]) -> f64 {
                y[0].abs().min(1.0)
            }
            fn superlevel_measure(&self, _l: f64) -> ExtendedMeasure {
                ExtendedMeasure::Infinite
            }
            fn sublevel_measure(&self, lambda: f64) -> ExtendedMeasure {
                if lambda < 0.0 {
                    ExtendedMeasure::Finite(0.0)
                } else if lambda < 1.0 {
                    ExtendedMeasure::Finite(2.0 * lambda)
                } else {
                    ExtendedMeasure::Infinite
                }
            }
        }
        // cap M = 2 is only exceeded at λ ≥ 1 where the measure jumps to ∞…
        let r = increasing_rearrangement(&Capped, &[1.0, 1.9]).unwrap();
        assert!(r.values.iter().all(|v| !v.is_infinite()));
        // …while a hard cap yields the empty set: inf ∅ = ∞
        struct HardCap;
        impl MeasurableFn for HardCap {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, y: &[f64]) -> f64 {
                y[0].abs()
            }
            fn superlevel_measure(&self, _l: f64) -> ExtendedMeasure {
                ExtendedMeasure::Infinite
            }
            fn sublevel_measure(&self, lambda: f64) -> ExtendedMeasure {
                ExtendedMeasure::Finite(lambda.clamp(0.0, 2.0))
            }
        }
        let r = increasing_rearrangement(&HardCap, &[2.5, 5.0]).unwrap();
        assert!(r.values.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn kernel_rearranged_closed_form() {
        let p = OperatorParams::new(2, 1, 0.75).unwrap();
        // t = 0, z ≠ 0 → |z|^{-(n+2s)}
        let v = kernel_rearranged_value(0.0, &[0.5], &p).unwrap();
        assert_relative_eq!(v, 0.5_f64.powf(-3.5), max_relative = 1e-13);
        assert!(kernel_rearranged_value(0.0, &[0.0], &p).is_err());

        // k = n: t = ω_n r^n recovers the isotropic kernel
        let p2 = OperatorParams::new(2, 2, 0.75).unwrap();
        let omega2 = unit_ball_measure(2).unwrap();
        let r: f64 = 1.7;
        let v = kernel_rearranged_value(omega2 * r.powi(2), &[], &p2).unwrap();
        assert_relative_eq!(v, r.powf(-3.5), max_relative = 1e-13);
    }

    #[test]
    fn kernel_rearrangement_matches_generic_routine() {
        // Lemma-style cross-check: the generic decreasing rearrangement of the
        // kernel slice reproduces the closed form
        let p = OperatorParams::new(2, 1, 0.75).unwrap();
        let slice = KernelSlice { params: &p, z: vec![0.8] };
        let ts = [0.2, 1.0, 3.0, 10.0];
        let r = decreasing_rearrangement(&slice, &ts).unwrap();
        for (t, v) in ts.iter().zip(&r.values) {
            let expect = kernel_rearranged_value(*t, &[0.8], &p).unwrap();
            assert_relative_eq!(
                v.expect_finite("kernel"),
                expect,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn k_symmetric_fixed_point_on_radial_input() {
        // a radial increasing excess is its own k-symmetric rearrangement
        let u = ConvexFunction::radial_cone(2, 1.0).unwrap();
        let e = u.excess_at(&[0.0, 0.0]).unwrap();
        let prof = SublevelProfile::new_exact(e.clone(), 1).unwrap();
        let sym = KSymmetricProfile::new(&prof);
        for (r, z) in [(0.5, 0.3), (1.0, 0.0), (2.0, -1.0), (0.0, 0.7)] {
            let got = sym.eval(r, &[z]).unwrap().expect_finite("symmetric");
            let expect = e.eval(&[r, z]);
            assert_relative_eq!(got, expect, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn k_symmetric_of_elliptic_slices() {
        // ũ with sublevel slices {a y² + z² ≤ t(t+2)}: interval half-lengths
        // give the inversion target analytically
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let u = ConvexFunction::smoothed_cone(a).unwrap();
        let e = u.excess_at(&[0.0, 0.0]).unwrap();
        let prof = SublevelProfile::new_exact(e, 1).unwrap();
        let sym = KSymmetricProfile::new(&prof);
        // μ(λ, z) = √(((λ+1)² - 1 - z²)/4): invert at r
        for (r, z) in [(0.5f64, 0.2f64), (1.2, -0.5), (0.1, 0.0)] {
            let got = sym.eval(r, &[z]).unwrap().expect_finite("sym");
            let expect = (1.0 + 4.0 * r * r + z * z).sqrt() - 1.0;
            assert_relative_eq!(got, expect, epsilon = 1e-9, max_relative = 1e-8);
        }
    }

    #[test]
    fn rearrangement_csv_round_trip() {
        let f = AbsVal;
        let r = increasing_rearrangement(&f, &[0.0, 1.0, 2.0]).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("t,value\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}

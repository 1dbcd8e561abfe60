//! Ryff maps in one dimension: a measure-preserving `σ` with
//! `f = (rearrangement of f) ∘ σ` for piecewise-linear nonnegative inputs.
//!
//! The map is materialized as an explicit piecewise-linear function by
//! subdividing the input at level crossings of its node values, so preimage
//! measures are computed in closed form. Plateaus are filled left to right.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ExtendedMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    Decreasing,
    Increasing,
}

/// Piecewise-linear function on R: nodes plus linear extensions beyond the
/// first and last node.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::domain("piecewise-linear needs matching nonempty nodes"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("node positions must be strictly increasing"));
        }
        if ys.iter().any(|&v| v < 0.0) {
            return Err(Error::domain("values must be nonnegative"));
        }
        if left_slope > 0.0 || right_slope < 0.0 {
            return Err(Error::domain(
                "extensions must keep the function nonnegative (left slope ≤ 0 ≤ right slope)",
            ));
        }
        Ok(PiecewiseLinear { xs, ys, left_slope, right_slope })
    }

    pub fn eval(&self, y: f64) -> f64 {
        let n = self.xs.len();
        if y <= self.xs[0] {
            return self.ys[0] + self.left_slope * (y - self.xs[0]);
        }
        if y >= self.xs[n - 1] {
            return self.ys[n - 1] + self.right_slope * (y - self.xs[n - 1]);
        }
        let i = self.xs.partition_point(|&x| x <= y) - 1;
        let w = (y - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + w * (self.ys[i + 1] - self.ys[i])
    }

    fn node_values(&self) -> Vec<f64> {
        let mut v = self.ys.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }

    /// `|{f < v}|`; infinite when a flat extension sits below `v`.
    fn measure_strict_below(&self, v: f64) -> ExtendedMeasure {
        let mut total = 0.0;
        // left extension
        if self.left_slope == 0.0 {
            if self.ys[0] < v {
                return ExtendedMeasure::Infinite;
            }
        } else if v > self.ys[0] {
            total += (v - self.ys[0]) / -self.left_slope;
        }
        // right extension
        let n = self.xs.len();
        if self.right_slope == 0.0 {
            if self.ys[n - 1] < v {
                return ExtendedMeasure::Infinite;
            }
        } else if v > self.ys[n - 1] {
            total += (v - self.ys[n - 1]) / self.right_slope;
        }
        for i in 0..n - 1 {
            let len = self.xs[i + 1] - self.xs[i];
            let (f0, f1) = (self.ys[i], self.ys[i + 1]);
            let (lo, hi) = (f0.min(f1), f0.max(f1));
            if hi == lo {
                if lo < v {
                    total += len;
                }
            } else {
                total += len * ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            }
        }
        ExtendedMeasure::Finite(total)
    }

    /// `|{f > v}|`; infinite when an extension climbs above `v` forever.
    fn measure_strict_above(&self, v: f64) -> ExtendedMeasure {
        let mut total = 0.0;
        let n = self.xs.len();
        if self.left_slope < 0.0 {
            return ExtendedMeasure::Infinite;
        }
        if self.left_slope == 0.0 && self.ys[0] > v {
            return ExtendedMeasure::Infinite;
        }
        if self.right_slope > 0.0 {
            return ExtendedMeasure::Infinite;
        }
        if self.right_slope == 0.0 && self.ys[n - 1] > v {
            return ExtendedMeasure::Infinite;
        }
        for i in 0..n - 1 {
            let len = self.xs[i + 1] - self.xs[i];
            let (f0, f1) = (self.ys[i], self.ys[i + 1]);
            let (lo, hi) = (f0.min(f1), f0.max(f1));
            if hi == lo {
                if lo > v {
                    total += len;
                }
            } else {
                total += len * ((hi - v) / (hi - lo)).clamp(0.0, 1.0);
            }
        }
        ExtendedMeasure::Finite(total)
    }

    /// Plateau intervals `(value, x0, x1)` in left-to-right order.
    fn plateaus(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for i in 0..self.xs.len() - 1 {
            if self.ys[i] == self.ys[i + 1] {
                out.push((self.ys[i], self.xs[i], self.xs[i + 1]));
            }
        }
        out
    }

    fn plateau_length_at(&self, v: f64) -> f64 {
        self.plateaus()
            .iter()
            .filter(|(c, _, _)| *c == v)
            .map(|(_, a, b)| b - a)
            .sum()
    }
}

/// One linear branch of σ with finite extent.
#[derive(Debug, Clone, Copy)]
struct Branch {
    x0: f64,
    x1: f64,
    s0: f64,
    s1: f64,
}

/// Measure-preserving realization of a rearrangement: `f = r ∘ σ` almost
/// everywhere on the support of `f`.
#[derive(Debug, Clone)]
pub struct RyffMap {
    branches: Vec<Branch>,
    /// `(anchor_x, σ(anchor), dσ/dy)` on `(-∞, anchor_x]`
    left_tail: Option<(f64, f64, f64)>,
    right_tail: Option<(f64, f64, f64)>,
    source: PiecewiseLinear,
    pub direction: Direction,
}

/// Builds the Ryff map for a piecewise-linear nonnegative `f`.
///
/// `Increasing` requires `f → ∞` on both sides (all sublevel measures finite,
/// so `f_*(t) → ∞`); `Decreasing` requires compact support (`f*(t) → 0`).
pub fn ryff_map_1d(f: &PiecewiseLinear, direction: Direction) -> Result<RyffMap> {
    match direction {
        Direction::Increasing => {
            if !(f.left_slope < 0.0 && f.right_slope > 0.0) {
                return Err(Error::RyffNotApplicable(
                    "increasing direction needs f → ∞ on both sides".into(),
                ));
            }
        }
        Direction::Decreasing => {
            let n = f.xs.len();
            if f.left_slope != 0.0 || f.right_slope != 0.0 || f.ys[0] != 0.0 || f.ys[n - 1] != 0.0
            {
                return Err(Error::RyffNotApplicable(
                    "decreasing direction needs compactly supported f".into(),
                ));
            }
        }
    }

    let values = f.node_values();
    // base level measure seen from inside a branch whose values lie in (va, vb)
    let level = |v: f64, from_above: bool| -> f64 {
        match direction {
            Direction::Increasing => {
                let m = f
                    .measure_strict_below(v)
                    .expect_finite("sublevel measure under increasing hypothesis");
                if from_above {
                    m + f.plateau_length_at(v)
                } else {
                    m
                }
            }
            Direction::Decreasing => {
                let m = f
                    .measure_strict_above(v)
                    .expect_finite("superlevel measure under decreasing hypothesis");
                if from_above {
                    m
                } else {
                    m + f.plateau_length_at(v)
                }
            }
        }
    };

    let mut branches = Vec::new();

    // plateau fill offsets, left to right within each value class
    let plateaus = f.plateaus();
    for (i, &(c, a, b)) in plateaus.iter().enumerate() {
        if matches!(direction, Direction::Decreasing) && c == 0.0 {
            continue; // outside the support
        }
        let earlier: f64 = plateaus[..i]
            .iter()
            .filter(|(c2, _, _)| *c2 == c)
            .map(|(_, a2, b2)| b2 - a2)
            .sum();
        let base = match direction {
            Direction::Increasing => f
                .measure_strict_below(c)
                .expect_finite("plateau base measure"),
            Direction::Decreasing => f
                .measure_strict_above(c)
                .expect_finite("plateau base measure"),
        };
        branches.push(Branch {
            x0: a,
            x1: b,
            s0: base + earlier,
            s1: base + earlier + (b - a),
        });
    }

    // strictly monotone interior pieces, subdivided at node-value crossings
    let n = f.xs.len();
    for i in 0..n - 1 {
        let (x0, x1, f0, f1) = (f.xs[i], f.xs[i + 1], f.ys[i], f.ys[i + 1]);
        if f0 == f1 {
            continue;
        }
        let (lo, hi) = (f0.min(f1), f0.max(f1));
        let mut cuts: Vec<f64> = values
            .iter()
            .copied()
            .filter(|v| *v > lo && *v < hi)
            .collect();
        cuts.insert(0, lo);
        cuts.push(hi);
        for w in cuts.windows(2) {
            let (va, vb) = (w[0], w[1]);
            // positions of the level crossings inside this piece
            let xa = x0 + (va - f0) / (f1 - f0) * (x1 - x0);
            let xb = x0 + (vb - f0) / (f1 - f0) * (x1 - x0);
            let sa = level(va, true);
            let sb = level(vb, false);
            let (px0, px1, ps0, ps1) = if xa < xb {
                (xa, xb, sa, sb)
            } else {
                (xb, xa, sb, sa)
            };
            branches.push(Branch { x0: px0, x1: px1, s0: ps0, s1: ps1 });
        }
    }

    // infinite extensions (increasing direction only)
    let mut left_tail = None;
    let mut right_tail = None;
    if matches!(direction, Direction::Increasing) {
        let vmax = *values.last().unwrap();
        // left: f decreases to ys[0] at xs[0], values (ys[0], ∞)
        {
            let f_anchor = f.ys[0];
            let mut cuts: Vec<f64> = values.iter().copied().filter(|v| *v > f_anchor).collect();
            cuts.insert(0, f_anchor);
            let xs_of = |v: f64| f.xs[0] - (v - f_anchor) / (-f.left_slope);
            for w in cuts.windows(2) {
                let (va, vb) = (w[0], w[1]);
                branches.push(Branch {
                    x0: xs_of(vb),
                    x1: xs_of(va),
                    s0: level(vb, false),
                    s1: level(va, true),
                });
            }
            let v_top = vmax.max(f_anchor);
            let anchor = xs_of(v_top);
            // above every node value m_< has constant slope 1/|ls| + 1/rs
            let rate = 1.0 / -f.left_slope + 1.0 / f.right_slope;
            left_tail = Some((anchor, level(v_top, true), -(-f.left_slope) * rate));
        }
        // right: f increases from ys[n-1], values (ys[n-1], ∞)
        {
            let f_anchor = f.ys[n - 1];
            let mut cuts: Vec<f64> = values.iter().copied().filter(|v| *v > f_anchor).collect();
            cuts.insert(0, f_anchor);
            let xs_of = |v: f64| f.xs[n - 1] + (v - f_anchor) / f.right_slope;
            for w in cuts.windows(2) {
                let (va, vb) = (w[0], w[1]);
                branches.push(Branch {
                    x0: xs_of(va),
                    x1: xs_of(vb),
                    s0: level(va, true),
                    s1: level(vb, false),
                });
            }
            let v_top = vmax.max(f_anchor);
            let anchor = xs_of(v_top);
            let rate = 1.0 / -f.left_slope + 1.0 / f.right_slope;
            right_tail = Some((anchor, level(v_top, true), f.right_slope * rate));
        }
    }

    branches.sort_by(|a, b| a.x0.partial_cmp(&b.x0).unwrap());
    branches.retain(|b| b.x1 > b.x0);
    Ok(RyffMap {
        branches,
        left_tail,
        right_tail,
        source: f.clone(),
        direction,
    })
}

impl RyffMap {
    pub fn eval(&self, y: f64) -> f64 {
        if let Some((anchor, s, dsdy)) = self.left_tail {
            if y <= anchor {
                return s + dsdy * (y - anchor);
            }
        }
        if let Some((anchor, s, dsdy)) = self.right_tail {
            if y >= anchor {
                return s + dsdy * (y - anchor);
            }
        }
        for b in &self.branches {
            if y >= b.x0 && y <= b.x1 {
                let w = if b.x1 > b.x0 { (y - b.x0) / (b.x1 - b.x0) } else { 0.0 };
                return b.s0 + w * (b.s1 - b.s0);
            }
        }
        // outside the support (decreasing direction): map to the total mass
        match self.direction {
            Direction::Decreasing => self
                .source
                .measure_strict_above(0.0)
                .expect_finite("support length"),
            Direction::Increasing => unreachable!("tails cover the line"),
        }
    }

    /// Exact Lebesgue measure of `σ^{-1}([a, b])`.
    pub fn preimage_measure(&self, a: f64, b: f64) -> f64 {
        assert!(a <= b);
        let overlap = |s0: f64, s1: f64, len: f64| -> f64 {
            let (lo, hi) = (s0.min(s1), s0.max(s1));
            if hi == lo {
                return 0.0;
            }
            len * ((hi.min(b) - lo.max(a)).max(0.0)) / (hi - lo)
        };
        let mut total = 0.0;
        for br in &self.branches {
            total += overlap(br.s0, br.s1, br.x1 - br.x0);
        }
        for tail in [self.left_tail, self.right_tail].into_iter().flatten() {
            let (_, s, dsdy) = tail;
            // σ covers [s, ∞) along the tail at rate |dσ/dy|
            let lo = s.max(a);
            if b > lo {
                total += (b - lo) / dsdy.abs();
            }
        }
        total
    }

    /// The rearrangement being realized: `f_*` (increasing) or `f*`
    /// (decreasing) evaluated by inverting the exact measure oracles.
    pub fn rearrangement_value(&self, t: f64) -> ExtendedMeasure {
        let f = &self.source;
        match self.direction {
            Direction::Increasing => {
                let m_le = |v: f64| match f.measure_strict_below(v) {
                    ExtendedMeasure::Finite(m) => m + f.plateau_length_at(v),
                    ExtendedMeasure::Infinite => f64::INFINITY,
                };
                let mut hi = 1.0;
                while m_le(hi) <= t {
                    hi *= 2.0;
                    if hi > 1e18 {
                        return ExtendedMeasure::Infinite;
                    }
                }
                let mut lo = 0.0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if m_le(mid) > t {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                ExtendedMeasure::Finite(hi)
            }
            Direction::Decreasing => {
                let m_gt = |v: f64| match f.measure_strict_above(v) {
                    ExtendedMeasure::Finite(m) => m,
                    ExtendedMeasure::Infinite => f64::INFINITY,
                };
                let mut hi = 1.0;
                while m_gt(hi) > t {
                    hi *= 2.0;
                    if hi > 1e18 {
                        return ExtendedMeasure::Infinite;
                    }
                }
                let mut lo = 0.0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if m_gt(mid) > t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                ExtendedMeasure::Finite(lo)
            }
        }
    }
}

//! Step functions over rational boxes with exact rearrangement algebra.
//!
//! The Hardy–Littlewood chain `∫ f_* g* ≤ ∫ f g ≤ ∫ f* g*` is checked in
//! `BigRational` arithmetic, so it holds exactly, not within a floating
//! tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// A nonnegative step function on `R^k`: finitely many disjoint boxes with
/// positive rational values, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub k: usize,
    pub cells: Vec<(Vec<(Q, Q)>, Q)>,
}

fn box_volume(b: &[(Q, Q)]) -> Q {
    b.iter().fold(Q::one(), |acc, (lo, hi)| acc * (hi - lo))
}

fn box_intersection_volume(a: &[(Q, Q)], b: &[(Q, Q)]) -> Q {
    let mut vol = Q::one();
    for ((alo, ahi), (blo, bhi)) in a.iter().zip(b) {
        let lo = alo.max(blo);
        let hi = ahi.min(bhi);
        if hi <= lo {
            return Q::zero();
        }
        vol *= hi - lo;
    }
    vol
}

impl StepFunction {
    pub fn new(k: usize, cells: Vec<(Vec<(Q, Q)>, Q)>) -> crate::Result<Self> {
        for (b, v) in &cells {
            if b.len() != k {
                return Err(crate::Error::domain("cell dimension mismatch"));
            }
            if b.iter().any(|(lo, hi)| lo >= hi) {
                return Err(crate::Error::domain("cells must have positive extent"));
            }
            if v <= &Q::zero() {
                return Err(crate::Error::domain("cell values must be positive"));
            }
        }
        for i in 0..cells.len() {
            for j in 0..i {
                if !box_intersection_volume(&cells[i].0, &cells[j].0).is_zero() {
                    return Err(crate::Error::domain("cells must be disjoint"));
                }
            }
        }
        Ok(StepFunction { k, cells })
    }

    /// `∫ f g` exactly, summed over cell intersections.
    pub fn integral_product(&self, other: &StepFunction) -> Q {
        let mut total = Q::zero();
        for (bf, vf) in &self.cells {
            for (bg, vg) in &other.cells {
                let vol = box_intersection_volume(bf, bg);
                if !vol.is_zero() {
                    total += vol * vf * vg;
                }
            }
        }
        total
    }

    /// The decreasing rearrangement as a step profile: (value, run length)
    /// pairs in descending value order; implicitly zero afterwards.
    pub fn decreasing_profile(&self) -> Vec<(Q, Q)> {
        let mut items: Vec<(Q, Q)> = self
            .cells
            .iter()
            .map(|(b, v)| (v.clone(), box_volume(b)))
            .collect();
        items.sort_by(|a, b| b.0.cmp(&a.0));
        // merge equal values
        let mut out: Vec<(Q, Q)> = Vec::new();
        for (v, m) in items {
            match out.last_mut() {
                Some((pv, pm)) if *pv == v => *pm += m,
                _ => out.push((v, m)),
            }
        }
        out
    }

    /// `f*(t)` evaluated exactly from the profile.
    pub fn decreasing_value_at(&self, t: &Q) -> Q {
        let mut pos = Q::zero();
        for (v, len) in self.decreasing_profile() {
            pos += len;
            if *t < pos {
                return v;
            }
        }
        Q::zero()
    }
}

/// `∫_0^∞ f* g*` for two step profiles, by a two-pointer sweep.
pub fn integral_decreasing_product(f: &StepFunction, g: &StepFunction) -> Q {
    let pf = f.decreasing_profile();
    let pg = g.decreasing_profile();
    let mut total = Q::zero();
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = Q::zero();
    let mut end_f = pf.first().map(|(_, m)| m.clone()).unwrap_or_else(Q::zero);
    let mut end_g = pg.first().map(|(_, m)| m.clone()).unwrap_or_else(Q::zero);
    while i < pf.len() && j < pg.len() {
        let next = end_f.clone().min(end_g.clone());
        total += (&next - &pos) * &pf[i].0 * &pg[j].0;
        pos = next;
        if pos == end_f {
            i += 1;
            if i < pf.len() {
                end_f += pf[i].1.clone();
            }
        }
        if pos == end_g {
            j += 1;
            if j < pg.len() {
                end_g += pg[j].1.clone();
            }
        }
    }
    total
}

/// Hardy–Littlewood bounds `(∫ f_* g*, ∫ f g, ∫ f* g*)`, all exact.
///
/// On `R^k` a compactly supported step function has `|{f ≤ λ}| = ∞` for every
/// `λ > 0`, so its increasing rearrangement vanishes identically and the lower
/// bound is exactly zero.
pub fn hardy_littlewood_bounds(f: &StepFunction, g: &StepFunction) -> (Q, Q, Q) {
    let lower = Q::zero();
    let middle = f.integral_product(g);
    let upper = integral_decreasing_product(f, g);
    (lower, middle, upper)
}

/// Random step function on a rational grid (test corpus generator).
pub fn random_step_function<R: Rng>(rng: &mut R, k: usize) -> StepFunction {
    let den = [1i64, 2, 3, 4][rng.gen_range(0..4)];
    // axis breakpoints
    let mut axes: Vec<Vec<Q>> = Vec::new();
    for _ in 0..k {
        let mut pts: Vec<i64> = (0..rng.gen_range(2..5))
            .map(|_| rng.gen_range(-6..7))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        while pts.len() < 2 {
            pts.push(pts.last().unwrap() + 1);
        }
        axes.push(pts.into_iter().map(|p| q(p, den)).collect());
    }
    // fill grid cells with random values, many of them zero
    let mut cells = Vec::new();
    let counts: Vec<usize> = axes.iter().map(|a| a.len() - 1).collect();
    let total: usize = counts.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut b = Vec::with_capacity(k);
        for (axis, cnt) in axes.iter().zip(&counts) {
            let i = rem % cnt;
            rem /= cnt;
            b.push((axis[i].clone(), axis[i + 1].clone()));
        }
        let v = rng.gen_range(0..5);
        if v > 0 {
            cells.push((b, q(v, [1i64, 2, 5][rng.gen_range(0..3)])));
        }
    }
    if cells.is_empty() {
        cells.push((
            (0..k).map(|_| (q(0, 1), q(1, 1))).collect(),
            Q::one(),
        ));
    }
    StepFunction::new(k, cells).expect("grid cells are disjoint")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn interval(lo: i64, hi: i64, v: i64) -> (Vec<(Q, Q)>, Q) {
        (vec![(q(lo, 1), q(hi, 1))], q(v, 1))
    }

    #[test]
    fn unit_interval_indicator() {
        // f = g = indicator of (-1,1), the unit ball in R¹ (ω_1 = 2)
        let f = StepFunction::new(1, vec![interval(-1, 1, 1)]).unwrap();
        let (lower, middle, upper) = hardy_littlewood_bounds(&f, &f);
        assert_eq!(middle, q(2, 1));
        assert_eq!(upper, q(2, 1));
        // increasing rearrangement vanishes on R¹: the lower bound is 0
        assert_eq!(lower, Q::zero());
    }

    #[test]
    fn disjoint_supports_zero_out_the_middle() {
        let f = StepFunction::new(1, vec![interval(-1, 1, 1)]).unwrap();
        // an annulus disjoint from (-1,1): two side intervals
        let g = StepFunction::new(1, vec![interval(-3, -1, 1), interval(1, 3, 1)]).unwrap();
        let (lower, middle, upper) = hardy_littlewood_bounds(&f, &g);
        assert_eq!(middle, Q::zero());
        assert_eq!(upper, q(2, 1)); // overlap of [0,2) and [0,4) runs
        assert_eq!(lower, Q::zero());
    }

    #[test]
    fn chain_holds_exactly_on_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for trial in 0..100 {
            let k = 1 + (trial % 2);
            let f = random_step_function(&mut rng, k);
            let g = random_step_function(&mut rng, k);
            let (lower, middle, upper) = hardy_littlewood_bounds(&f, &g);
            assert!(lower <= middle, "lower > middle at trial {trial}");
            assert!(middle <= upper, "middle > upper at trial {trial}");

            // independent oracle for the upper bound:
            // ∫ f* g* = Σ_layers δ_i δ'_j min(m_i, m'_j)
            let pf = f.decreasing_profile();
            let pg = g.decreasing_profile();
            let cum = |p: &[(Q, Q)]| -> Vec<(Q, Q)> {
                // (layer height over the next lower value, cumulative measure)
                let mut out = Vec::new();
                let mut m = Q::zero();
                for (i, (v, len)) in p.iter().enumerate() {
                    m += len.clone();
                    let lower_v = p.get(i + 1).map(|(v2, _)| v2.clone()).unwrap_or_else(Q::zero);
                    out.push((v - lower_v, m.clone()));
                }
                out
            };
            let mut oracle = Q::zero();
            for (df, mf) in cum(&pf) {
                for (dg, mg) in cum(&pg) {
                    oracle += &df * &dg * mf.clone().min(mg.clone());
                }
            }
            assert_eq!(upper, oracle, "upper bound oracle mismatch at trial {trial}");
        }
    }

    #[test]
    fn monotone_convergence_of_rearrangements() {
        // nested step functions g_j ↑ g imply (g_j)* ↑ g* pointwise
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let g = random_step_function(&mut rng, 1);
            let samples: Vec<Q> = (0..12).map(|i| q(i, 2)).collect();
            let mut prev: Option<Vec<Q>> = None;
            for j in 1..=g.cells.len() {
                let gj = StepFunction::new(1, g.cells[..j].to_vec()).unwrap();
                let vals: Vec<Q> = samples.iter().map(|t| gj.decreasing_value_at(t)).collect();
                if let Some(p) = &prev {
                    for (a, b) in p.iter().zip(&vals) {
                        assert!(a <= b, "rearrangements not monotone under g_j ↑ g");
                    }
                }
                prev = Some(vals);
            }
            let full: Vec<Q> = samples.iter().map(|t| g.decreasing_value_at(t)).collect();
            assert_eq!(prev.unwrap(), full);
        }
    }

    #[test]
    fn overlapping_cells_rejected() {
        let bad = StepFunction::new(1, vec![interval(0, 2, 1), interval(1, 3, 2)]);
        assert!(bad.is_err());
    }
}

//! Nonincreasing rearrangement of radial profiles with respect to the
//! hyperbolic measure `dv_H = dx/(1-|x|^2)^2`.
//!
//! In `t` the measure of the ball of radius `t` is `π sinh^2(t/2)`. The
//! distribution function is computed for a piecewise-linear approximation of
//! the interpolant (eight chords per cell, plus the recessive tail),
//! and `u_*(t_i)` is the level whose superlevel set has the measure of the
//! ball of radius `t_i`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial_core::RadialFunction;

/// `v_H(B_r) = π r^2/(1-r^2)`.
pub fn hyperbolic_ball_measure(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::OutOfRange(format!("r = {r} not in [0, 1)")));
    }
    Ok(PI * r * r / (1.0 - r * r))
}

/// `v_H` of the ball of hyperbolic radius `t`.
pub fn hyperbolic_ball_measure_t(t: f64) -> f64 {
    let s = (0.5 * t).sinh();
    PI * s * s
}

/// `v_H` of the shell `a < t < b`, without cancellation.
fn shell(a: f64, b: f64) -> f64 {
    PI * (0.5 * (b - a)).sinh() * (0.5 * (b + a)).sinh()
}

/// Distribution function sampled at the distinct sample values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetProfile {
    /// Decreasing levels `c`.
    pub thresholds: Vec<f64>,
    /// `v_H({u > c})`, nondecreasing.
    pub hyp_measures: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Linear { ta: f64, tb: f64, ua: f64, ub: f64 },
    /// `u0 e^{-(t-t0)/2}` on `(t0, inf)`.
    Tail { t0: f64, u0: f64 },
}

impl Piece {
    fn max(&self) -> f64 {
        match *self {
            Piece::Linear { ua, ub, .. } => ua.max(ub),
            Piece::Tail { u0, .. } => u0,
        }
    }

    fn min(&self) -> f64 {
        match *self {
            Piece::Linear { ua, ub, .. } => ua.min(ub),
            Piece::Tail { .. } => 0.0,
        }
    }

    /// `v_H({u > c})` within the piece.
    fn measure_above(&self, c: f64) -> f64 {
        match *self {
            Piece::Linear { ta, tb, ua, ub } => {
                if c >= ua.max(ub) {
                    0.0
                } else if c < ua.min(ub) || ua == ub {
                    shell(ta, tb)
                } else {
                    let tc = ta + (c - ua) / (ub - ua) * (tb - ta);
                    if ua > ub {
                        shell(ta, tc)
                    } else {
                        shell(tc, tb)
                    }
                }
            }
            Piece::Tail { t0, u0 } => {
                if c >= u0 {
                    0.0
                } else if c <= 0.0 {
                    f64::INFINITY
                } else {
                    shell(t0, t0 + 2.0 * (u0 / c).ln())
                }
            }
        }
    }
}

const SUBDIVISION: usize = 8;

fn pieces(u: &RadialFunction) -> Vec<Piece> {
    let t = u.grid().t();
    let s = u.samples();
    let n = t.len();
    let mut out = Vec::with_capacity(SUBDIVISION * n + 1);
    let mut push_cell = |ta: f64, tb: f64, ua: f64, ub: f64| {
        // chords of the cubic interpolant; node values are kept exactly
        let mut prev = (ta, ua);
        for k in 1..=SUBDIVISION {
            let x = ta + (tb - ta) * k as f64 / SUBDIVISION as f64;
            let v = if k == SUBDIVISION { ub } else { u.eval_t(x).max(0.0) };
            out.push(Piece::Linear { ta: prev.0, tb: x, ua: prev.1, ub: v });
            prev = (x, v);
        }
    };
    push_cell(0.0, t[0], u.at_origin().max(0.0), s[0]);
    for i in 0..n - 1 {
        push_cell(t[i], t[i + 1], s[i], s[i + 1]);
    }
    out.push(Piece::Tail { t0: t[n - 1], u0: s[n - 1] });
    out
}

/// Sweep over the distinct piece endpoint values, highest first.
struct Sweep {
    pieces: Vec<Piece>,
    levels: Vec<f64>,
    /// Pieces whose maximum is `levels[k]`.
    by_max: Vec<Vec<usize>>,
    /// Pieces whose minimum is `levels[k]`.
    by_min: Vec<Vec<usize>>,
}

/// State inside the open bracket `(levels[k], levels[k-1])`.
struct Bracket {
    k: usize,
    full: f64,
    active: Vec<usize>,
}

impl Sweep {
    fn new(pieces: Vec<Piece>) -> Self {
        let mut levels: Vec<f64> = pieces.iter().flat_map(|p| [p.max(), p.min()]).collect();
        levels.push(0.0);
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup();
        let pos = |v: f64| levels.partition_point(|&x| x > v);
        let mut by_max = vec![Vec::new(); levels.len()];
        let mut by_min = vec![Vec::new(); levels.len()];
        for (j, p) in pieces.iter().enumerate() {
            by_max[pos(p.max())].push(j);
            by_min[pos(p.min())].push(j);
        }
        Sweep { pieces, levels, by_max, by_min }
    }

    fn start(&self) -> Bracket {
        let mut b = Bracket { k: 0, full: 0.0, active: Vec::new() };
        self.advance(&mut b);
        b
    }

    /// Moves from bracket `k` to `k + 1`.
    fn advance(&self, b: &mut Bracket) {
        let k = b.k;
        for &j in &self.by_min[k] {
            b.full += full_measure(&self.pieces[j]);
        }
        b.active.retain(|&j| self.pieces[j].min() < self.levels[k]);
        for &j in &self.by_max[k] {
            if self.pieces[j].min() < self.levels[k] {
                b.active.push(j);
            }
        }
        b.k = k + 1;
    }

    /// Measure of `{u > c}` for `c` in the closure of the current bracket,
    /// with flat pieces at the upper level counted as full.
    fn eval(&self, b: &Bracket, c: f64) -> f64 {
        b.full + b.active.iter().map(|&j| self.pieces[j].measure_above(c)).sum::<f64>()
    }

    fn lower(&self, b: &Bracket) -> f64 {
        self.levels[b.k]
    }

    fn upper(&self, b: &Bracket) -> f64 {
        self.levels[b.k - 1]
    }

    fn done(&self, b: &Bracket) -> bool {
        b.k >= self.levels.len()
    }
}

fn full_measure(p: &Piece) -> f64 {
    match *p {
        Piece::Linear { ta, tb, .. } => shell(ta, tb),
        Piece::Tail { .. } => f64::INFINITY,
    }
}

fn check_nonnegative(u: &RadialFunction) -> Result<()> {
    match u.samples().iter().position(|&x| x < 0.0) {
        Some(node) => Err(Error::NegativeSample { node, value: u.samples()[node] }),
        None => Ok(()),
    }
}

/// Distribution function `c -> v_H({u > c})` at the distinct sample values.
pub fn level_set_profile(u: &RadialFunction) -> Result<LevelSetProfile> {
    check_nonnegative(u)?;
    let mut thresholds: Vec<f64> = u.samples().iter().copied().filter(|&x| x > 0.0).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let ps = pieces(u);
    let hyp_measures = thresholds
        .iter()
        .map(|&c| ps.iter().map(|p| p.measure_above(c)).sum())
        .collect();
    Ok(LevelSetProfile { thresholds, hyp_measures })
}

/// Nonincreasing rearrangement on the same grid.
pub fn rearrange(u: &RadialFunction) -> Result<RadialFunction> {
    check_nonnegative(u)?;
    if u.is_nonincreasing() {
        return Ok(u.clone());
    }
    let grid = u.grid();
    let sweep = Sweep::new(pieces(u));
    let mut b = sweep.start();
    let mut out = Vec::with_capacity(grid.n());
    for &t in grid.t() {
        let m = hyperbolic_ball_measure_t(t);
        while !sweep.done(&b) && sweep.eval(&b, sweep.lower(&b)) <= m {
            sweep.advance(&mut b);
        }
        if sweep.done(&b) {
            out.push(0.0);
            continue;
        }
        let (mut lo, mut hi) = (sweep.lower(&b), sweep.upper(&b));
        if m < sweep.eval(&b, hi) {
            out.push(hi);
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sweep.eval(&b, mid) > m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    RadialFunction::new(grid, out)
}

/// `∫ u^2 dv_H` over `t ≤ T_max`.
pub fn hyperbolic_l2(u: &RadialFunction) -> f64 {
    0.5 * PI * u.integrate(0.0, u.grid().t_max(), |t, w, _| t.sinh() * w * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::{hardy_functional, make_grid, Grading, RadialGrid};

    fn grid(n: usize) -> RadialGrid {
        make_grid(30.0, n, Grading::UniformT).unwrap()
    }

    #[test]
    fn ball_measure_closed_form() {
        assert_eq!(hyperbolic_ball_measure(0.0).unwrap(), 0.0);
        assert!((hyperbolic_ball_measure(0.5f64.sqrt()).unwrap() - PI).abs() < 1e-14);
        assert!(hyperbolic_ball_measure(1.0 - 1e-12).unwrap() > 1e11);
        assert!(hyperbolic_ball_measure(1.0).is_err());
        let t = 1.3f64;
        let r = (0.5 * t).tanh();
        assert!((hyperbolic_ball_measure(r).unwrap() - hyperbolic_ball_measure_t(t)).abs() < 1e-13);
    }

    #[test]
    fn monotone_input_is_returned_exactly() {
        let g = grid(256);
        let u = RadialFunction::from_r_fn(&g, |r| (1.0 - r * r).powi(2)).unwrap();
        assert_eq!(rearrange(&u).unwrap().samples(), u.samples());
        let z = RadialFunction::zero(&g);
        assert!(rearrange(&z).unwrap().samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn negative_samples_rejected() {
        let g = grid(64);
        let u = RadialFunction::from_r_fn(&g, |r| r - 0.5).unwrap();
        assert!(matches!(rearrange(&u), Err(Error::NegativeSample { node: 0, .. })));
    }

    #[test]
    fn two_bump_profile_is_equimeasurable() {
        let g = grid(4096);
        let bump = |r: f64, c: f64, w: f64| (-((r - c) / w).powi(2)).exp();
        let u = RadialFunction::from_r_fn(&g, |r| {
            (bump(r, 0.3, 0.08) + 0.6 * bump(r, 0.75, 0.05)) * (1.0 - r * r).powi(2)
        })
        .unwrap();
        let us = rearrange(&u).unwrap();
        assert!(us.is_nonincreasing());
        let (a, b) = (hyperbolic_l2(&u), hyperbolic_l2(&us));
        assert!((a - b).abs() <= 1e-4 * a, "{a} {b}");
        let (da, db) = (hardy_functional(&u).unwrap().dirichlet, hardy_functional(&us).unwrap().dirichlet);
        assert!(db <= da * 1.02);
    }

    #[test]
    fn level_sets_match_shifted_ball() {
        // u = 1 on t < 1, linear down to 0 at t = 2
        let g = grid(3000);
        let u = RadialFunction::from_t_fn(&g, |t| (2.0 - t).clamp(0.0, 1.0)).unwrap();
        let p = level_set_profile(&u).unwrap();
        assert!(p.hyp_measures.windows(2).all(|w| w[1] >= w[0]));
        for (c, m) in p.thresholds.iter().zip(&p.hyp_measures) {
            if *c < 0.999 {
                assert!((m - hyperbolic_ball_measure_t(2.0 - c)).abs() < 1e-9, "{c}");
            }
        }
    }
}

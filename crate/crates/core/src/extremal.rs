//! Subcritical maximisers of `∫_B e^{(4π-ε)u^2}` on `{H(u) = 1}`.
//!
//! The ascent works on node samples. Both constraint forms are quadratic, so
//! they are assembled once as band matrices from the grid's quadrature
//! tables; normalising to the unit sphere is then a scalar rescale.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{BandLu, BandMatrix};
use crate::radial_core::{area_weight, exp_moment, hardy_functional, RadialFunction, RadialGrid, WINDOW};
use crate::rearrange::rearrange;

pub const CRITICAL_ALPHA: f64 = 4.0 * PI;

/// Relative decrease of the functional still treated as "no decrease"; the
/// sums reach this level of rounding once the iterate is stationary.
const ROUNDOFF_SLACK: f64 = 1e-12;

/// Increases below this fraction of the peak are flattened instead of rearranged.
const MONOTONE_SLACK: f64 = 1e-8;

/// Which quadratic form defines the constraint sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `H(u) = 1`, free boundary value with recessive tail.
    Hardy,
    /// `‖∇u‖^2 = 1`, `ũ(T_max) = 0`.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `1 - r^2`
    Flat,
    /// truncated bubble `ln((1 + δ^{-2}) / (1 + r^2 δ^{-2}))`, δ = 0.1
    BubbleSeed,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub align_tol: f64,
    pub t_rel_tol: f64,
    pub window: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 200_000, align_tol: 1e-6, t_rel_tol: 1e-10, window: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct MaximizerResult {
    pub u: RadialFunction,
    pub lambda: f64,
    pub m: f64,
    pub t_value: f64,
    pub epsilon: f64,
    pub el_residual: f64,
    pub h_value: f64,
    pub mode: Mode,
    pub iterations: usize,
    pub converged: bool,
    /// Relative distance between the ascent direction and `u` in the constraint metric.
    pub alignment: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximizerReport {
    pub epsilon: f64,
    pub t_value: f64,
    pub lambda: f64,
    pub m: f64,
    pub h_value: f64,
    pub el_residual: f64,
    pub n: usize,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub mode: Mode,
    pub iterations: usize,
    pub converged: bool,
    pub alignment: f64,
}

impl MaximizerResult {
    pub fn alpha(&self) -> f64 {
        CRITICAL_ALPHA - self.epsilon
    }

    pub fn report(&self) -> MaximizerReport {
        MaximizerReport {
            epsilon: self.epsilon,
            t_value: self.t_value,
            lambda: self.lambda,
            m: self.m,
            h_value: self.h_value,
            el_residual: self.el_residual,
            n: self.u.grid().n(),
            t_max: self.u.grid().t_max(),
            mode: self.mode,
            iterations: self.iterations,
            converged: self.converged,
            alignment: self.alignment,
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.report()).map_err(|e| Error::Io(e.into()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.u.write_csv(w)
    }
}

/// Constraint form `u ↦ uᵀAu` on node samples, with its factorisation.
pub struct EnergyForm {
    grid: RadialGrid,
    mode: Mode,
    a: BandMatrix,
    lu: BandLu,
}

impl EnergyForm {
    pub fn new(grid: &RadialGrid, mode: Mode) -> Result<Self> {
        let n = grid.n();
        let last = n - 1;
        let mut a = BandMatrix::zeros(n, WINDOW - 1, WINDOW - 1);
        for q in grid.quad_points() {
            let sh = q.t.sinh();
            let et = (-q.t).exp();
            for j in 0..WINDOW {
                let gj = q.start + j;
                if gj >= n || (mode == Mode::Dirichlet && gj == last) {
                    continue;
                }
                for k in 0..WINDOW {
                    let gk = q.start + k;
                    if gk >= n || (mode == Mode::Dirichlet && gk == last) {
                        continue;
                    }
                    let v = match mode {
                        Mode::Hardy => {
                            let bj = q.der[j] + 0.5 * q.val[j];
                            let bk = q.der[k] + 0.5 * q.val[k];
                            PI * et * q.val[j] * q.val[k] + 2.0 * PI * sh * bj * bk
                        }
                        Mode::Dirichlet => 2.0 * PI * sh * q.der[j] * q.der[k],
                    };
                    if v != 0.0 {
                        a.add(gj, gk, q.w * v);
                    }
                }
            }
        }
        match mode {
            Mode::Hardy => a.add(last, last, 0.5 * PI * (-grid.t_max()).exp()),
            Mode::Dirichlet => a.add(last, last, 1.0),
        }
        let lu = a.clone().lu()?;
        Ok(EnergyForm { grid: grid.clone(), mode, a, lu })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `uᵀAu`, summed as nonnegative squares at the quadrature points; the
    /// band product loses digits to cancellation among the large tail entries.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let n = u.len();
        let mut s = 0.0;
        for q in self.grid.quad_points() {
            let mut uq = q.eval(u);
            if self.mode == Mode::Dirichlet && q.start + WINDOW >= n {
                let k = n - 1 - q.start;
                uq.0 -= q.val[k] * u[n - 1];
                uq.1 -= q.der[k] * u[n - 1];
            }
            let (v, d) = uq;
            s += q.w
                * match self.mode {
                    Mode::Hardy => {
                        let b = d + 0.5 * v;
                        PI * (-q.t).exp() * v * v + 2.0 * PI * q.t.sinh() * b * b
                    }
                    Mode::Dirichlet => 2.0 * PI * q.t.sinh() * d * d,
                };
        }
        let un = u[n - 1];
        s + match self.mode {
            Mode::Hardy => 0.5 * PI * (-self.grid.t_max()).exp() * un * un,
            Mode::Dirichlet => un * un,
        }
    }

    /// `‖g - μu‖_A / ‖g‖_A` with `Ag = grad` and `μ` the best multiple of `u`.
    ///
    /// Both factors of the inner product are formed by subtraction first, so
    /// there is no `1 - cos` cancellation near convergence.
    fn alignment(&self, u: &[f64], g: &[f64], grad: &[f64]) -> f64 {
        let au = self.a.mul_vec(u);
        let mu = dot(u, grad) / dot(u, &au);
        let dg: Vec<f64> = g.iter().zip(u).map(|(a, b)| a - mu * b).collect();
        let dr: Vec<f64> = grad.iter().zip(&au).map(|(a, b)| a - mu * b).collect();
        (dot(&dg, &dr).max(0.0) / dot(g, grad)).sqrt()
    }

    /// Rescales onto `{uᵀAu = 1}`.
    fn normalize(&self, u: &mut [f64]) {
        let e = self.energy(u);
        let c = 1.0 / e.sqrt();
        u.iter_mut().for_each(|x| *x *= c);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete `∫ e^{αu^2} dx` and its gradient in the samples.
struct Moments {
    t_value: f64,
    grad: Vec<f64>,
}

fn moments(grid: &RadialGrid, mode: Mode, alpha: f64, u: &[f64]) -> Moments {
    let n = grid.n();
    let mut grad = vec![0.0; n];
    let mut t_value = 0.0;
    for q in grid.quad_points() {
        let (v, _) = q.eval(u);
        let e = (alpha * v * v).exp();
        let w = q.w * area_weight(q.t);
        t_value += w * e;
        let c = w * 2.0 * alpha * v * e;
        for k in 0..WINDOW {
            if let Some(g) = grad.get_mut(q.start + k) {
                *g += c * q.val[k];
            }
        }
    }
    let t_max = grid.t_max();
    let ch = (0.5 * t_max).cosh();
    t_value += PI / (ch * ch);
    let un = u[n - 1];
    let et = (-t_max).exp();
    t_value += 2.0 * PI * alpha * un * un * et;
    grad[n - 1] += 4.0 * PI * alpha * un * et;
    if mode == Mode::Dirichlet {
        grad[n - 1] = 0.0;
    }
    Moments { t_value, grad }
}

fn initial_profile(grid: &RadialGrid, init: Init) -> Vec<f64> {
    match init {
        Init::Flat => grid.r().iter().map(|r| 1.0 - r * r).collect(),
        Init::BubbleSeed => {
            let d2 = 0.01f64;
            grid.r().iter().map(|r| ((1.0 + 1.0 / d2) / (1.0 + r * r / d2)).ln()).collect()
        }
    }
}

/// Admissible subcritical range for `mode`: `(0, 4π)` or `[0, 4π)`.
pub fn check_epsilon(epsilon: f64, mode: Mode) -> Result<()> {
    let ok = match mode {
        Mode::Hardy => epsilon > 0.0 && epsilon < CRITICAL_ALPHA,
        Mode::Dirichlet => epsilon >= 0.0 && epsilon < CRITICAL_ALPHA,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("epsilon = {epsilon} outside the admissible range for {mode:?}")))
    }
}

/// Monotone, nonnegative version of a candidate; pins the boundary in Dirichlet mode.
fn project_cone(grid: &RadialGrid, mode: Mode, mut u: Vec<f64>) -> Result<Vec<f64>> {
    u.iter_mut().for_each(|x| *x = x.max(0.0));
    if mode == Mode::Dirichlet {
        let last = u.len() - 1;
        u[last] = 0.0;
    }
    let top = u.iter().fold(0.0f64, |m, &x| m.max(x));
    let worst = u.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
    if worst <= 0.0 {
        return Ok(u);
    }
    if worst <= MONOTONE_SLACK * top {
        // the ascent direction is monotone up to discretisation wiggles; a
        // running minimum removes them without the sweep's quadrature error
        for i in 1..u.len() {
            u[i] = u[i].min(u[i - 1]);
        }
        return Ok(u);
    }
    let f = RadialFunction::new(grid, u)?;
    let mut out = rearrange(&f)?.into_samples();
    if mode == Mode::Dirichlet {
        let last = out.len() - 1;
        out[last] = 0.0;
    }
    Ok(out)
}

pub fn maximize_subcritical(epsilon: f64, grid: &RadialGrid, init: Init) -> Result<MaximizerResult> {
    let u0 = initial_profile(grid, init);
    maximize_from(epsilon, grid, Mode::Hardy, u0, SolverOptions::default())
}

pub fn dirichlet_mode_maximize(epsilon: f64, grid: &RadialGrid) -> Result<MaximizerResult> {
    let u0 = initial_profile(grid, Init::Flat);
    maximize_from(epsilon, grid, Mode::Dirichlet, u0, SolverOptions::default())
}

/// Ascent from the samples `u0` (any positive profile; it is projected first).
///
/// Each step moves towards `ĝ = A^{-1}∇F / ‖·‖_A` and renormalises; the step
/// `θ` is halved until the functional does not decrease and doubled back
/// towards 1 after success. `θ = 1` is the power step, which already ascends
/// because the functional is convex.
pub fn maximize_from(
    epsilon: f64,
    grid: &RadialGrid,
    mode: Mode,
    u0: Vec<f64>,
    opts: SolverOptions,
) -> Result<MaximizerResult> {
    check_epsilon(epsilon, mode)?;
    if u0.len() != grid.n() {
        return Err(Error::GridMismatch(format!("{} samples for {} nodes", u0.len(), grid.n())));
    }
    let alpha = CRITICAL_ALPHA - epsilon;
    let form = EnergyForm::new(grid, mode)?;
    let mut u = project_cone(grid, mode, u0)?;
    if u.iter().all(|&x| x == 0.0) {
        return Err(Error::OutOfRange("initial profile vanishes".into()));
    }
    form.normalize(&mut u);
    let mut mom = moments(grid, mode, alpha, &u);
    let mut history = VecDeque::with_capacity(opts.window + 1);
    history.push_back(mom.t_value);
    let mut theta = 1.0f64;
    let mut alignment = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let g = form.lu.solve(&mom.grad);
        let gnorm = dot(&g, &mom.grad).sqrt();
        alignment = form.alignment(&u, &g, &mom.grad);
        if alignment <= opts.align_tol && history.len() > opts.window {
            let old = history[0];
            if ((mom.t_value - old) / mom.t_value).abs() <= opts.t_rel_tol {
                converged = true;
                break;
            }
        }
        iterations += 1;
        let mut accepted = false;
        while theta >= 1e-12 {
            let cand: Vec<f64> = u.iter().zip(&g).map(|(a, b)| (1.0 - theta) * a + theta * b / gnorm).collect();
            let mut cand = project_cone(grid, mode, cand)?;
            form.normalize(&mut cand);
            let m = moments(grid, mode, alpha, &cand);
            if m.t_value.is_finite() && m.t_value >= mom.t_value * (1.0 - ROUNDOFF_SLACK) {
                u = cand;
                mom = m;
                theta = (2.0 * theta).min(1.0);
                accepted = true;
                break;
            }
            theta *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push_back(mom.t_value);
        if history.len() > opts.window + 1 {
            history.pop_front();
        }
    }
    finish(epsilon, grid, mode, u, iterations, converged, alignment)
}

fn finish(
    epsilon: f64,
    grid: &RadialGrid,
    mode: Mode,
    u: Vec<f64>,
    iterations: usize,
    converged: bool,
    alignment: f64,
) -> Result<MaximizerResult> {
    let alpha = CRITICAL_ALPHA - epsilon;
    let u = RadialFunction::new(grid, u)?;
    let dec = hardy_functional(&u)?;
    let h_value = match mode {
        Mode::Hardy => dec.h_value,
        Mode::Dirichlet => dec.dirichlet,
    };
    let t_value = exp_moment(&u, alpha)?;
    let lambda = h_value / weighted_mass(&u, alpha);
    let el_residual = el_residual(&u, lambda, alpha, mode);
    Ok(MaximizerResult {
        m: u.at_origin(),
        u,
        lambda,
        t_value,
        epsilon,
        el_residual,
        h_value,
        mode,
        iterations,
        converged,
        alignment,
    })
}

/// `∫_B u^2 e^{αu^2} dx`, including the recessive tail.
pub fn weighted_mass(u: &RadialFunction, alpha: f64) -> f64 {
    let t_max = u.grid().t_max();
    let un = u.boundary_sample();
    u.integrate(0.0, t_max, |t, w, _| area_weight(t) * w * w * (alpha * w * w).exp())
        + 2.0 * PI * un * un * (-t_max).exp()
}

/// `λ ∫ u^2 e^{αu^2} dx`, equal to `H(u) = 1` at a critical point.
pub fn lagrange_normalization(res: &MaximizerResult) -> f64 {
    res.lambda * weighted_mass(&res.u, res.alpha())
}

/// Residual of the Euler–Lagrange equation in flux form.
///
/// In `t` the equation `-Δu - a u = λ u e^{αu^2}` reads
/// `(sinh t ũ')' = -sinh t [κũ/4 + λũe^{αũ^2}/(4cosh^4(t/2))]`, so
/// `R(t) = sinh t ũ'(t) + ∫_0^t sinh s [...] ds` vanishes identically.
/// Returned is `max |R| e^{-t/2} / max |sinh t ũ'| e^{-t/2}` over the nodes;
/// the weight keeps the growing recessive flux from swamping the core.
pub fn el_residual(u: &RadialFunction, lambda: f64, alpha: f64, mode: Mode) -> f64 {
    let kappa = if mode == Mode::Hardy { 1.0 } else { 0.0 };
    let nodes = u.grid().t();
    let mut integral = 0.0;
    let mut prev = 0.0;
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for &t in nodes {
        u.for_each_point(prev, t, |s, w, v, _| {
            let c = (0.5 * s).cosh().powi(2);
            integral += w * s.sinh() * (0.25 * kappa * v + lambda * v * (alpha * v * v).exp() / (4.0 * c * c));
        });
        prev = t;
        let (_, du) = u.eval_with_slope(t);
        let flux = t.sinh() * du;
        let wt = (-0.5 * t).exp();
        worst = worst.max(((flux + integral) * wt).abs());
        scale = scale.max((flux * wt).abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// One row of a sweep; failures keep the message.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub result: std::result::Result<MaximizerResult, String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub epsilons: Vec<f64>,
    pub t_values: Vec<Option<f64>>,
    pub m_values: Vec<Option<f64>>,
    pub lambdas: Vec<Option<f64>>,
    pub lambda_m2: Vec<Option<f64>>,
    pub lambda_m2_gap: Vec<Option<f64>>,
    pub converged: Vec<bool>,
    pub failures: Vec<(f64, String)>,
    pub t_nondecreasing: bool,
}

impl SweepReport {
    pub fn results(&self) -> impl Iterator<Item = &MaximizerResult> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok())
    }

    /// `T` at the smallest successful ε: the running estimate of `T_0`.
    pub fn t0_estimate(&self) -> Option<f64> {
        self.results().last().map(|r| r.t_value)
    }

    /// True when `T_ε` does not drop (beyond 1e-6 relative) as ε decreases.
    pub fn t_nondecreasing(&self) -> bool {
        let t: Vec<f64> = self.results().map(|r| r.t_value).collect();
        t.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6))
    }

    pub fn summary(&self) -> SweepSummary {
        let pick = |f: &dyn Fn(&MaximizerResult) -> f64| -> Vec<Option<f64>> {
            self.entries.iter().map(|e| e.result.as_ref().ok().map(f)).collect()
        };
        SweepSummary {
            epsilons: self.entries.iter().map(|e| e.epsilon).collect(),
            t_values: pick(&|r| r.t_value),
            m_values: pick(&|r| r.m),
            lambdas: pick(&|r| r.lambda),
            lambda_m2: pick(&|r| r.lambda * r.m * r.m),
            lambda_m2_gap: pick(&|r| r.lambda * r.m * r.m * (r.t_value - PI)),
            converged: self.entries.iter().map(|e| e.result.as_ref().map(|r| r.converged).unwrap_or(false)).collect(),
            failures: self
                .entries
                .iter()
                .filter_map(|e| e.result.as_ref().err().map(|m| (e.epsilon, m.clone())))
                .collect(),
            t_nondecreasing: self.t_nondecreasing(),
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.summary()).map_err(|e| Error::Io(e.into()))
    }
}

/// Hardy-mode maximisers along decreasing `epsilons`, each warm-started from
/// the previous success.
pub fn sweep(epsilons: &[f64], grid: &RadialGrid) -> Result<SweepReport> {
    sweep_with(epsilons, grid, Mode::Hardy, SolverOptions::default())
}

pub fn sweep_with(epsilons: &[f64], grid: &RadialGrid, mode: Mode, opts: SolverOptions) -> Result<SweepReport> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::OutOfRange("epsilons must be strictly decreasing".into()));
    }
    let mut entries = Vec::with_capacity(epsilons.len());
    let mut seed = initial_profile(grid, Init::Flat);
    for &eps in epsilons {
        let result = maximize_from(eps, grid, mode, seed.clone(), opts).map_err(|e| e.to_string());
        if let Ok(r) = &result {
            seed = r.u.samples().to_vec();
        }
        entries.push(SweepEntry { epsilon: eps, result });
    }
    Ok(SweepReport { entries })
}

/// Solution of the radial Euler–Lagrange problem found by shooting.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootingResult {
    pub epsilon: f64,
    pub m: f64,
    pub lambda: f64,
    pub t_value: f64,
    pub h_value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Trajectory {
    /// Set when ũ reached zero before the end.
    crossed: bool,
    u_end: f64,
    du_end: f64,
    t_acc: f64,
    n_acc: f64,
}

const SHOOT_T_START: f64 = 1e-6;
const SHOOT_T_END: f64 = 40.0;

fn trajectory(m: f64, lambda: f64, alpha: f64, kappa: f64) -> Trajectory {
    // state (ũ, sinh t ũ', ∫ e^{αũ^2} dx, ∫ ũ^2 e^{αũ^2} dx)
    let rhs = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        let (u, p) = (y[0], y[1]);
        let sh = t.sinh();
        let c = (0.5 * t).cosh().powi(2);
        let e = (alpha * u * u).exp();
        let aw = area_weight(t);
        [p / sh, -sh * (0.25 * kappa * u + lambda * u * e / (4.0 * c * c)), aw * e, aw * u * u * e]
    };
    let t0 = SHOOT_T_START;
    let curv = -(0.25 * kappa * m + 0.25 * lambda * m * (alpha * m * m).exp()) / 4.0;
    let mut y = [m + curv * t0 * t0, t0.sinh() * 2.0 * curv * t0, 0.0, 0.0];
    // the disc t < t0 contributes π t0^2/4 of area to both moments
    let core = PI * t0 * t0 / 4.0 * (alpha * m * m).exp();
    y[2] = core;
    y[3] = core * m * m;
    let mut t = t0;
    let step = |t: f64, h: f64, y: &[f64; 4]| -> [f64; 4] {
        let add = |a: &[f64; 4], b: &[f64; 4], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]];
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, &add(y, &k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &add(y, &k2, 0.5 * h));
        let k4 = rhs(t + h, &add(y, &k3, h));
        let mut out = *y;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    };
    let n_log = 1200;
    let n_lin = 3000;
    let ratio = (1.0 / t0).powf(1.0 / n_log as f64);
    let h_lin = (SHOOT_T_END - 1.0) / n_lin as f64;
    for k in 0..n_log + n_lin {
        let h = if k < n_log { t * (ratio - 1.0) } else { h_lin };
        let next = step(t, h, &y);
        t += h;
        if next[0] <= 0.0 {
            return Trajectory { crossed: true, u_end: next[0], du_end: 0.0, t_acc: next[2], n_acc: next[3] };
        }
        y = next;
    }
    Trajectory { crossed: false, u_end: y[0], du_end: y[1] / t.sinh(), t_acc: y[2], n_acc: y[3] }
}

/// True when `λ` is above the admissible value for peak `m`.
fn overshoots(traj: &Trajectory, mode: Mode) -> bool {
    match mode {
        // recessive decay means v = e^{t/2}ũ levels off; growth means λ is too small
        Mode::Hardy => traj.crossed || traj.du_end + 0.5 * traj.u_end < 0.0,
        Mode::Dirichlet => traj.crossed,
    }
}

fn admissible_lambda(m: f64, alpha: f64, mode: Mode) -> Result<(f64, Trajectory)> {
    let kappa = if mode == Mode::Hardy { 1.0 } else { 0.0 };
    let (mut lo, mut hi) = (1e-10f64.ln(), 1e4f64.ln());
    if overshoots(&trajectory(m, lo.exp(), alpha, kappa), mode) || !overshoots(&trajectory(m, hi.exp(), alpha, kappa), mode) {
        return Err(Error::Bracket(format!("no admissible multiplier for peak {m}")));
    }
    for _ in 0..56 {
        let mid = 0.5 * (lo + hi);
        if overshoots(&trajectory(m, mid.exp(), alpha, kappa), mode) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = lo.exp();
    Ok((lambda, trajectory(m, lambda, alpha, kappa)))
}

/// Independent solver: shoot from `ũ(0) = M, ũ'(0) = 0`, tune λ for
/// admissible decay, then tune `M` to the first crossing of `H = λ∫u^2e^{αu^2} = 1`.
pub fn shoot_maximizer(epsilon: f64, mode: Mode) -> Result<ShootingResult> {
    check_epsilon(epsilon, mode)?;
    let alpha = CRITICAL_ALPHA - epsilon;
    let h_of = |m: f64| -> Result<(f64, f64, Trajectory)> {
        let (lambda, traj) = admissible_lambda(m, alpha, mode)?;
        Ok((lambda * traj.n_acc, lambda, traj))
    };
    let mut lo = 0.05;
    let (h_lo, _, _) = h_of(lo)?;
    if h_lo >= 1.0 {
        return Err(Error::Shooting("H above 1 already at the smallest peak".into()));
    }
    let mut hi = lo;
    loop {
        hi += 0.05;
        if hi > 5.0 {
            return Err(Error::Shooting("no H = 1 crossing for peaks up to 5".into()));
        }
        if h_of(hi)?.0 >= 1.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if h_of(mid)?.0 >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let m = 0.5 * (lo + hi);
    let (h_value, lambda, traj) = h_of(m)?;
    let ch = (0.5 * SHOOT_T_END).cosh();
    Ok(ShootingResult { epsilon, m, lambda, t_value: traj.t_acc + PI / (ch * ch), h_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::{make_grid, Grading};

    #[test]
    fn energy_form_matches_functional() {
        let g = make_grid(20.0, 512, Grading::UniformT).unwrap();
        let u = RadialFunction::from_r_fn(&g, |r| (1.0 - r * r) * (1.0 + r)).unwrap();
        let hardy = EnergyForm::new(&g, Mode::Hardy).unwrap();
        let h = hardy_functional(&u).unwrap();
        assert!((hardy.energy(u.samples()) - h.h_value).abs() < 1e-12 * h.h_value);
        let dir = EnergyForm::new(&g, Mode::Dirichlet).unwrap();
        let mut s = u.samples().to_vec();
        *s.last_mut().unwrap() = 0.0;
        let v = RadialFunction::new(&g, s.clone()).unwrap();
        let d = hardy_functional(&v).unwrap().dirichlet;
        assert!((dir.energy(&s) - d).abs() < 1e-12 * d);
    }

    #[test]
    fn moments_agree_with_exp_moment() {
        let g = make_grid(20.0, 512, Grading::UniformT).unwrap();
        let u = RadialFunction::from_r_fn(&g, |r| 0.7 * (1.0 - r * r)).unwrap();
        let m = moments(&g, Mode::Hardy, 10.0, u.samples());
        assert!((m.t_value - exp_moment(&u, 10.0).unwrap()).abs() < 1e-12 * m.t_value);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = make_grid(12.0, 64, Grading::UniformT).unwrap();
        let u: Vec<f64> = g.r().iter().map(|r| 0.8 * (1.0 - r * r)).collect();
        let m = moments(&g, Mode::Hardy, 9.0, &u);
        for &k in &[0usize, 7, 30, 63] {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += 1e-6;
            dn[k] -= 1e-6;
            let fd = (moments(&g, Mode::Hardy, 9.0, &up).t_value - moments(&g, Mode::Hardy, 9.0, &dn).t_value) / 2e-6;
            assert!((fd - m.grad[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{k}: {fd} vs {}", m.grad[k]);
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        let g = make_grid(12.0, 64, Grading::UniformT).unwrap();
        assert!(maximize_subcritical(0.0, &g, Init::Flat).is_err());
        assert!(maximize_subcritical(4.0 * PI, &g, Init::Flat).is_err());
        assert!(dirichlet_mode_maximize(-0.1, &g).is_err());
    }

    #[test]
    fn halved_multiplier_halves_normalization() {
        let g = make_grid(20.0, 1024, Grading::UniformT).unwrap();
        let mut res = maximize_subcritical(3.0 * PI, &g, Init::Flat).unwrap();
        assert!(res.converged);
        assert!((lagrange_normalization(&res) - 1.0).abs() < 1e-4);
        res.lambda *= 0.5;
        assert!((lagrange_normalization(&res) - 0.5).abs() < 1e-4);
    }

    fn bessel_j0(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            term *= -(0.25 * x * x) / (k * k) as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn flux_residual_vanishes_for_exact_solution() {
        // κ = 0, α = 0: -Δu = λu is solved by J0(√λ r)
        let g = make_grid(12.0, 1024, Grading::UniformT).unwrap();
        let u = RadialFunction::from_r_fn(&g, |r| bessel_j0(2.0 * r)).unwrap();
        let res = el_residual(&u, 4.0, 0.0, Mode::Dirichlet);
        assert!(res < 1e-8, "{res}");
        assert!(el_residual(&u, 3.0, 0.0, Mode::Dirichlet) > 1e-2);
    }
}

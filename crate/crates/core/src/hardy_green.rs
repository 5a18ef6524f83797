//! The Hardy operator `𝓛 = -Δ - (1-|x|^2)^{-2}` on radial functions: Green's
//! function with its constant `C_G`, a collocation solver for `𝓛v = f`, and
//! the Pohozaev and energy-split diagnostics.
//!
//! In `t` the homogeneous equation reads `(sinh t G')' + (sinh t/4) G = 0`.
//! It is integrated as the first-order system `G' = p/sinh t`,
//! `p' = -(sinh t/4) G` from `T_max` inward, starting on the recessive branch
//! `G ~ e^{-t/2}`, and scaled so that `p -> -1/(2π)` at the pole.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::quadrature::{GAUSS4_W, GAUSS4_X};
use crate::radial_core::{area_weight, hardy_functional, hermite, hermite_d, Grading, RadialFunction, RadialGrid};

/// Whether the singular potential is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    Hardy,
    /// Classical Laplacian, the control problem with Green's function `-ln r/2π`.
    Off,
}

impl Potential {
    fn kappa(self) -> f64 {
        match self {
            Potential::Hardy => 1.0,
            Potential::Off => 0.0,
        }
    }
}

/// Default extraction window `(r_lo, r_hi)`.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1e-4, 1e-2);

/// A fit whose residual exceeds this is flagged as unconverged.
pub const FIT_FLAG_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgFit {
    pub c_g: f64,
    pub fit_window: (f64, f64),
    /// Max deviation of `G(r) + ln r/2π` from `c_g` over the window samples.
    pub fit_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GreenFunction {
    grid: RadialGrid,
    potential: Potential,
    samples: Vec<f64>,
    flux: Vec<f64>,
    regular: Vec<f64>,
    regular_slope: Vec<f64>,
    ode_residual: f64,
    fit: CgFit,
}

const SUBSTEPS: usize = 4;

fn rhs(kappa: f64, t: f64, y: f64, p: f64) -> (f64, f64) {
    let s = t.sinh();
    (p / s, -0.25 * kappa * s * y)
}

/// Integrates inward over the grid with `m` RK4 substeps per cell. Returns
/// `(G, p)` at the nodes, normalised by the pole strength.
fn shoot(grid: &RadialGrid, potential: Potential, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = grid.t();
    let n = t.len();
    let kappa = potential.kappa();
    let t_max = grid.t_max();
    let (mut y, mut p) = match potential {
        Potential::Hardy => {
            let y = (-0.5 * t_max).exp();
            (y, -0.5 * t_max.sinh() * y)
        }
        Potential::Off => (-(0.5 * t_max).tanh().ln(), -1.0),
    };
    let mut ys = vec![0.0; n];
    let mut ps = vec![0.0; n];
    ys[n - 1] = y;
    ps[n - 1] = p;
    for i in (0..n - 1).rev() {
        let h = (t[i] - t[i + 1]) / m as f64;
        let mut x = t[i + 1];
        for _ in 0..m {
            let (k1y, k1p) = rhs(kappa, x, y, p);
            let (k2y, k2p) = rhs(kappa, x + 0.5 * h, y + 0.5 * h * k1y, p + 0.5 * h * k1p);
            let (k3y, k3p) = rhs(kappa, x + 0.5 * h, y + 0.5 * h * k2y, p + 0.5 * h * k2p);
            let (k4y, k4p) = rhs(kappa, x + h, y + h * k3y, p + h * k3p);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            x += h;
        }
        ys[i] = y;
        ps[i] = p;
    }
    if !(ps[0] < 0.0) || !ps[0].is_finite() {
        return Err(Error::Shooting(format!("flux at the pole is {} (expected negative)", ps[0])));
    }
    let scale = -1.0 / (2.0 * PI * ps[0]);
    ys.iter_mut().for_each(|v| *v *= scale);
    ps.iter_mut().for_each(|v| *v *= scale);
    Ok((ys, ps))
}

pub fn green_function(grid: &RadialGrid) -> Result<GreenFunction> {
    green_function_with(grid, Potential::Hardy)
}

/// Green's function with or without the potential term.
pub fn green_function_with(grid: &RadialGrid, potential: Potential) -> Result<GreenFunction> {
    if grid.grading() != Some(Grading::GeometricT) {
        return Err(Error::InvalidGrid("Green's function needs a geometric_t grid".into()));
    }
    if grid.t_max() < 30.0 {
        return Err(Error::InvalidGrid(format!("T_max = {} < 30", grid.t_max())));
    }
    let (coarse, _) = shoot(grid, potential, SUBSTEPS / 2)?;
    let (samples, flux) = shoot(grid, potential, SUBSTEPS)?;
    let t = grid.t();
    let ode_residual = (0..t.len())
        .map(|i| {
            let e = (0.5 * t[i]).exp();
            e * (coarse[i] - samples[i]).abs() / (e * samples[i].abs()).max(1.0)
        })
        .fold(0.0, f64::max);
    let regular = (0..t.len()).map(|i| samples[i] + (0.5 * t[i]).tanh().ln() / (2.0 * PI)).collect();
    let regular_slope =
        (0..t.len()).map(|i| (flux[i] + 1.0 / (2.0 * PI)) / grid.sinh_t()[i]).collect();
    let mut g = GreenFunction {
        grid: grid.clone(),
        potential,
        samples,
        flux,
        regular,
        regular_slope,
        ode_residual,
        fit: CgFit { c_g: f64::NAN, fit_window: DEFAULT_FIT_WINDOW, fit_residual: f64::NAN, converged: false },
    };
    g.fit = extract_cg_window(&g, DEFAULT_FIT_WINDOW.0, DEFAULT_FIT_WINDOW.1)?;
    Ok(g)
}

impl GreenFunction {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `sinh(t_i) G'(t_i)`.
    pub fn flux(&self) -> &[f64] {
        &self.flux
    }

    /// Step-doubling discrepancy in the scaled variable `e^{t/2} G`.
    pub fn ode_residual(&self) -> f64 {
        self.ode_residual
    }

    pub fn c_g(&self) -> f64 {
        self.fit.c_g
    }

    pub fn fit(&self) -> &CgFit {
        &self.fit
    }

    /// Regular part `Ḡ = G + ln(tanh(t/2))/2π = G(r) + ln r/2π` and its `t`-derivative.
    pub fn regular_t(&self, t: f64) -> (f64, f64) {
        let nodes = self.grid.t();
        let n = nodes.len();
        if t <= nodes[0] {
            return (self.regular[0], 0.0);
        }
        if t > nodes[n - 1] {
            let (g, dg) = self.eval_t(t);
            return (g + (0.5 * t).tanh().ln() / (2.0 * PI), dg + 1.0 / (2.0 * PI * t.sinh()));
        }
        let i = nodes.partition_point(|&x| x < t) - 1;
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        let s = (t - a) / h;
        let (h00, h10, h01, h11) = hermite(s);
        let (d00, d10, d01, d11) = hermite_d(s);
        let (ua, ub, ma, mb) = (self.regular[i], self.regular[i + 1], self.regular_slope[i], self.regular_slope[i + 1]);
        (
            h00 * ua + h10 * h * ma + h01 * ub + h11 * h * mb,
            (d00 * ua + d01 * ub) / h + d10 * ma + d11 * mb,
        )
    }

    /// `(G(t), G'(t))`.
    pub fn eval_t(&self, t: f64) -> (f64, f64) {
        let t_max = self.grid.t_max();
        if t > t_max {
            let n = self.samples.len();
            return match self.potential {
                Potential::Hardy => {
                    let g = self.samples[n - 1] * (-0.5 * (t - t_max)).exp();
                    (g, -0.5 * g)
                }
                Potential::Off => {
                    let c = -self.flux[n - 1];
                    (-c * (0.5 * t).tanh().ln(), -c / t.sinh())
                }
            };
        }
        let (rg, drg) = self.regular_t(t);
        (rg - (0.5 * t).tanh().ln() / (2.0 * PI), drg - 1.0 / (2.0 * PI * t.sinh()))
    }

    pub fn eval_r(&self, r: f64) -> f64 {
        self.eval_t(2.0 * r.atanh()).0
    }

    /// `∫_a^b f(t, G, G') dt`, four Gauss points per cell, `0 < a`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
        let nodes = self.grid.t();
        let mut edges: Vec<f64> = vec![a];
        edges.extend(nodes.iter().copied().filter(|&x| x > a && x < b));
        if b > self.grid.t_max() {
            // tail cells of unit length
            let mut x = self.grid.t_max();
            while x + 1.0 < b {
                x += 1.0;
                if x > a {
                    edges.push(x);
                }
            }
        }
        edges.push(b);
        let mut sum = 0.0;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let h = hi - lo;
            for k in 0..4 {
                let t = lo + 0.5 * h * (1.0 + GAUSS4_X[k]);
                let (g, dg) = self.eval_t(t);
                sum += 0.5 * h * GAUSS4_W[k] * f(t, g, dg);
            }
        }
        sum
    }

    /// `∫_B G^2 dx`.
    pub fn l2_norm_sq(&self) -> f64 {
        let t0 = self.grid.t()[0];
        self.integrate(t0, self.grid.t_max() + 40.0, |t, g, _| area_weight(t) * g * g)
    }

    /// Writes `t,G` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "G"])?;
        for (t, g) in self.grid.t().iter().zip(&self.samples) {
            wr.write_record([t.to_string(), g.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn report(&self) -> CgReport {
        CgReport {
            c_g: self.fit.c_g,
            fit_window: self.fit.fit_window,
            fit_residual: self.fit.fit_residual,
            n: self.grid.n(),
            t_max: self.grid.t_max(),
        }
    }
}

/// Extraction report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgReport {
    pub c_g: f64,
    pub fit_window: (f64, f64),
    pub fit_residual: f64,
    pub n: usize,
    #[serde(rename = "T_max")]
    pub t_max: f64,
}

pub fn extract_cg(g: &GreenFunction) -> f64 {
    g.fit.c_g
}

const FIT_POINTS: usize = 9;

/// Richardson extrapolation of `G(r) + ln r/2π` along a geometric sequence in
/// `[r_lo, r_hi]`, assuming an `r^2` leading correction.
pub fn extract_cg_window(g: &GreenFunction, r_lo: f64, r_hi: f64) -> Result<CgFit> {
    if !(r_lo > 0.0 && r_lo < r_hi && r_hi < 1.0) {
        return Err(Error::OutOfRange(format!("fit window ({r_lo}, {r_hi})")));
    }
    let t_lo = 2.0 * r_lo.atanh();
    if t_lo < 10.0 * g.grid.t()[0] {
        return Err(Error::OutOfRange(format!("fit window below grid resolution (r_lo = {r_lo})")));
    }
    let q = (r_lo / r_hi).powf(1.0 / (FIT_POINTS - 1) as f64);
    let rs: Vec<f64> = (0..FIT_POINTS).map(|k| r_hi * q.powi(k as i32)).collect();
    let fs: Vec<f64> = rs.iter().map(|&r| g.regular_t(2.0 * r.atanh()).0).collect();
    let q2 = q * q;
    let k = FIT_POINTS - 1;
    let c_g = (fs[k] - q2 * fs[k - 1]) / (1.0 - q2);
    let fit_residual = fs.iter().map(|f| (f - c_g).abs()).fold(0.0, f64::max);
    Ok(CgFit { c_g, fit_window: (r_lo, r_hi), fit_residual, converged: fit_residual <= FIT_FLAG_THRESHOLD })
}

/// `∫_{B_ρ} (1+r^2)/(1-r^2)^3 G^2 dx - πρ^2 G'(ρ)^2 - π a(ρ) ρ^2 G(ρ)^2 + 1/(4π)`,
/// with the `a`-terms dropped when the potential is off.
///
/// `(1+r^2)/(1-r^2)^3` is `div(a(x) x)/2` for `a = (1-|x|^2)^{-2}`: `div(a x) =
/// 2a + r a'(r)` and `r a' = 4r^2/(1-r^2)^3`. In `t` the volume term becomes
/// `(π/4) ∫ sinh(2s) G^2 ds`, `ρ G_r = sinh(t) G_t` and `a ρ^2 = sinh^2(t)/4`.
pub fn pohozaev_residual(g: &GreenFunction, rho: f64) -> Result<f64> {
    let t = rho_to_t(rho)?;
    let (gv, dg) = g.eval_t(t);
    let p = t.sinh() * dg;
    let boundary = PI * p * p;
    let rest = match g.potential {
        Potential::Hardy => {
            let vol = 0.25 * PI * g.integrate(g.grid.t()[0], t, |s, gs, _| (2.0 * s).sinh() * gs * gs);
            let sh = t.sinh();
            vol - 0.25 * PI * sh * sh * gv * gv
        }
        Potential::Off => 0.0,
    };
    Ok(rest - boundary + 1.0 / (4.0 * PI))
}

fn rho_to_t(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::OutOfRange(format!("rho = {rho} not in (0, 1)")));
    }
    Ok(2.0 * rho.atanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    pub j1: f64,
    pub j2: f64,
    pub e: f64,
}

/// `J1 = ∫_{B_ρ} a G^2`, `J2 = G(ρ)(∫_{B_ρ} a G + 1)`, `E = J2 - J1`.
pub fn energy_split_constants(g: &GreenFunction, rho: f64) -> Result<EnergySplit> {
    let t = rho_to_t(rho)?;
    let t0 = g.grid.t()[0];
    let j1 = 0.5 * PI * g.integrate(t0, t, |s, gs, _| s.sinh() * gs * gs);
    let ag = 0.5 * PI * g.integrate(t0, t, |s, gs, _| s.sinh() * gs);
    let j2 = g.eval_t(t).0 * (ag + 1.0);
    Ok(EnergySplit { j1, j2, e: j2 - j1 })
}

const BAND: usize = 5;

/// Solves `𝓛v = f` with the recessive condition `v' + v/2 = 0` at `T_max`.
///
/// Collocation of `-v'' - coth(t) v' - v/4 = f/(4 cosh^4(t/2))` with the
/// five-point stencils of the grid (even reflection through `t = 0`).
pub fn solve_radial(f: &RadialFunction) -> Result<RadialFunction> {
    solve_radial_with(f, Potential::Hardy).map(|(v, _)| v)
}

/// As [`solve_radial`]; also returns the max scaled row residual.
pub fn solve_radial_with(f: &RadialFunction, potential: Potential) -> Result<(RadialFunction, f64)> {
    let grid = f.grid();
    let n = grid.n();
    let t = grid.t();
    let kappa = potential.kappa();
    let mut a = BandMatrix::zeros(n, BAND, BAND);
    let mut b = vec![0.0; n];
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let st = grid.stencil(i);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(6);
        let mut put = |j: usize, v: f64| match row.iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 += v,
            None => row.push((j, v)),
        };
        let rhs;
        if i == n - 1 {
            for k in 0..5 {
                put(st.idx[k], st.d1[k]);
            }
            put(i, 0.5);
            rhs = 0.0;
        } else {
            let coth = 1.0 / t[i].tanh();
            for k in 0..5 {
                put(st.idx[k], -st.d2[k] - coth * st.d1[k]);
            }
            put(i, -0.25 * kappa);
            let c = (0.5 * t[i]).cosh();
            rhs = f.samples()[i] / (4.0 * c.powi(4));
        }
        let scale = 1.0 / row.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
        for &(j, v) in &row {
            a.add(i, j, v * scale);
        }
        b[i] = rhs * scale;
        rows.push(row.into_iter().map(|(j, v)| (j, v * scale)).collect());
    }
    let lu = a.lu()?;
    let v = lu.solve(&b);
    let residual = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let av: f64 = row.iter().map(|&(j, c)| c * v[j]).sum();
            let mag: f64 = row.iter().map(|&(j, c)| (c * v[j]).abs()).sum::<f64>() + b[i].abs();
            if mag == 0.0 {
                0.0
            } else {
                (av - b[i]).abs() / mag
            }
        })
        .fold(0.0, f64::max);
    Ok((RadialFunction::new(grid, v)?, residual))
}

/// `𝓛u` at the nodes, from the same stencils as [`solve_radial`].
pub fn apply_hardy_operator(u: &RadialFunction) -> Result<RadialFunction> {
    let grid = u.grid();
    let t = grid.t();
    let s = u.samples();
    let out = (0..grid.n())
        .map(|i| {
            let st = grid.stencil(i);
            let c = (0.5 * t[i]).cosh();
            4.0 * c.powi(4) * (-st.apply_d2(s) - st.apply_d1(s) / t[i].tanh() - 0.25 * s[i])
        })
        .collect();
    RadialFunction::non_admissible(grid, out)
}

/// `min H(u)/‖∇u‖^2` over nonzero profiles vanishing for `r ≥ 1/2`.
/// Returns `None` when every profile is zero.
pub fn coercivity_check(samples: &[RadialFunction]) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for u in samples {
        let grid = u.grid();
        if let Some(i) = grid.r().iter().zip(u.samples()).position(|(&r, &v)| r >= 0.5 && v != 0.0) {
            return Err(Error::OutOfRange(format!("profile nonzero at r = {} >= 1/2", grid.r()[i])));
        }
        let h = hardy_functional(u)?;
        if h.dirichlet == 0.0 {
            continue;
        }
        let ratio = h.h_value / h.dirichlet;
        best = Some(best.map_or(ratio, |b: f64| b.min(ratio)));
    }
    Ok(best)
}

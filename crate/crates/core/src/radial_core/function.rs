use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::quadrature::{GAUSS4_W, GAUSS4_X};

use super::grid::{hermite, hermite_d, Cell, RadialGrid};

/// Sampled radial profile `ũ(t_i) = u(tanh(t_i/2))`.
///
/// Between nodes the profile is the cubic Hermite interpolant with five-point
/// nodal slopes; on `[0, t_0]` it is the even quadratic matching value and
/// slope at `t_0`. Beyond `T_max` it continues as `ũ(T) e^{-(t-T)/2}`, the
/// recessive branch of the Hardy operator, so `v = e^{t/2}ũ` stays constant.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: RadialGrid,
    samples: Vec<f64>,
    slopes: Vec<f64>,
    admissible: bool,
}

impl RadialFunction {
    /// Admissible profile (declared to vanish as `t -> inf`).
    pub fn new(grid: &RadialGrid, samples: Vec<f64>) -> Result<Self> {
        Self::build(grid, samples, true)
    }

    /// Profile with the boundary flag unset.
    pub fn non_admissible(grid: &RadialGrid, samples: Vec<f64>) -> Result<Self> {
        Self::build(grid, samples, false)
    }

    fn build(grid: &RadialGrid, samples: Vec<f64>, admissible: bool) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::GridMismatch(format!("{} samples for {} nodes", samples.len(), grid.n())));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let slopes = (0..grid.n()).map(|i| grid.stencil(i).apply_d1(&samples)).collect();
        Ok(RadialFunction { grid: grid.clone(), samples, slopes, admissible })
    }

    pub fn zero(grid: &RadialGrid) -> Self {
        Self::new(grid, vec![0.0; grid.n()]).expect("zero profile")
    }

    /// Samples `f(t)` at the nodes.
    pub fn from_t_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.t().iter().map(|&t| f(t)).collect())
    }

    /// Samples `f(r)` at the nodes.
    pub fn from_r_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.r().iter().map(|&r| f(r)).collect())
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    /// Index of the first node followed by a strictly larger sample, if any.
    pub fn first_increase(&self) -> Option<usize> {
        self.samples.windows(2).position(|w| w[1] > w[0])
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.first_increase().is_none()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Value at the origin of the interpolant.
    pub fn at_origin(&self) -> f64 {
        self.eval_t(0.0)
    }

    /// Last sample `ũ(T_max)`.
    pub fn boundary_sample(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|x| *x *= c);
        out.slopes.iter_mut().for_each(|x| *x *= c);
        out
    }

    pub fn map_samples(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::build(&self.grid, self.samples.iter().map(|&x| f(x)).collect(), self.admissible)
    }

    pub fn eval_t(&self, t: f64) -> f64 {
        self.eval_with_slope(t).0
    }

    pub fn eval_r(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        self.eval_t(2.0 * r.atanh())
    }

    /// `v(t) = e^{t/2} ũ(t)`.
    pub fn v(&self, t: f64) -> f64 {
        (0.5 * t).exp() * self.eval_t(t)
    }

    /// Interpolant and its `t`-derivative.
    pub fn eval_with_slope(&self, t: f64) -> (f64, f64) {
        let t = t.abs();
        let nodes = self.grid.t();
        match self.grid.locate(t) {
            Cell::Inner => {
                let (t0, u0, s0) = (nodes[0], self.samples[0], self.slopes[0]);
                let b = s0 / (2.0 * t0);
                (u0 - 0.5 * s0 * t0 + b * t * t, 2.0 * b * t)
            }
            Cell::Segment(i) => self.hermite_on(i, t),
            Cell::Tail => {
                let u = self.boundary_sample() * (-0.5 * (t - self.grid.t_max())).exp();
                (u, -0.5 * u)
            }
        }
    }

    fn hermite_on(&self, i: usize, t: f64) -> (f64, f64) {
        let nodes = self.grid.t();
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        let s = (t - a) / h;
        let (h00, h10, h01, h11) = hermite(s);
        let (d00, d10, d01, d11) = hermite_d(s);
        let (ua, ub, ma, mb) = (self.samples[i], self.samples[i + 1], self.slopes[i], self.slopes[i + 1]);
        (
            h00 * ua + h10 * h * ma + h01 * ub + h11 * h * mb,
            (d00 * ua + d01 * ub) / h + d10 * ma + d11 * mb,
        )
    }

    /// `∫_a^b f(t, ũ, ũ') dt` over `[a, b] ⊂ [0, T_max]`, four Gauss points per cell.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
        let mut sum = 0.0;
        self.for_each_point(a, b, |t, w, u, du| sum += w * f(t, u, du));
        sum
    }

    /// Visits the Gauss points of `[a, b] ⊂ [0, T_max]` as `(t, weight, ũ, ũ')`.
    pub fn for_each_point(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64, f64, f64)) {
        let nodes = self.grid.t();
        let b = b.min(self.grid.t_max());
        if b <= a {
            return;
        }
        let mut cell = |lo: f64, hi: f64, eval: &dyn Fn(f64) -> (f64, f64)| {
            let (lo, hi) = (lo.max(a), hi.min(b));
            if hi <= lo {
                return;
            }
            let h = hi - lo;
            for k in 0..4 {
                let t = lo + 0.5 * h * (1.0 + GAUSS4_X[k]);
                let (u, du) = eval(t);
                f(t, 0.5 * h * GAUSS4_W[k], u, du);
            }
        };
        cell(0.0, nodes[0], &|t| self.eval_with_slope(t));
        let first = nodes.partition_point(|&x| x <= a).saturating_sub(1);
        for i in first..nodes.len() - 1 {
            if nodes[i] >= b {
                break;
            }
            cell(nodes[i], nodes[i + 1], &|t| self.hermite_on(i, t));
        }
    }

    /// Writes `t,value` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "value"])?;
        for (t, u) in self.grid.t().iter().zip(&self.samples) {
            wr.write_record([t.to_string(), u.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads `t,value` rows; the nodes become the grid. The result is admissible.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.len() != 2 || &header[0] != "t" || &header[1] != "value" {
            return Err(Error::Csv(format!("expected header t,value, found {:?}", header)));
        }
        let mut t = Vec::new();
        let mut u = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Csv(format!("{s:?}: {e}")));
            t.push(parse(&rec[0])?);
            u.push(parse(&rec[1])?);
        }
        let grid = RadialGrid::from_nodes(t)?;
        Self::new(&grid, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::{make_grid, Grading};

    #[test]
    fn interpolates_smooth_profile_to_high_order() {
        let g = make_grid(30.0, 4096, Grading::UniformT).unwrap();
        let f = |t: f64| 1.0 / (0.5 * t).cosh().powi(2);
        let u = RadialFunction::from_t_fn(&g, f).unwrap();
        let mut worst = 0.0f64;
        for k in 0..2000 {
            let t = 0.0001 + k as f64 * 0.0137;
            worst = worst.max((u.eval_t(t) - f(t)).abs());
        }
        assert!(worst < 1e-9, "{worst}");
        assert!((u.at_origin() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tail_is_recessive() {
        let g = make_grid(10.0, 64, Grading::UniformT).unwrap();
        let u = RadialFunction::from_t_fn(&g, |t| (-0.5 * t).exp()).unwrap();
        let t = 14.0;
        assert!((u.v(t) - u.v(10.0)).abs() < 1e-14);
        assert_eq!(u.eval_r(1.0), 0.0);
    }

    #[test]
    fn integrate_partial_range() {
        let g = make_grid(20.0, 512, Grading::GeometricT).unwrap();
        let u = RadialFunction::from_t_fn(&g, |t| t * t).unwrap();
        let s = u.integrate(0.3, 2.7, |_, u, _| u);
        assert!((s - (2.7f64.powi(3) - 0.3f64.powi(3)) / 3.0).abs() < 1e-10);
        let d = u.integrate(0.0, 1.5, |_, _, du| du);
        assert!((d - 2.25).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = make_grid(12.0, 32, Grading::GeometricT).unwrap();
        let u = RadialFunction::from_t_fn(&g, |t| (-t).exp() / 3.0).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,value\n"));
        assert!(text.lines().skip(1).all(|l| !l.contains('e')), "decimal notation expected");
        let back = RadialFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), u.samples());
        assert_eq!(back.grid().t(), g.t());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        assert!(RadialFunction::read_csv("x,y\n1,2\n".as_bytes()).is_err());
    }
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{fd_weights, GAUSS4_W, GAUSS4_X};

/// Node distribution in the hyperbolic coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    /// `t_i = i T/n`, `i = 1..=n`.
    UniformT,
    /// Geometric below `t = 1` down to [`GEOMETRIC_T_MIN`], uniform above, with
    /// a constant step in the stretched variable.
    GeometricT,
}

/// Smallest node of a geometric grid built by [`make_grid`].
pub const GEOMETRIC_T_MIN: f64 = 1e-14;

/// Number of samples a quadrature point depends on.
pub const WINDOW: usize = 6;

/// Five-point first and second derivative weights at one node.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [usize; 5],
    pub d1: [f64; 5],
    pub d2: [f64; 5],
}

impl Stencil {
    pub fn apply_d1(&self, u: &[f64]) -> f64 {
        (0..5).map(|k| self.d1[k] * u[self.idx[k]]).sum()
    }

    pub fn apply_d2(&self, u: &[f64]) -> f64 {
        (0..5).map(|k| self.d2[k] * u[self.idx[k]]).sum()
    }
}

/// A Gauss point of the composite rule on `[0, T_max]`, with the linear maps
/// from samples `u[start..start + WINDOW]` to the interpolant and its derivative.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub t: f64,
    pub w: f64,
    pub start: usize,
    pub val: [f64; WINDOW],
    pub der: [f64; WINDOW],
}

impl QuadPoint {
    pub fn eval(&self, u: &[f64]) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for k in 0..WINDOW {
            if let Some(x) = u.get(self.start + k) {
                v += self.val[k] * x;
                d += self.der[k] * x;
            }
        }
        (v, d)
    }
}

#[derive(Debug)]
struct GridData {
    t: Vec<f64>,
    r: Vec<f64>,
    sinh_t: Vec<f64>,
    grading: Option<Grading>,
    stencils: Vec<Stencil>,
    quad: Vec<QuadPoint>,
}

/// Nodes `0 < t_0 < ... < t_{n-1} = T_max` with `r = tanh(t/2)`.
///
/// Cheap to clone; the node data is shared.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    data: Arc<GridData>,
}

/// Position of a point relative to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cell {
    /// `[0, t_0]`
    Inner,
    /// `[t_i, t_{i+1}]`
    Segment(usize),
    /// `(T_max, inf)`
    Tail,
}

pub fn make_grid(t_max: f64, n: usize, grading: Grading) -> Result<RadialGrid> {
    RadialGrid::new(t_max, n, grading)
}

impl RadialGrid {
    pub fn new(t_max: f64, n: usize, grading: Grading) -> Result<Self> {
        match grading {
            Grading::UniformT => Self::check(t_max, n)
                .and_then(|_| Self::from_parts((1..=n).map(|i| t_max * i as f64 / n as f64).collect(), Some(grading))),
            Grading::GeometricT => Self::geometric(t_max, n, GEOMETRIC_T_MIN),
        }
    }

    /// Geometric grid with an explicit smallest node `t_min < 1`.
    pub fn geometric(t_max: f64, n: usize, t_min: f64) -> Result<Self> {
        Self::check(t_max, n)?;
        if !(t_min > 0.0 && t_min < 1.0) {
            return Err(Error::InvalidGrid(format!("t_min = {t_min} must lie in (0, 1)")));
        }
        let l1 = -t_min.ln();
        let total = l1 + t_max - 1.0;
        let mut t: Vec<f64> = (0..n)
            .map(|j| {
                let s = total * j as f64 / (n - 1) as f64;
                if s <= l1 {
                    t_min * s.exp()
                } else {
                    1.0 + (s - l1)
                }
            })
            .collect();
        t[n - 1] = t_max;
        Self::from_parts(t, Some(Grading::GeometricT))
    }

    /// Grid from explicit nodes, as read back from a CSV export.
    pub fn from_nodes(t: Vec<f64>) -> Result<Self> {
        if t.len() < 16 {
            return Err(Error::InvalidGrid(format!("n = {} < 16", t.len())));
        }
        Self::from_parts(t, None)
    }

    fn check(t_max: f64, n: usize) -> Result<()> {
        if n < 16 {
            return Err(Error::InvalidGrid(format!("n = {n} < 16")));
        }
        if !(t_max >= 10.0) || !t_max.is_finite() {
            return Err(Error::InvalidGrid(format!("T_max = {t_max} < 10")));
        }
        Ok(())
    }

    fn from_parts(t: Vec<f64>, grading: Option<Grading>) -> Result<Self> {
        if t[0] <= 0.0 || !t.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidGrid("nodes must be finite and positive".into()));
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!("nodes not increasing at {i}")));
        }
        let r: Vec<f64> = t.iter().map(|&x| (0.5 * x).tanh()).collect();
        let sinh_t = t.iter().map(|x| x.sinh()).collect();
        let stencils = build_stencils(&t);
        let quad = build_quadrature(&t, &stencils);
        Ok(RadialGrid { data: Arc::new(GridData { t, r, sinh_t, grading, stencils, quad }) })
    }

    pub fn n(&self) -> usize {
        self.data.t.len()
    }

    pub fn t(&self) -> &[f64] {
        &self.data.t
    }

    pub fn r(&self) -> &[f64] {
        &self.data.r
    }

    pub fn sinh_t(&self) -> &[f64] {
        &self.data.sinh_t
    }

    pub fn t_max(&self) -> f64 {
        self.data.t[self.n() - 1]
    }

    /// `None` for grids built from explicit nodes.
    pub fn grading(&self) -> Option<Grading> {
        self.data.grading
    }

    pub fn stencil(&self, i: usize) -> &Stencil {
        &self.data.stencils[i]
    }

    pub fn quad_points(&self) -> &[QuadPoint] {
        &self.data.quad
    }

    pub fn min_spacing(&self) -> f64 {
        let t = self.t();
        t.windows(2).map(|w| w[1] - w[0]).fold(t[0], f64::min)
    }

    /// Same grading and `T_max` with `n` replaced.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        match self.grading() {
            Some(g) => Self::new(self.t_max(), n, g),
            None => Err(Error::InvalidGrid("imported grid cannot be regenerated".into())),
        }
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        Arc::ptr_eq(&self.data, &other.data) || self.data.t == other.data.t
    }

    pub(crate) fn locate(&self, t: f64) -> Cell {
        let nodes = self.t();
        if t <= nodes[0] {
            Cell::Inner
        } else if t > self.t_max() {
            Cell::Tail
        } else {
            let i = nodes.partition_point(|&x| x < t);
            Cell::Segment(i - 1)
        }
    }
}

/// Node coordinate for a possibly reflected index: `j < 0` maps to `-t_{-j-1}`.
fn reflected(t: &[f64], j: isize) -> (f64, usize) {
    if j >= 0 {
        (t[j as usize], j as usize)
    } else {
        let k = (-j - 1) as usize;
        (-t[k], k)
    }
}

fn build_stencils(t: &[f64]) -> Vec<Stencil> {
    let n = t.len() as isize;
    (0..n)
        .map(|i| {
            // centred, reflected through t = 0 on the left, one-sided on the right
            let lo = (i - 2).min(n - 5);
            let mut xs = [0.0; 5];
            let mut idx = [0usize; 5];
            for m in 0..5 {
                let (x, k) = reflected(t, lo + m as isize);
                xs[m] = x;
                idx[m] = k;
            }
            let w = fd_weights(t[i as usize], &xs, 2);
            let mut d1 = [0.0; 5];
            let mut d2 = [0.0; 5];
            d1.copy_from_slice(&w[1]);
            d2.copy_from_slice(&w[2]);
            Stencil { idx, d1, d2 }
        })
        .collect()
}

/// Coefficients of (value, slope) at node `i` as sparse combinations of samples.
fn node_maps(stencils: &[Stencil], i: usize) -> ([(usize, f64); 1], [(usize, f64); 5]) {
    let s = &stencils[i];
    let mut slope = [(0usize, 0.0); 5];
    for k in 0..5 {
        slope[k] = (s.idx[k], s.d1[k]);
    }
    ([(i, 1.0)], slope)
}

fn build_quadrature(t: &[f64], stencils: &[Stencil]) -> Vec<QuadPoint> {
    let n = t.len();
    let mut out = Vec::with_capacity(4 * n);
    let mut push = |a: f64, b: f64, basis: &dyn Fn(f64) -> Vec<(usize, f64, f64)>| {
        let h = b - a;
        for k in 0..4 {
            let x = a + 0.5 * h * (1.0 + GAUSS4_X[k]);
            let terms = basis(x);
            let start = terms.iter().map(|e| e.0).min().unwrap();
            let mut val = [0.0; WINDOW];
            let mut der = [0.0; WINDOW];
            for (j, v, d) in terms {
                assert!(j - start < WINDOW, "stencil window too wide");
                val[j - start] += v;
                der[j - start] += d;
            }
            out.push(QuadPoint { t: x, w: 0.5 * h * GAUSS4_W[k], start, val, der });
        }
    };

    // inner cell: even quadratic a + b t^2 matching value and slope at t_0
    let t0 = t[0];
    push(0.0, t0, &|x| {
        let (v0, s0) = node_maps(stencils, 0);
        let mut terms = vec![(v0[0].0, 1.0, 0.0)];
        for (j, w) in s0 {
            // a = u0 - s0 t0/2, b = s0/(2 t0)
            terms.push((j, w * (x * x / (2.0 * t0) - 0.5 * t0), w * x / t0));
        }
        terms
    });

    for i in 0..n - 1 {
        let (a, b) = (t[i], t[i + 1]);
        push(a, b, &|x| {
            let h = b - a;
            let s = (x - a) / h;
            let (h00, h10, h01, h11) = hermite(s);
            let (d00, d10, d01, d11) = hermite_d(s);
            let (va, sa) = node_maps(stencils, i);
            let (vb, sb) = node_maps(stencils, i + 1);
            let mut terms = vec![(va[0].0, h00, d00 / h), (vb[0].0, h01, d01 / h)];
            for (j, w) in sa {
                terms.push((j, w * h10 * h, w * d10));
            }
            for (j, w) in sb {
                terms.push((j, w * h11 * h, w * d11));
            }
            terms
        });
    }
    out
}

pub(crate) fn hermite(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2)
}

pub(crate) fn hermite_d(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s)
}

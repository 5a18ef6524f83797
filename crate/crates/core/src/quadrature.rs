//! Gauss-Legendre rules and finite-difference weights on arbitrary nodes.

/// Four-point Gauss-Legendre nodes on [-1, 1].
pub const GAUSS4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];

/// Four-point Gauss-Legendre weights on [-1, 1].
pub const GAUSS4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Gauss-Legendre nodes and weights of order `n` on [-1, 1], by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite four-point Gauss rule with `panels` equal panels on [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for k in 0..4 {
            sum += GAUSS4_W[k] * f(mid + 0.5 * h * GAUSS4_X[k]);
        }
    }
    0.5 * h * sum
}

/// Fornberg weights: `w[d][j]` approximates the `d`-th derivative at `z` from
/// values at `x[j]`, for `d = 0..=m`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_matches_tabulated_four_point() {
        let (x, w) = gauss_legendre(4);
        for k in 0..4 {
            assert!((x[k] - GAUSS4_X[k]).abs() < 1e-15);
            assert!((w[k] - GAUSS4_W[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_rule_is_exact_for_high_degree() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_integrates_exponential() {
        let s = integrate(f64::exp, 0.0, 1.0, 8);
        assert!((s - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn fd_weights_differentiate_quartic_exactly() {
        let x = [-0.3, 0.1, 0.25, 0.7, 1.2];
        let w = fd_weights(0.2, &x, 2);
        let f = |t: f64| 1.0 + t - 2.0 * t * t + t.powi(3) - 0.5 * t.powi(4);
        let d1: f64 = (0..5).map(|j| w[1][j] * f(x[j])).sum();
        let d2: f64 = (0..5).map(|j| w[2][j] * f(x[j])).sum();
        let t = 0.2f64;
        assert!((d1 - (1.0 - 4.0 * t + 3.0 * t * t - 2.0 * t.powi(3))).abs() < 1e-12);
        assert!((d2 - (-4.0 + 6.0 * t - 6.0 * t * t)).abs() < 1e-11);
    }
}

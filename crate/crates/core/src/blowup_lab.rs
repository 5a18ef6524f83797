//! Bubble, rescaling diagnostics, the concentrating test family and the
//! certificates built from it.
//!
//! The test family glues a rescaled bubble to the Green's function:
//! `f_ε = β + (ξ(r/ε) + γ)/β` on `r ≤ εR` and `G(r)/β` outside, `R = -ln ε`.
//! Continuity fixes `β^2 + γ = G(εR) - ξ(R)`, so `βf_ε` does not depend on
//! `β` and the calibration `H(f_ε) = 1` is `β^2 = H(βf_ε)`.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::MaximizerResult;
use crate::hardy_green::{GreenFunction, Potential};
use crate::quadrature;
use crate::radial_core::{area_weight, hardy_functional, RadialFunction, RadialGrid};

/// `ξ(r) = -ln(1 + πr^2)/4π`, the radial solution of `-Δξ = e^{8πξ}` on the plane.
pub fn bubble_value(r: f64) -> f64 {
    -(PI * r * r).ln_1p() / (4.0 * PI)
}

/// `(ξ', ξ'')` in `r`.
pub fn bubble_derivatives(r: f64) -> (f64, f64) {
    let q = 1.0 + PI * r * r;
    (-0.5 * r / q, -0.5 * (1.0 - PI * r * r) / (q * q))
}

/// `-ξ'' - ξ'/r - e^{8πξ}` from the closed-form derivatives (`r > 0`).
pub fn bubble_pde_residual(r: f64) -> f64 {
    let (d1, d2) = bubble_derivatives(r);
    -d2 - d1 / r - (8.0 * PI * bubble_value(r)).exp()
}

/// `∫_{B_R} e^{8πξ} dx = 1 - 1/(1 + πR^2)`; `R = ∞` gives 1.
pub fn bubble_mass(radius: f64) -> f64 {
    if radius.is_infinite() {
        return 1.0;
    }
    let s = PI * radius * radius;
    s / (1.0 + s)
}

/// The same mass by composite Gauss quadrature of `2πr (1 + πr^2)^{-2}`.
pub fn bubble_mass_quadrature(radius: f64, panels: usize) -> f64 {
    quadrature::integrate(|r| 2.0 * PI * r / (1.0 + PI * r * r).powi(2), 0.0, radius, panels)
}

/// `∫_{B_R} |∇ξ|^2 dx = (ln(1+S) + 1/(1+S) - 1)/4π`, `S = πR^2`.
fn bubble_dirichlet(radius: f64) -> f64 {
    let s = PI * radius * radius;
    (s.ln_1p() + 1.0 / (1.0 + s) - 1.0) / (4.0 * PI)
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleReport {
    pub epsilon: f64,
    pub m: f64,
    /// `r_ε^2 = e^{(ε-4π)M^2}/(λM^2)`
    pub r_eps: f64,
    pub r_eps_m: f64,
    /// `sup_{|x| ≤ radius} |M(u(r_ε x) - M) - ξ(x)|`
    pub sup_distance: f64,
    pub radius: f64,
    /// Set when the rescaled profile is far from the bubble.
    pub no_blow_up: bool,
}

pub const RESCALE_RADIUS: f64 = 10.0;

pub fn rescale_diagnostics(res: &MaximizerResult) -> RescaleReport {
    rescale_diagnostics_on(&res.u, res.lambda, res.epsilon, RESCALE_RADIUS)
}

/// Rescaling of a profile with peak `M = u(0)` and multiplier `λ`.
pub fn rescale_diagnostics_on(u: &RadialFunction, lambda: f64, epsilon: f64, radius: f64) -> RescaleReport {
    let m = u.at_origin();
    let r_eps = (((epsilon - 4.0 * PI) * m * m).exp() / (lambda * m * m)).sqrt();
    let sup_distance = (0..=400)
        .map(|k| {
            let x = radius * k as f64 / 400.0;
            (m * (u.eval_r(r_eps * x) - m) - bubble_value(x)).abs()
        })
        .fold(0.0, f64::max);
    RescaleReport {
        epsilon,
        m,
        r_eps,
        r_eps_m: r_eps * m,
        sup_distance,
        radius,
        no_blow_up: sup_distance > 1.0 || r_eps * radius >= 1.0,
    }
}

/// `H(min(u, max u / L))`.
pub fn truncation_energy(u: &RadialFunction, level: f64) -> Result<f64> {
    if !(level > 1.0) {
        return Err(Error::OutOfRange(format!("L = {level} must exceed 1")));
    }
    if let Some(node) = u.first_increase() {
        return Err(Error::NotMonotone { node });
    }
    let cap = u.max_abs() / level;
    let cut = u.map_samples(|x| x.min(cap))?;
    Ok(hardy_functional(&cut)?.h_value)
}

/// `π(1 + e^{1 + 4πC_G})`.
pub fn upper_bound_reference(c_g: f64) -> f64 {
    PI * (1.0 + (1.0 + 4.0 * PI * c_g).exp())
}

/// The glued competitor `f_ε` for one ε.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub epsilon: f64,
    /// `εR_ε`
    pub r_switch: f64,
    pub beta: f64,
    pub gamma: f64,
    pub cg: f64,
    /// `f_ε` sampled on the Green's function grid with `t(εR)` inserted.
    pub profile: RadialFunction,
    green: GreenFunction,
    /// `G(εR) - ξ(R)`, the additive constant of `βf_ε` inside.
    shift: f64,
}

impl TestFamily {
    pub fn big_r(&self) -> f64 {
        -self.epsilon.ln()
    }

    fn t_switch(&self) -> f64 {
        2.0 * self.r_switch.atanh()
    }

    /// `f_ε(r)`.
    pub fn value(&self, r: f64) -> f64 {
        if r <= self.r_switch {
            (bubble_value(r / self.epsilon) + self.shift) / self.beta
        } else if r < 1.0 {
            self.green.eval_r(r) / self.beta
        } else {
            0.0
        }
    }

    /// `H(f_ε)` by quadrature of the closed-form core and the Green's function.
    pub fn h_value(&self) -> f64 {
        raw_h_scaled(&self.green, self.epsilon, self.shift) / (self.beta * self.beta)
    }

    /// `∫_B e^{αf_ε^2} dx`.
    pub fn exp_moment(&self, alpha: f64) -> f64 {
        let (eps, b2) = (self.epsilon, self.beta * self.beta);
        let big_r = self.big_r();
        let inner = quadrature::integrate(
            |rho| {
                let f = bubble_value(rho) + self.shift;
                2.0 * PI * eps * eps * rho * (alpha * f * f / b2).exp()
            },
            0.0,
            big_r,
            800,
        );
        let t_end = self.green.grid().t_max() + 40.0;
        let outer = self.green.integrate(self.t_switch(), t_end, |t, g, _| area_weight(t) * (alpha * g * g / b2).exp());
        let ch = (0.5 * t_end).cosh();
        inner + outer + PI / (ch * ch)
    }

    /// `4π(β^2 + γ) + 2 ln ε - 4πC_G - ln π`.
    pub fn fit_remainder(&self) -> f64 {
        4.0 * PI * (self.beta * self.beta + self.gamma) + 2.0 * self.epsilon.ln() - 4.0 * PI * self.cg - PI.ln()
    }
}

/// `H(βf_ε)`: raw split on the core plus the v-form outside, joined by the
/// boundary term `π F(t_s)^2 sinh t_s`.
fn raw_h_scaled(g: &GreenFunction, eps: f64, shift: f64) -> f64 {
    let big_r = -eps.ln();
    let r_s = eps * big_r;
    let t_s = 2.0 * r_s.atanh();
    let potential = quadrature::integrate(
        |rho| {
            let f = bubble_value(rho) + shift;
            let r = eps * rho;
            2.0 * PI * eps * eps * rho * f * f / (1.0 - r * r).powi(2)
        },
        0.0,
        big_r,
        400,
    );
    let inner = bubble_dirichlet(big_r) - potential;
    let f_s = bubble_value(big_r) + shift;
    let joint = PI * f_s * f_s * t_s.sinh();
    let t_end = g.grid().t_max() + 40.0;
    let outer = g.integrate(t_s, t_end, |t, gv, dg| {
        let b = dg + 0.5 * gv;
        PI * (-t).exp() * gv * gv + 2.0 * PI * b * b * t.sinh()
    });
    inner + joint + outer
}

pub fn make_test_family(epsilon: f64, g: &GreenFunction) -> Result<TestFamily> {
    if g.potential() != Potential::Hardy {
        return Err(Error::OutOfRange("test family needs the Hardy Green's function".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange(format!("epsilon = {epsilon} not in (0, 1)")));
    }
    let big_r = -epsilon.ln();
    let r_switch = epsilon * big_r;
    if r_switch >= 0.1 {
        return Err(Error::Bracket(format!("εR = {r_switch} ≥ 0.1; epsilon too large")));
    }
    let t_s = 2.0 * r_switch.atanh();
    if t_s <= g.grid().t()[0] {
        return Err(Error::OutOfRange(format!("εR = {r_switch} below the Green's function grid")));
    }
    let g_s = g.eval_t(t_s).0;
    let shift = g_s - bubble_value(big_r);
    let h = raw_h_scaled(g, epsilon, shift);
    if !(h > 0.0) {
        return Err(Error::Bracket(format!("H(βf_ε) = {h} is not positive")));
    }
    let beta = h.sqrt();
    let gamma = shift - h;

    let mut nodes: Vec<f64> = g.grid().t().iter().copied().filter(|&t| (t / t_s - 1.0).abs() > 1e-3).collect();
    let at = nodes.partition_point(|&t| t < t_s);
    nodes.insert(at, t_s);
    let grid = RadialGrid::from_nodes(nodes)?;
    let samples = grid
        .t()
        .iter()
        .map(|&t| {
            if t <= t_s {
                (bubble_value((0.5 * t).tanh() / epsilon) + shift) / beta
            } else {
                g.eval_t(t).0 / beta
            }
        })
        .collect();
    let profile = RadialFunction::new(&grid, samples)?;
    Ok(TestFamily { epsilon, r_switch, beta, gamma, cg: g.c_g(), profile, green: g.clone(), shift })
}

/// Default ladder for the lower-bound certificate.
pub const DEFAULT_CERT_EPSILONS: [f64; 7] = [1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub epsilon_ladder: Vec<f64>,
    #[serde(rename = "V_values")]
    pub v_values: Vec<f64>,
    pub theta: f64,
    pub c_g: f64,
    /// `V_ε - Θ`
    pub margins: Vec<f64>,
    pub beta_squared: Vec<f64>,
    /// `margin · β^2`, to compare with `4π ∫G^2`.
    pub margin_beta2: Vec<f64>,
    pub surplus_target: f64,
}

impl CertificateReport {
    pub fn max_v(&self) -> f64 {
        self.v_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max V_ε > Θ`
    pub fn certified(&self) -> bool {
        self.max_v() > self.theta
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Io(e.into()))
    }
}

pub fn lower_bound_certificate(epsilons: &[f64], g: &GreenFunction) -> Result<CertificateReport> {
    let c_g = g.c_g();
    let theta = upper_bound_reference(c_g);
    let mut v_values = Vec::with_capacity(epsilons.len());
    let mut beta_squared = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let fam = make_test_family(eps, g)?;
        v_values.push(fam.exp_moment(4.0 * PI));
        beta_squared.push(fam.beta * fam.beta);
    }
    let margins: Vec<f64> = v_values.iter().map(|v| v - theta).collect();
    let margin_beta2 = margins.iter().zip(&beta_squared).map(|(m, b)| m * b).collect();
    Ok(CertificateReport {
        epsilon_ladder: epsilons.to_vec(),
        v_values,
        theta,
        c_g,
        margins,
        beta_squared,
        margin_beta2,
        surplus_target: 4.0 * PI * g.l2_norm_sq(),
    })
}

/// One ladder of a sharpness witness.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessLadder {
    pub parameter: &'static str,
    pub knob: f64,
    pub steps: Vec<f64>,
    pub values: Vec<f64>,
}

impl WitnessLadder {
    pub fn strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }

    /// `last / first`
    pub fn growth(&self) -> f64 {
        self.values[self.values.len() - 1] / self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Writes `<parameter>,value` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([self.parameter, "value"])?;
        for (s, v) in self.steps.iter().zip(&self.values) {
            wr.write_record([s.to_string(), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub const DEFAULT_MOSER_EPSILONS: [f64; 5] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10];
pub const DEFAULT_HARDY_DELTAS: [f64; 9] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];

/// `∫ e^{αf_ε^2}` along the calibrated family for supercritical `α`.
pub fn moser_sharpness_witness(alpha: f64, epsilons: &[f64], g: &GreenFunction) -> Result<WitnessLadder> {
    if !(alpha > 4.0 * PI) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} is not supercritical")));
    }
    let values = epsilons
        .iter()
        .map(|&eps| make_test_family(eps, g).map(|f| f.exp_moment(alpha)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WitnessLadder { parameter: "epsilon", knob: alpha, steps: epsilons.to_vec(), values })
}

/// `u_δ(r) = min(1, (1-r)/δ) (1-r)^{1/2}`, written in `t` with `1 - r = 2/(1 + e^t)`.
pub fn hardy_witness_profile(grid: &RadialGrid, delta: f64) -> Result<RadialFunction> {
    RadialFunction::from_t_fn(grid, |t| {
        let s = 2.0 / (1.0 + t.exp());
        (s / delta).min(1.0) * s.sqrt()
    })
}

/// `‖∇u‖^2 - λ∫u^2 a dx` over `[0, T_max]`.
pub fn hardy_quadratic_form(u: &RadialFunction, lambda: f64) -> f64 {
    let t_max = u.grid().t_max();
    u.integrate(0.0, t_max, |t, v, dv| {
        let sh = t.sinh();
        2.0 * PI * sh * dv * dv - lambda * 0.5 * PI * sh * v * v
    })
}

/// `Q_δ` of the witness family by quadrature in `s = 1 - r` on logarithmic
/// panels split at the kink `s = δ`. Grid sampling converges only to first
/// order here (a cone at the origin and the kink), so the ladder uses this.
pub fn hardy_witness_value(lambda: f64, delta: f64) -> f64 {
    let density = |s: f64| {
        let (u, du) = if s < delta { (s.powf(1.5) / delta, 1.5 * s.sqrt() / delta) } else { (s.sqrt(), 0.5 / s.sqrt()) };
        let r = 1.0 - s;
        let a = 1.0 / (s * (2.0 - s)).powi(2);
        2.0 * PI * r * (du * du - lambda * u * u * a)
    };
    log_panels(&density, delta * 1e-15, delta) + log_panels(&density, delta, 1.0)
}

fn log_panels(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let panels = ((b / a).log10() * 40.0).ceil().max(1.0) as usize;
    let ratio = (b / a).powf(1.0 / panels as f64);
    let mut lo = a;
    let mut sum = 0.0;
    for k in 0..panels {
        let hi = if k + 1 == panels { b } else { lo * ratio };
        sum += quadrature::integrate(f, lo, hi, 1);
        lo = hi;
    }
    sum
}

pub fn hardy_sharpness_witness(lambda: f64, deltas: &[f64]) -> Result<WitnessLadder> {
    if !(lambda > 1.0) {
        return Err(Error::OutOfRange(format!("lambda = {lambda} must exceed the Hardy constant 1")));
    }
    Ok(hardy_ladder(lambda, deltas))
}

/// The `λ = 1` control ladder (bounded below by the Hardy inequality).
pub fn hardy_control_ladder(deltas: &[f64]) -> WitnessLadder {
    hardy_ladder(1.0, deltas)
}

fn hardy_ladder(lambda: f64, deltas: &[f64]) -> WitnessLadder {
    let values = deltas.iter().map(|&d| hardy_witness_value(lambda, d)).collect();
    WitnessLadder { parameter: "delta", knob: lambda, steps: deltas.to_vec(), values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy_green::green_function;
    use crate::radial_core::{exp_moment, make_grid, Grading};
    use std::sync::OnceLock;

    fn green() -> &'static GreenFunction {
        static G: OnceLock<GreenFunction> = OnceLock::new();
        G.get_or_init(|| green_function(&RadialGrid::geometric(30.0, 4096, 1e-14).unwrap()).unwrap())
    }

    #[test]
    fn bubble_closed_forms() {
        assert_eq!(bubble_value(0.0), 0.0);
        assert!((bubble_value(1.0) + (1.0 + PI).ln() / (4.0 * PI)).abs() < 1e-16);
        assert!((bubble_mass(1.0) - PI / (1.0 + PI)).abs() < 1e-15);
        assert_eq!(bubble_mass(f64::INFINITY), 1.0);
        for k in 1..=20 {
            let r = 0.37 * k as f64;
            assert!(bubble_pde_residual(r).abs() < 1e-10);
            // central differences of the closed form
            let h = 1e-4;
            let (d1, d2) = bubble_derivatives(r);
            let fd1 = (bubble_value(r + h) - bubble_value(r - h)) / (2.0 * h);
            let fd2 = (bubble_value(r + h) - 2.0 * bubble_value(r) + bubble_value(r - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-8 && (d2 - fd2).abs() < 1e-6);
        }
        assert!((bubble_mass_quadrature(10.0, 400) - bubble_mass(10.0)).abs() < 1e-10);
    }

    #[test]
    fn bubble_dirichlet_matches_quadrature() {
        let q = quadrature::integrate(|r| 2.0 * PI * r * bubble_derivatives(r).0.powi(2), 0.0, 7.0, 400);
        assert!((q - bubble_dirichlet(7.0)).abs() < 1e-12);
    }

    #[test]
    fn test_family_is_calibrated_and_continuous() {
        let g = green();
        let fam = make_test_family(1e-3, g).unwrap();
        assert!((fam.h_value() - 1.0).abs() < 1e-12);
        let rs = fam.r_switch;
        let inside = fam.beta + (bubble_value(rs / fam.epsilon) + fam.gamma) / fam.beta;
        let outside = g.eval_r(rs) / fam.beta;
        assert!((inside - outside).abs() < 1e-12 * outside);
        // the sampled profile reproduces the calibration
        let h = hardy_functional(&fam.profile).unwrap().h_value;
        assert!((h - 1.0).abs() < 1e-4, "{h}");
        let v = fam.exp_moment(4.0 * PI);
        let vp = exp_moment(&fam.profile, 4.0 * PI).unwrap();
        assert!((v - vp).abs() < 1e-4 * v, "{v} vs {vp}");
    }

    #[test]
    fn fit_remainder_decays_like_inverse_square() {
        let g = green();
        let eps = [1e-3, 1e-4, 1e-5];
        let rem: Vec<f64> = eps.iter().map(|&e| make_test_family(e, g).unwrap().fit_remainder()).collect();
        for (e, r) in eps.iter().zip(&rem) {
            let big_r = -e.ln();
            assert!(r.abs() <= 5.0 / (big_r * big_r), "{e}: {r}");
            let fam = make_test_family(*e, g).unwrap();
            assert!(4.0 * PI * fam.gamma >= 1.0 - 5.0 / (big_r * big_r));
        }
        // 1/(πR^2) is the leading remainder
        for (e, r) in eps.iter().zip(&rem) {
            let big_r = -e.ln();
            assert!((r * PI * big_r * big_r - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn rejects_large_epsilon() {
        assert!(make_test_family(0.05, green()).is_err());
    }

    #[test]
    fn witness_preconditions() {
        assert!(moser_sharpness_witness(4.0 * PI, &[1e-2], green()).is_err());
        assert!(hardy_sharpness_witness(1.0, &[1e-2]).is_err());
        let g = make_grid(30.0, 256, Grading::UniformT).unwrap();
        assert_eq!(hardy_quadratic_form(&RadialFunction::zero(&g), 1.5), 0.0);
    }

    #[test]
    fn grid_sampled_witness_approaches_quadrature() {
        let (lambda, delta) = (1.5, 1e-3);
        let exact = hardy_witness_value(lambda, delta);
        let mut errs = Vec::new();
        for n in [4096, 16384] {
            let grid = make_grid(40.0, n, Grading::UniformT).unwrap();
            let q = hardy_quadratic_form(&hardy_witness_profile(&grid, delta).unwrap(), lambda);
            errs.push((q - exact).abs() / exact.abs());
        }
        assert!(errs[0] < 0.025 && errs[1] < 0.005, "{errs:?}");
    }

    #[test]
    fn hardy_witness_value_closed_form_check() {
        // λ = 0, δ → large fraction: ‖∇u‖^2 of u = (1-r)^{1/2} diverges like
        // (π/2) ln(1/δ); compare the increments between two cutoffs
        let d = hardy_witness_value(0.0, 1e-6) - hardy_witness_value(0.0, 1e-4);
        assert!((d - 0.5 * PI * 100f64.ln()).abs() < 1e-3, "{d}");
        assert!(hardy_witness_value(1.0, 1e-8) > 0.0);
    }

    #[test]
    fn truncation_energy_limits() {
        let g = make_grid(20.0, 1024, Grading::UniformT).unwrap();
        let u = RadialFunction::from_r_fn(&g, |r| 1.0 - r * r).unwrap();
        let h = hardy_functional(&u).unwrap().h_value;
        assert!((truncation_energy(&u, 1.0 + 1e-9).unwrap() - h).abs() < 1e-6);
        assert!(truncation_energy(&u, 1.0).is_err());
        assert_eq!(truncation_energy(&RadialFunction::zero(&g), 2.0).unwrap(), 0.0);
        assert!(truncation_energy(&u, 4.0).unwrap() < h);
    }

    #[test]
    fn rescaling_recovers_exact_bubble() {
        // u = M + ξ(r/ρ)/M with λ chosen so that r_ε = ρ
        let (m, rho, eps) = (3.0, 1e-3, 0.5);
        let grid = RadialGrid::geometric(30.0, 4096, 1e-14).unwrap();
        let u = RadialFunction::from_r_fn(&grid, |r| m + bubble_value(r / rho) / m).unwrap();
        let lambda = ((eps - 4.0 * PI) * m * m).exp() / (rho * rho * m * m);
        let rep = rescale_diagnostics_on(&u, lambda, eps, 10.0);
        assert!((rep.r_eps - rho).abs() < 1e-10 * rho);
        assert!(rep.sup_distance < 1e-6, "{}", rep.sup_distance);
        assert!(!rep.no_blow_up);
        let flat = RadialFunction::from_r_fn(&grid, |r| 0.5 * (1.0 - r * r)).unwrap();
        assert!(rescale_diagnostics_on(&flat, 1.0, eps, 10.0).no_blow_up);
    }

    #[test]
    fn upper_bound_reference_values() {
        assert!((upper_bound_reference(0.0) - PI * (1.0 + 1f64.exp())).abs() < 1e-12);
        let theta = upper_bound_reference(2f64.ln() / PI);
        assert!((theta - PI * (1.0 + 16.0 * 1f64.exp())).abs() < 1e-10);
    }
}

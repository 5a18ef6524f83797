use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

use super::function::RadialFunction;

/// Raw and v-form pieces of the Hardy functional.
///
/// `dirichlet` and `potential` are integrated over `[0, T_max]`; the recessive
/// tail makes each of them diverge beyond `T_max` while their difference
/// converges, so the exact remainder `π e^{T} ũ(T)^2 / 2` is kept in
/// `boundary_tail`. For profiles vanishing at `T_max` it is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyDecomposition {
    pub dirichlet: f64,
    pub potential: f64,
    pub boundary_tail: f64,
    /// `vform_a + vform_b`.
    pub h_value: f64,
    /// `2π ∫ ½ e^{-2s} v^2 ds`
    pub vform_a: f64,
    /// `2π ∫ e^{-s} v'^2 sinh(s) ds`
    pub vform_b: f64,
}

impl HardyDecomposition {
    /// `dirichlet - potential + boundary_tail`, the cross-check of `h_value`.
    pub fn raw_h(&self) -> f64 {
        self.dirichlet - self.potential + self.boundary_tail
    }
}

fn require_admissible(u: &RadialFunction) -> Result<()> {
    if u.is_admissible() {
        Ok(())
    } else {
        Err(Error::NotAdmissible)
    }
}

fn require_monotone(u: &RadialFunction) -> Result<()> {
    match u.first_increase() {
        None => Ok(()),
        Some(node) => Err(Error::NotMonotone { node }),
    }
}

fn radius_to_t(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!("r = {r} not in (0, 1)")));
    }
    Ok(2.0 * r.atanh())
}

pub fn hardy_functional(u: &RadialFunction) -> Result<HardyDecomposition> {
    require_admissible(u)?;
    let (mut d, mut p, mut a, mut b) = (0.0, 0.0, 0.0, 0.0);
    let t_max = u.grid().t_max();
    u.for_each_point(0.0, t_max, |t, wt, w, dw| {
        let sh = wt * t.sinh();
        d += sh * dw * dw;
        p += sh * w * w;
        a += wt * (-t).exp() * w * w;
        let q = dw + 0.5 * w;
        b += sh * q * q;
    });
    let un = u.boundary_sample();
    let tail_a = 0.5 * PI * (-t_max).exp() * un * un;
    let vform_a = PI * a + tail_a;
    let vform_b = 2.0 * PI * b;
    Ok(HardyDecomposition {
        dirichlet: 2.0 * PI * d,
        potential: 0.5 * PI * p,
        boundary_tail: 0.5 * PI * t_max.exp() * un * un,
        h_value: vform_a + vform_b,
        vform_a,
        vform_b,
    })
}

/// `H` restricted to `{|x| > r}`, in the cancellation-free form
/// `π ũ(t)^2 sinh t + π ∫_t^∞ e^{-s} ũ^2 + 2π ∫_t^∞ (ũ' + ũ/2)^2 sinh s`.
pub fn annulus_hardy(u: &RadialFunction, r: f64) -> Result<f64> {
    let t = radius_to_t(r)?;
    Ok(annulus_hardy_t(u, t))
}

pub(crate) fn annulus_hardy_t(u: &RadialFunction, t: f64) -> f64 {
    let t_max = u.grid().t_max();
    let un = u.boundary_sample();
    let ut = u.eval_t(t);
    let boundary = PI * ut * ut * t.sinh();
    if t >= t_max {
        // inside the tail ũ = un e^{-(s-T)/2}, v' = 0
        return boundary + 0.5 * PI * un * un * (t_max - 2.0 * t).exp();
    }
    let inner = u.integrate(t, t_max, |s, w, dw| {
        let q = dw + 0.5 * w;
        (-s).exp() * w * w + 2.0 * s.sinh() * q * q
    });
    boundary + PI * inner + 0.5 * PI * (-t_max).exp() * un * un
}

/// Result of [`exp_moment_guarded`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMoment {
    /// `∫_B e^{α u^2} dx`; may be `inf` when `ln_value > 709`.
    pub value: f64,
    pub ln_value: f64,
    /// Set when `α max u^2 > 700` and the sum was accumulated in log space.
    pub log_scaled: bool,
}

/// Area element of the disc in `t`: `2πr dr = π tanh(t/2) sech^2(t/2) dt`.
pub fn area_weight(t: f64) -> f64 {
    let c = (0.5 * t).cosh();
    PI * (0.5 * t).tanh() / (c * c)
}

pub fn exp_moment(u: &RadialFunction, alpha: f64) -> Result<f64> {
    exp_moment_guarded(u, alpha).map(|m| m.value)
}

pub fn exp_moment_guarded(u: &RadialFunction, alpha: f64) -> Result<ExpMoment> {
    if !(alpha >= 0.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} < 0")));
    }
    let t_max = u.grid().t_max();
    let un = u.boundary_sample();
    let c = (0.5 * t_max).cosh();
    // area beyond T_max plus the first-order correction from the tail of u
    let tail = PI / (c * c) + 2.0 * PI * alpha * un * un * (-t_max).exp();
    let peak = alpha * u.max_abs().powi(2);
    if peak <= 700.0 {
        let s = u.integrate(0.0, t_max, |t, w, _| area_weight(t) * (alpha * w * w).exp());
        let value = s + tail;
        return Ok(ExpMoment { value, ln_value: value.ln(), log_scaled: false });
    }
    let shifted = u.integrate(0.0, t_max, |t, w, _| area_weight(t) * (alpha * w * w - peak).exp());
    let ln_value = peak + (shifted + tail * (-peak).exp()).ln();
    Ok(ExpMoment { value: ln_value.exp(), ln_value, log_scaled: true })
}

/// `A_u(r) = (πr^2)^{-1} ∫_{B_r} u^2/(1-|x|^2)^2 dx`.
pub fn potential_average(u: &RadialFunction, r: f64) -> Result<f64> {
    let t = radius_to_t(r)?;
    let s = u.integrate(0.0, t, |s, w, _| s.sinh() * w * w) + tail_sinh_u2(u, t);
    Ok(s / (2.0 * r * r))
}

/// `∫_{T_max}^{t} sinh(s) ũ^2 ds` over the part of `[0, t]` beyond the grid.
fn tail_sinh_u2(u: &RadialFunction, t: f64) -> f64 {
    let t_max = u.grid().t_max();
    if t <= t_max {
        return 0.0;
    }
    let un = u.boundary_sample();
    // sinh(s) e^{-(s-T)} integrated in closed form
    let f = |s: f64| 0.5 * s + 0.25 * (-2.0 * s).exp();
    un * un * t_max.exp() * (f(t) - f(t_max))
}

/// `(u(r)^2, (1-r^2)/(2πr) H_{B_r^c}(u))` for nonincreasing admissible `u`.
pub fn boundary_decay_bound(u: &RadialFunction, r: f64) -> Result<(f64, f64)> {
    require_admissible(u)?;
    require_monotone(u)?;
    if r == 1.0 {
        return Ok((0.0, 0.0));
    }
    let t = radius_to_t(r)?;
    let ur = u.eval_t(t);
    let rhs = (1.0 - r * r) / (2.0 * PI * r) * annulus_hardy_t(u, t);
    Ok((ur * ur, rhs))
}

/// `(π(1/2 - r^2) A_u(r), H(u) + π u(r)^2/(1-r^2))` for nonincreasing admissible `u`.
pub fn lem_a_check(u: &RadialFunction, r: f64) -> Result<(f64, f64)> {
    require_admissible(u)?;
    require_monotone(u)?;
    let t = radius_to_t(r)?;
    let lhs = PI * (0.5 - r * r) * potential_average(u, r)?;
    let ur = u.eval_t(t);
    let rhs = hardy_functional(u)?.h_value + PI * ur * ur / (1.0 - r * r);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::radial_core::{make_grid, Grading, RadialGrid};

    fn grid() -> RadialGrid {
        make_grid(30.0, 4096, Grading::UniformT).unwrap()
    }

    fn parabola(g: &RadialGrid) -> RadialFunction {
        RadialFunction::from_r_fn(g, |r| 1.0 - r * r).unwrap()
    }

    #[test]
    fn zero_function() {
        let g = grid();
        let z = RadialFunction::zero(&g);
        let h = hardy_functional(&z).unwrap();
        assert_eq!(h.h_value, 0.0);
        assert_eq!(h.dirichlet, 0.0);
        assert!((exp_moment(&z, 4.0 * PI).unwrap() - PI).abs() < 1e-12);
        assert!((exp_moment(&z, 0.0).unwrap() - PI).abs() < 1e-12);
        assert_eq!(annulus_hardy(&z, 0.5).unwrap(), 0.0);
        assert_eq!(potential_average(&z, 0.5).unwrap(), 0.0);
        assert_eq!(boundary_decay_bound(&z, 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(lem_a_check(&z, 0.5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn parabola_energies() {
        let u = parabola(&grid());
        let h = hardy_functional(&u).unwrap();
        assert!((h.dirichlet - 2.0 * PI).abs() < 1e-9);
        assert!((h.potential - PI).abs() < 1e-9);
        assert!((h.h_value - PI).abs() < 1e-9);
        assert!((h.raw_h() - h.h_value).abs() < 1e-9);
        assert!(h.vform_a > 0.0 && h.vform_b > 0.0);
    }

    #[test]
    fn refinement_changes_h_by_less_than_tolerance() {
        let h1 = hardy_functional(&parabola(&make_grid(30.0, 2048, Grading::UniformT).unwrap())).unwrap();
        let h2 = hardy_functional(&parabola(&grid())).unwrap();
        assert!((h1.h_value - h2.h_value).abs() <= 1e-6 * PI);
    }

    #[test]
    fn annulus_matches_direct_quadrature() {
        let u = parabola(&grid());
        // ∫_{1/2<|x|<1} (4r^2 - 1) dx in r
        let direct = integrate(|r| (4.0 * r * r - 1.0) * 2.0 * PI * r, 0.5, 1.0, 64);
        assert!((annulus_hardy(&u, 0.5).unwrap() - direct).abs() < 1e-6);
        assert!((direct - 2.0 * PI * 0.5625).abs() < 1e-12);
    }

    #[test]
    fn annulus_tends_to_h_at_origin() {
        let u = parabola(&grid());
        let h = hardy_functional(&u).unwrap().h_value;
        assert!((annulus_hardy(&u, 1e-7).unwrap() - h).abs() < 1e-8);
        assert!(annulus_hardy(&u, 0.0).is_err());
        assert!(annulus_hardy(&u, 1.0).is_err());
    }

    #[test]
    fn exp_moment_matches_r_quadrature() {
        let u = parabola(&grid());
        let oracle = integrate(|r| (1.0 - r * r).powi(2).exp() * 2.0 * PI * r, 0.0, 1.0, 200);
        assert!((exp_moment(&u, 1.0).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn exp_moment_log_accumulation() {
        let g = grid();
        let u = RadialFunction::from_r_fn(&g, |r| 10.0 * (1.0 - r * r)).unwrap();
        let m = exp_moment_guarded(&u, 8.0).unwrap();
        assert!(m.log_scaled);
        // ∫ e^{800(1-r^2)^2} 2πr dr, dominated near r = 0
        let oracle = integrate(|r| (800.0 * (1.0 - r * r).powi(2) - 800.0).exp() * 2.0 * PI * r, 0.0, 1.0, 400);
        assert!((m.ln_value - (800.0 + oracle.ln())).abs() < 1e-6);
        assert!(m.value.is_infinite());
    }

    #[test]
    fn potential_average_of_constant_core() {
        let g = grid();
        let u = RadialFunction::from_r_fn(&g, |r| if r < 0.5 { 2.0 } else { 2.0 * (1.0 - r) / 0.5 }).unwrap();
        let r = 0.3;
        let a = potential_average(&u, r).unwrap();
        assert!((a - 4.0 / (1.0 - r * r)).abs() < 1e-9);
    }

    #[test]
    fn decay_bound_parabola() {
        let u = parabola(&grid());
        let (lhs, rhs) = boundary_decay_bound(&u, 0.5).unwrap();
        assert!((lhs - 0.5625).abs() < 1e-12);
        assert!(lhs <= rhs + 1e-8);
        assert_eq!(boundary_decay_bound(&u, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn lem_a_parabola_and_vanishing_coefficient() {
        let u = parabola(&grid());
        let (lhs, rhs) = lem_a_check(&u, 0.25).unwrap();
        // A_u(1/4) from the r-form ∫_0^{1/4} (1-s^2)^2/(1-s^2)^2 2πs ds/(π/16) = 1
        assert!((lhs - PI * (0.5 - 0.0625)).abs() < 1e-9);
        assert!(lhs <= rhs);
        let (l2, _) = lem_a_check(&u, 0.5f64.sqrt()).unwrap();
        assert!(l2.abs() < 1e-12);
    }

    #[test]
    fn non_admissible_and_non_monotone_rejected() {
        let g = grid();
        let u = RadialFunction::non_admissible(&g, vec![1.0; g.n()]).unwrap();
        assert!(matches!(hardy_functional(&u), Err(Error::NotAdmissible)));
        let bump = RadialFunction::from_r_fn(&g, |r| r * (1.0 - r)).unwrap();
        assert!(matches!(boundary_decay_bound(&bump, 0.5), Err(Error::NotMonotone { .. })));
        assert!(matches!(lem_a_check(&bump, 0.5), Err(Error::NotMonotone { .. })));
    }
}

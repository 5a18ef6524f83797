use proptest::prelude::*;

use hmt_core::profiles::ProfileSampler;
use hmt_core::rearrange::{hyperbolic_l2, rearrange};
use hmt_core::{boundary_decay_bound, exp_moment, hardy_functional, lem_a_check, make_grid, Grading, RadialGrid};

fn grid() -> RadialGrid {
    make_grid(30.0, 1024, Grading::UniformT).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hardy_vform_nonnegative_and_equal_to_raw(seed in any::<u64>(), bumpy in any::<bool>()) {
        let g = grid();
        let mut s = ProfileSampler::new(seed);
        let u = if bumpy { s.bumpy(&g) } else { s.monotone(&g) }.unwrap();
        let h = hardy_functional(&u).unwrap();
        prop_assert!(h.vform_a >= 0.0 && h.vform_b >= 0.0 && h.h_value > 0.0);
        prop_assert!((h.raw_h() - h.h_value).abs() <= 1e-9 * (1.0 + h.dirichlet));
    }

    #[test]
    fn monotone_profiles_obey_pointwise_bounds(seed in any::<u64>(), r in 0.05f64..0.95) {
        let g = grid();
        let u = ProfileSampler::new(seed).monotone(&g).unwrap();
        let (l, rhs) = boundary_decay_bound(&u, r).unwrap();
        prop_assert!(l <= rhs + 1e-8, "boundary decay {} > {}", l, rhs);
        let (l, rhs) = lem_a_check(&u, r).unwrap();
        prop_assert!(l <= rhs + 1e-8, "potential average {} > {}", l, rhs);
    }

    #[test]
    fn rearrangement_is_equimeasurable_and_monotone(seed in any::<u64>()) {
        let g = grid();
        let u = ProfileSampler::new(seed).bumpy(&g).unwrap();
        let v = rearrange(&u).unwrap();
        prop_assert!(v.is_nonincreasing());
        let (a, b) = (hyperbolic_l2(&u), hyperbolic_l2(&v));
        prop_assert!((a - b).abs() <= 1e-3 * (1.0 + a), "{} vs {}", a, b);
        // the interpolant may overshoot the largest sample slightly between nodes
        prop_assert!(v.at_origin() <= 1.01 * u.max_abs());
    }

    #[test]
    fn rearrangement_fixes_monotone_profiles(seed in any::<u64>()) {
        let g = grid();
        let u = ProfileSampler::new(seed).monotone(&g).unwrap();
        let v = rearrange(&u).unwrap();
        for (x, y) in u.samples().iter().zip(v.samples()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn exp_moment_bounded_below_and_raised_by_rearrangement(seed in any::<u64>(), alpha in 0.0f64..12.0) {
        let g = grid();
        let u = ProfileSampler::new(seed).bumpy(&g).unwrap();
        let m = exp_moment(&u, alpha).unwrap();
        prop_assert!(m >= std::f64::consts::PI * (1.0 - 1e-12));
        let ms = exp_moment(&rearrange(&u).unwrap(), alpha).unwrap();
        prop_assert!(ms >= m - 1e-4 * m, "{} < {}", ms, m);
    }
}

//! Geometry and the integral inequality of the slice covering.

use blowup_core::covering::{
    check_inclusions, cover_constant, cover_slice, cover_violations, sandwich_violations, t_star,
    verify_cover_inequality, CoverOptions, SpaceTimeField,
};
use proptest::prelude::*;

#[test]
fn inclusions_hold_on_ten_thousand_points() {
    for dim in [1, 2] {
        let r = check_inclusions(&vec![0.3; dim], 2.0, 0.5, 0.5, 10_000, 7).unwrap();
        assert!(r.passed, "dim {dim}: {r:?}");
        assert!(r.details["points"] >= 10_000.0);
    }
}

#[test]
fn moving_gaussian_satisfies_the_inequality() {
    let (t0, t1, delta0) = (1.0, 0.0, 0.5);
    let rim = (t0 - t1) / delta0;
    let f = |x: &[f64], t: f64| (-(x[0] - 0.4 * t).powi(2) / 0.1).exp() / (1.2 - t);
    let field = SpaceTimeField::sample(f, vec![-rim - 0.1], vec![rim + 0.1], (t1, t0), 400, 200).unwrap();
    let r = verify_cover_inequality(&field, 1.0, 2.0, &[0.0], t0, t1, delta0, &CoverOptions::default()).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.lhs > 0.0);
}

#[test]
fn uncovered_domain_is_rejected() {
    let field = SpaceTimeField::sample(|_, _| 1.0, vec![-0.5], vec![0.5], (0.0, 1.0), 10, 10).unwrap();
    assert!(verify_cover_inequality(&field, 1.0, 1.0, &[0.0], 1.0, 0.0, 0.5, &CoverOptions::default()).is_err());
}

#[test]
fn constant_uses_lattice_count() {
    // 17 lattice points in 1D at δ0 = 1/2
    let c = cover_constant(1, 0.5, 0.0);
    assert_eq!(c, 17.0);
    let c1 = cover_constant(1, 0.5, 1.0);
    assert!((c1 - 17.0 * 10f64.exp() / 0.5).abs() < 1e-6 * c1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cover_count_is_scale_invariant(delta0 in 0.05f64..0.95, scale in 0.01f64..100.0, dim in 1usize..=2) {
        let x0 = vec![0.0; dim];
        let unit = cover_slice(&x0, 1.0, 0.0, delta0).unwrap();
        let scaled = cover_slice(&x0, scale, 0.0, delta0).unwrap();
        prop_assert_eq!(unit.k, scaled.k);
        prop_assert!((scaled.spacing / unit.spacing - scale).abs() <= 1e-12 * scale);
    }

    #[test]
    fn cover_contains_parent_slice(delta0 in 0.1f64..0.9, x in -1.0f64..1.0, seed in any::<u64>()) {
        let (t0, t1) = (2.0, 0.5);
        let rim = (t0 - t1) / delta0;
        let xs = [x * rim];
        let ts = t_star(&xs, &[0.0], t0, t1, delta0).unwrap();
        prop_assume!(ts - t1 > 1e-6);
        let cover = cover_slice(&xs, ts, t1, delta0).unwrap();
        prop_assert_eq!(cover_violations(&cover, 2_000, seed), 0);
        prop_assert_eq!(sandwich_violations(&cover, &[0.0], t0, t1, delta0, 16).unwrap(), 0);
    }

    #[test]
    fn t_star_is_a_cone(delta0 in 0.05f64..0.95, x in -1.0f64..1.0) {
        let (t0, t1) = (3.0, 1.0);
        let rim = (t0 - t1) / delta0;
        let v = t_star(&[x * rim], &[0.0], t0, t1, delta0).unwrap();
        prop_assert!((v - (t0 - delta0 * (x * rim).abs())).abs() < 1e-12);
        prop_assert!(v >= t1 - 1e-12 && v <= t0);
    }
}

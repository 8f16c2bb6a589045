//! Invariants checked over random inputs.

use std::sync::Arc;

use blowup_core::fields::{cell_centres, Grid, RadialSnapshot};
use blowup_core::functionals::{hardy_gap, jensen_gap};
use blowup_core::params::{alpha_exponent, critical_exponent, Damping, Forcing, ModelParams};
use blowup_core::quadrature::trapezoid;
use blowup_core::similarity::{from_similarity, to_similarity};
use proptest::prelude::*;

/// Even polynomial `Σ c_k y^{2k}` and its derivative on the cell centres.
fn even_poly(coeffs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = ys
        .iter()
        .map(|&y| coeffs.iter().enumerate().map(|(k, c)| c * y.powi(2 * k as i32)).sum())
        .collect();
    let wy = ys
        .iter()
        .map(|&y| {
            coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * 2.0 * k as f64 * y.powi(2 * k as i32 - 1))
                .sum()
        })
        .collect();
    (w, wy)
}

fn perturbed(m: f64, q: f64, damping: Damping) -> ModelParams {
    ModelParams::critical(3)
        .unwrap()
        .with_perturbation(m, q, Forcing::Power, damping)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_vanishes_at_critical_exponent(dim in 2usize..=10) {
        let p = critical_exponent(dim).unwrap();
        prop_assert_eq!(alpha_exponent(dim, p).unwrap(), 0.0);
        let params = ModelParams::critical(dim).unwrap();
        prop_assert_eq!(params.alpha(), 0.0);
    }

    #[test]
    fn perturbations_obey_growth_bounds(
        m in 0.0f64..1.0,
        q in 1.01f64..2.99,
        x in -1e3f64..1e3,
        linear in any::<bool>(),
        softening in 0.0f64..3.0,
    ) {
        let damping = if linear { Damping::Linear { softening } } else { Damping::Sine };
        let params = perturbed(m, q, damping);
        let slack = 1e-12 * (1.0 + x.abs().powf(q));
        prop_assert!(params.perturbation_f(x).abs() <= m * (1.0 + x.abs().powf(q)) + slack);
        prop_assert!(params.perturbation_g(x).abs() <= m * (1.0 + x.abs()) + 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn antiderivative_matches_trapezoid(m in 0.01f64..1.0, q in 1.01f64..2.99, u in -3.0f64..3.0) {
        let params = perturbed(m, q, Damping::Sine);
        let n = 20_000;
        let xs: Vec<f64> = (0..=n).map(|k| u * k as f64 / n as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| params.perturbation_f(x)).collect();
        let quad = trapezoid(&xs, &fs);
        let exact = params.perturbation_F(u);
        prop_assert!((quad - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "{quad} vs {exact}");
    }

    #[test]
    fn hardy_gap_is_nonnegative(
        coeffs in prop::collection::vec(-2.0f64..2.0, 1..5),
        eta in 0.05f64..0.95,
        dim in 2usize..=5,
    ) {
        let ys = cell_centres(2048);
        let (w, wy) = even_poly(&coeffs, &ys);
        let gap = hardy_gap(&ys, &w, &wy, eta, dim).unwrap();
        let scale: f64 = w.iter().map(|v| v * v).sum::<f64>() / ys.len() as f64;
        prop_assert!(gap >= -1e-6 * (1.0 + scale), "gap {gap}");
    }

    #[test]
    fn jensen_gap_is_nonnegative(
        w in prop::collection::vec(-20.0f64..20.0, 8..64),
        eta in 0.05f64..0.95,
        c_j in 0.01f64..10.0,
        dim in 2usize..=5,
    ) {
        let ys = cell_centres(w.len());
        let p = critical_exponent(dim).unwrap();
        prop_assert!(jensen_gap(&ys, &w, eta, p, c_j, dim).unwrap() >= -1e-9);
    }

    #[test]
    fn similarity_round_trip(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
        vel in prop::collection::vec(-1.0f64..1.0, 1..4),
        t in 0.0f64..0.8,
    ) {
        let params = ModelParams::critical(3).unwrap();
        let grid = Arc::new(Grid::radial(1.5, 600).unwrap());
        let xs = grid.coords();
        let (u, _) = even_poly(&coeffs, &xs);
        let (ut, _) = even_poly(&vel, &xs);
        let snap = RadialSnapshot::new(grid.clone(), u, ut, t).unwrap();
        let wst = to_similarity(&snap, &params, 0.0, 1.0, 128).unwrap();
        let back = from_similarity(&wst, &params).unwrap();
        prop_assert!((back.t - t).abs() <= 1e-12);
        for (j, x) in back.grid.coords().into_iter().enumerate() {
            let u_ref = grid.interpolate(&snap.u, x).unwrap();
            let ut_ref = grid.interpolate(&snap.ut, x).unwrap();
            prop_assert!((back.u[j] - u_ref).abs() <= 1e-10 * (1.0 + u_ref.abs()));
            prop_assert!((back.ut[j] - ut_ref).abs() <= 1e-9 * (1.0 + ut_ref.abs()));
        }
    }

    #[test]
    fn even_data_gives_flat_centre(coeffs in prop::collection::vec(-1.0f64..1.0, 1..4)) {
        // radial data is even in x, so w_y vanishes at the centre to O(dy)
        let params = ModelParams::critical(3).unwrap();
        let grid = Arc::new(Grid::radial(1.5, 600).unwrap());
        let (u, _) = even_poly(&coeffs, &grid.coords());
        let n = u.len();
        let snap = RadialSnapshot::new(grid, u, vec![0.0; n], 0.0).unwrap();
        let wst = to_similarity(&snap, &params, 0.0, 1.0, 256).unwrap();
        let bound: f64 = 10.0 * coeffs.iter().map(|c| c.abs()).sum::<f64>() * wst.dy();
        prop_assert!(wst.wy[0].abs() <= bound, "w_y(0) = {}", wst.wy[0]);
    }
}

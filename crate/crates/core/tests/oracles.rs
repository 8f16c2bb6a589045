//! Closed-form oracles: the ODE blow-up solution, its similarity profile and the
//! functional values of constant fields.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use blowup_core::fields::{Boundary, Grid, WState};
use blowup_core::functionals::{energy_e, hardy_gap};
use blowup_core::initial::InitialData;
use blowup_core::params::{ball_volume, ModelParams};
use blowup_core::pipeline::{run_two_pass, FramePlan};
use blowup_core::solver::{integrate, ode_reference, SolverConfig};

fn ode_run_error(p: f64) -> f64 {
    let params = ModelParams::with_exponent(3, p).unwrap();
    let grid = Arc::new(Grid::line(1.0, 8, Boundary::Periodic).unwrap());
    let data = InitialData::OdeProfile { t_blow: 1.0 };
    let mut cfg = SolverConfig::new(&params, 0.9);
    cfg.adapt = 2e-4;
    cfg.output_times = (1..=90).map(|k| k as f64 * 0.01).collect();
    let traj = integrate(data.sample(grid, &params).unwrap(), &params, &cfg).unwrap();
    assert!(traj.snapshots.last().unwrap().t >= 0.9 - 1e-12);
    let mut worst = 0.0f64;
    for snap in &traj.snapshots {
        let exact = ode_reference(p, 1.0, snap.t).unwrap();
        for &u in &snap.u {
            worst = worst.max((u - exact).abs() / exact);
        }
    }
    worst
}

#[test]
fn ode_mode_matches_closed_form() {
    for p in [2.0, 3.0, 5.0] {
        let start = Instant::now();
        let err = ode_run_error(p);
        let secs = start.elapsed().as_secs_f64();
        assert!(err <= 1e-6, "p = {p}: relative error {err:.3e}");
        assert!(secs < 5.0, "p = {p}: took {secs:.2} s");
    }
}

/// `sup |w - κ| + sup |∂_s w|` over the frames of an evolved ODE profile.
fn stationarity_defect(cells: usize, y_cells: usize) -> f64 {
    let params = ModelParams::critical(3).unwrap();
    let grid = Arc::new(Grid::radial(2.0, cells).unwrap());
    let data = InitialData::OdeProfile { t_blow: 1.0 };
    let cfg = SolverConfig::new(&params, 10.0);
    let plan = FramePlan { ds: 0.05, span: 2.0, y_cells, s_offset: 0.0, t0: Some(1.0) };
    let out = run_two_pass(&data, &params, grid, &cfg, &plan).unwrap();
    let k = params.kappa();
    out.frames
        .iter()
        .map(|f| {
            let dw = f.w.iter().fold(0.0f64, |m, w| m.max((w - k).abs()));
            let ds = f.ws.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            dw + ds
        })
        .fold(0.0, f64::max)
}

#[test]
fn ode_profile_is_stationary_and_converges() {
    let coarse = stationarity_defect(500, 1024);
    let fine = stationarity_defect(1000, 1024);
    assert!(fine <= 1e-3, "defect {fine:.3e}");
    let ratio = coarse / fine;
    assert!((3.0..5.5).contains(&ratio), "defects {coarse:.3e} -> {fine:.3e}, ratio {ratio:.2}");
}

#[test]
fn equilibrium_energy_closed_form() {
    let params = ModelParams::critical(3).unwrap();
    let k = params.kappa();
    let wst = WState::constant(1024, k, 0.0, 0.0);
    let e0 = energy_e(&wst, &params, 0.0).unwrap();
    let exact = ball_volume(3) * k * k / (params.p() - 1.0);
    assert!((e0 - exact).abs() < 1e-3, "E0 = {e0}, expected {exact}");
    assert!((exact - 4.0 * PI / 3.0).abs() < 1e-12);
}

#[test]
fn hardy_gap_of_unit_field() {
    let wst = WState::constant(1024, 1.0, 0.0, 0.0);
    let gap = hardy_gap(&wst.ygrid, &wst.w, &wst.wy, 0.5, 2).unwrap();
    assert!((gap - 4.0 * PI / 3.0).abs() < 1e-3, "gap {gap}");
}

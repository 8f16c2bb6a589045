//! Similarity variables `y = (x - x0)/(T0 - t)`, `s = -ln(T0 - t)`,
//! `w(y, s) = (T0 - t)^{2/(p-1)} u(x, t)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{domain, LabError, Result};
use crate::fields::{cell_centres, Geometry, Grid, RadialSnapshot, WState};
use crate::params::ModelParams;
use crate::solver::Trajectory;

/// Default number of radial cells of the y grid.
pub const DEFAULT_Y_CELLS: usize = 1024;

/// Largest physical radius sampled by [`to_similarity`] at `T0 - t = tau`.
pub fn coverage_radius(tau: f64, cells: usize) -> f64 {
    tau * (1.0 + 0.5 / cells as f64)
}

/// Transforms a radial snapshot into similarity variables centred at the origin.
pub fn to_similarity(
    snap: &RadialSnapshot,
    params: &ModelParams,
    x0: f64,
    t0: f64,
    cells: usize,
) -> Result<WState> {
    let tau = t0 - snap.t;
    if !(tau > 0.0) {
        return domain(format!("similarity frame needs t < T0, got t = {}, T0 = {t0}", snap.t));
    }
    transform(snap, params, x0, t0, tau, -tau.ln(), cells)
}

fn transform(
    snap: &RadialSnapshot,
    params: &ModelParams,
    x0: f64,
    t0: f64,
    tau: f64,
    s: f64,
    cells: usize,
) -> Result<WState> {
    if !matches!(snap.grid.geometry, Geometry::Radial) || snap.grid.start != 0.0 {
        return domain("similarity frames require a radial grid starting at the origin");
    }
    if x0 != 0.0 {
        return domain("radial similarity frames are centred at x0 = 0");
    }
    if cells < 3 {
        return domain("y grid needs at least 3 cells");
    }
    if coverage_radius(tau, cells) > snap.grid.last() {
        return Err(LabError::Frame(format!(
            "backward cone of radius {} at t = {} exceeds the grid radius {}",
            coverage_radius(tau, cells),
            snap.t,
            snap.grid.last()
        )));
    }
    let a = params.scaling_exponent();
    let scale_u = tau.powf(a);
    let scale_ut = scale_u * tau;
    let ygrid = Arc::new(cell_centres(cells));
    let dy = 1.0 / cells as f64;
    let mut w = Vec::with_capacity(cells + 1);
    let mut ut = Vec::with_capacity(cells);
    for &y in ygrid.iter() {
        w.push(scale_u * snap.grid.interpolate(&snap.u, tau * y)?);
        ut.push(scale_ut * snap.grid.interpolate(&snap.ut, tau * y)?);
    }
    // ghost cell outside the ball for the centred difference
    w.push(scale_u * snap.grid.interpolate(&snap.u, tau * (1.0 + 0.5 * dy))?);
    let mut wy = vec![0.0; cells];
    for j in 0..cells {
        let left = if j == 0 { w[0] } else { w[j - 1] };
        wy[j] = (w[j + 1] - left) / (2.0 * dy);
    }
    w.truncate(cells);
    let ws: Vec<f64> = (0..cells)
        .map(|j| ut[j] - ygrid[j] * wy[j] - a * w[j])
        .collect();
    WState::new(ygrid, w, ws, wy, s, (x0, t0))
}

/// Inverse transform on the physical points `x_j = (T0 - t) y_j`.
pub fn from_similarity(wst: &WState, params: &ModelParams) -> Result<RadialSnapshot> {
    let tau = (-wst.s).exp();
    let mut t = wst.t0 - tau;
    if t.abs() <= 4.0 * f64::EPSILON * wst.t0.abs() {
        t = 0.0;
    }
    let a = params.scaling_exponent();
    let inv_u = tau.powf(-a);
    let inv_ut = inv_u / tau;
    let n = wst.cells();
    let grid = Arc::new(Grid {
        geometry: Geometry::Radial,
        start: wst.x0 + 0.5 * tau * wst.dy(),
        dx: tau * wst.dy(),
        len: n,
    });
    let u = wst.w.iter().map(|w| inv_u * w).collect();
    let ut = (0..n)
        .map(|j| inv_ut * (wst.ws[j] + wst.ygrid[j] * wst.wy[j] + a * wst.w[j]))
        .collect();
    RadialSnapshot::new(grid, u, ut, t)
}

/// Similarity frames of `traj` at the similarity times `s_list`.
///
/// A frame whose time coincides with a stored snapshot uses it directly; otherwise the
/// snapshot is interpolated in time by four-point Lagrange interpolation.
pub fn sample_frames(
    traj: &Trajectory,
    params: &ModelParams,
    x0: f64,
    t0: f64,
    s_list: &[f64],
    cells: usize,
) -> Result<Vec<WState>> {
    if traj.snapshots.is_empty() {
        return Err(LabError::Frame("trajectory holds no snapshots".into()));
    }
    s_list
        .par_iter()
        .map(|&s| {
            let tau = (-s).exp();
            let t = t0 - tau;
            let snap = snapshot_at(traj, t)?;
            transform(&snap, params, x0, t0, tau, s, cells)
        })
        .collect()
}

/// Stored or time-interpolated snapshot at `t`.
pub fn snapshot_at(traj: &Trajectory, t: f64) -> Result<RadialSnapshot> {
    let snaps = &traj.snapshots;
    let (t_first, t_last) = (snaps[0].t, snaps[snaps.len() - 1].t);
    let slack = 1e-12 * t_last.abs().max(1.0);
    if t < t_first - slack || t > t_last + slack {
        return Err(LabError::Frame(format!(
            "requested t = {t} outside the stored range [{t_first}, {t_last}]"
        )));
    }
    let k = snaps.partition_point(|s| s.t < t);
    for idx in [k.saturating_sub(1), k.min(snaps.len() - 1)] {
        if (snaps[idx].t - t).abs() <= slack {
            return Ok(snaps[idx].clone());
        }
    }
    if snaps.len() < 4 {
        return Err(LabError::Frame("temporal interpolation needs four stored snapshots".into()));
    }
    let base = (k as isize - 2).clamp(0, snaps.len() as isize - 4) as usize;
    let stencil = &snaps[base..base + 4];
    let weights: Vec<f64> = (0..4)
        .map(|a| {
            (0..4)
                .filter(|&b| b != a)
                .map(|b| (t - stencil[b].t) / (stencil[a].t - stencil[b].t))
                .product()
        })
        .collect();
    let n = stencil[0].u.len();
    let mut u = vec![0.0; n];
    let mut ut = vec![0.0; n];
    for (snap, l) in stencil.iter().zip(&weights) {
        for j in 0..n {
            u[j] += l * snap.u[j];
            ut[j] += l * snap.ut[j];
        }
    }
    RadialSnapshot::new(stencil[0].grid.clone(), u, ut, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::ode_reference;

    fn ode_snapshot(params: &ModelParams, t_blow: f64, t: f64, cells: usize) -> RadialSnapshot {
        let grid = Arc::new(Grid::radial(2.0, cells).unwrap());
        let v = ode_reference(params.p(), t_blow, t).unwrap();
        let a = params.scaling_exponent();
        let n = grid.len;
        RadialSnapshot::new(grid, vec![v; n], vec![a * v / (t_blow - t); n], t).unwrap()
    }

    #[test]
    fn ode_profile_is_stationary() {
        let params = ModelParams::critical(3).unwrap();
        let snap = ode_snapshot(&params, 1.0, 0.3, 400);
        let w = to_similarity(&snap, &params, 0.0, 1.0, 256).unwrap();
        let k = params.kappa();
        assert!(w.w.iter().all(|v| (v - k).abs() < 1e-12));
        assert!(w.ws.iter().all(|v| v.abs() < 1e-12));
        assert!(w.wy.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let params = ModelParams::critical(3).unwrap();
        let grid = Arc::new(Grid::radial(2.0, 100).unwrap());
        let snap = RadialSnapshot::new(grid, vec![0.0; 101], vec![0.0; 101], 0.5).unwrap();
        let w = to_similarity(&snap, &params, 0.0, 1.0, 64).unwrap();
        assert!(w.w.iter().chain(&w.ws).all(|&v| v == 0.0));
    }

    #[test]
    fn frame_errors() {
        let params = ModelParams::critical(3).unwrap();
        let snap = ode_snapshot(&params, 1.0, 0.0, 100);
        assert!(matches!(to_similarity(&snap, &params, 0.0, 3.0, 64), Err(LabError::Frame(_))));
        assert!(matches!(to_similarity(&snap, &params, 0.0, 0.0, 64), Err(LabError::Domain(_))));
    }

    #[test]
    fn initial_time_is_recovered_exactly() {
        let params = ModelParams::critical(3).unwrap();
        let t0: f64 = 0.7;
        let w = WState::constant(16, params.kappa(), 0.0, -t0.ln());
        let mut w = w;
        w.t0 = t0;
        let snap = from_similarity(&w, &params).unwrap();
        assert_eq!(snap.t, 0.0);
        let expected = ode_reference(params.p(), t0, 0.0).unwrap();
        assert!(snap.u.iter().all(|v| (v - expected).abs() < 1e-12 * expected));
    }

    #[test]
    fn scaling_covariance() {
        let params = ModelParams::critical(3).unwrap();
        let mut w = WState::constant(8, 1.0, 0.0, 0.0);
        w.t0 = 2.0;
        let a = from_similarity(&w, &params).unwrap();
        w.s = -(2f64).ln();
        let b = from_similarity(&w, &params).unwrap();
        // doubling T0 - t doubles the physical spacing, i.e. halves y at fixed x
        assert!((b.grid.dx - 2.0 * a.grid.dx).abs() < 1e-15);
    }
}

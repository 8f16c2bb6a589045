//! Explicit velocity-Verlet (leapfrog) integration of
//! `u_tt = Δu + |u|^{p-1}u + f(u) + g(u_t)` in radial or one-dimensional geometry.
//!
//! The radial Laplacian is written in flux form
//! `(a_{j+1/2}(u_{j+1}-u_j) - a_{j-1/2}(u_j-u_{j-1})) / (Δr V_j)` with
//! `a_{j+1/2} = r_{j+1/2}^{N-1}` and exact shell volumes `V_j`; at the origin this
//! reduces to the ghost-reflected `2N (u_1 - u_0)/Δr^2 ≈ N u_rr(0)`. The outer
//! boundary carries the outgoing condition `u_t + u_r + (N-1)u/(2R) = 0`. It is only
//! an approximation of the free-space problem, which is harmless as long as the
//! backward light cones used by the diagnostics stay clear of `R` (checked when
//! scenarios are configured).
//!
//! Near blow-up the step is limited by `adapt · ‖u‖∞^{-(p-1)/2}`, the local time
//! scale of the ODE profile, so that runs can be driven deep into the asymptotic
//! regime before hitting the amplitude cap.

use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};
use crate::fields::{Boundary, Geometry, Grid, RadialSnapshot};
use crate::params::ModelParams;

/// Default amplitude cap: `10^8`, lowered for large `p` so that the time to
/// blow-up at the cap stays above `1e-9` (resolvable in double precision).
pub fn default_cap(p: f64) -> f64 {
    let kappa = crate::params::equilibrium_kappa(p).unwrap_or(1.0);
    let tau_min: f64 = 1e-9;
    1e8f64.min(kappa * tau_min.powf(-2.0 / (p - 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Base step is `cfl · dx`; must not exceed 0.9.
    pub cfl: f64,
    /// Include `|u|^{p-1}u`; false gives the linear wave equation (plus `f`, `g`).
    pub nonlinear: bool,
    pub amplitude_cap: f64,
    /// Step limit near blow-up as a fraction of `‖u‖∞^{-(p-1)/2}`; `0` disables it.
    pub adapt: f64,
    pub t_end: f64,
    /// Times at which a snapshot is stored; the integrator lands on them exactly.
    pub output_times: Vec<f64>,
    /// Store a snapshot every time `‖u‖∞` has grown by this factor since the last one.
    pub growth_snapshots: Option<f64>,
    /// Positions whose values `u(x, t)` are recorded after every step.
    pub probes: Vec<f64>,
}

impl SolverConfig {
    pub fn new(params: &ModelParams, t_end: f64) -> Self {
        SolverConfig {
            cfl: 0.5,
            nonlinear: true,
            amplitude_cap: default_cap(params.p()),
            adapt: 0.02,
            t_end,
            output_times: Vec::new(),
            growth_snapshots: None,
            probes: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return domain(format!("CFL number must lie in (0, 0.9], got {}", self.cfl));
        }
        if !(self.amplitude_cap > 0.0) {
            return domain("amplitude cap must be positive");
        }
        if !(self.adapt >= 0.0) {
            return domain("adapt factor must be >= 0");
        }
        if let Some(g) = self.growth_snapshots {
            if !(g > 1.0) {
                return domain("growth snapshot factor must exceed 1");
            }
        }
        Ok(())
    }
}

/// Discrete spatial operator for a given grid and dimension.
#[derive(Debug, Clone)]
pub struct WaveOperator {
    grid: Arc<Grid>,
    dim: usize,
    /// `a_{j+1/2} / (Δr V_j)` and `a_{j-1/2} / (Δr V_j)` for radial grids.
    right: Vec<f64>,
    left: Vec<f64>,
    /// Coefficient of `u_r(R)` at the outer radial node.
    outer_flux: f64,
}

impl WaveOperator {
    pub fn new(grid: Arc<Grid>, dim: usize) -> Result<Self> {
        let n = grid.len;
        let dx = grid.dx;
        let mut right = vec![0.0; n];
        let mut left = vec![0.0; n];
        let mut outer_flux = 0.0;
        match grid.geometry {
            Geometry::Radial => {
                if grid.start != 0.0 {
                    return domain("radial solver grid must start at r = 0");
                }
                let nd = dim as i32;
                // work in units of dx to keep the powers well scaled
                let face = |j: f64| (j + 0.5).powi(nd - 1);
                let shell = |j: usize| -> f64 {
                    let jf = j as f64;
                    let lo = if j == 0 { 0.0 } else { (jf - 0.5).powi(nd) };
                    let hi = if j == n - 1 { jf.powi(nd) } else { (jf + 0.5).powi(nd) };
                    (hi - lo) / dim as f64
                };
                for j in 0..n {
                    let v = shell(j) * dx * dx;
                    if j + 1 < n {
                        right[j] = face(j as f64) / v;
                    }
                    if j > 0 {
                        left[j] = face(j as f64 - 1.0) / v;
                    }
                }
                let last = (n - 1) as f64;
                outer_flux = last.powi(nd - 1) * dx / (shell(n - 1) * dx * dx);
            }
            Geometry::Line { .. } => {
                let inv = 1.0 / (dx * dx);
                right.iter_mut().for_each(|v| *v = inv);
                left.iter_mut().for_each(|v| *v = inv);
            }
        }
        Ok(WaveOperator {
            grid,
            dim,
            right,
            left,
            outer_flux,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Velocity-independent part of the Laplacian.
    pub fn laplacian_static(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        match self.grid.geometry {
            Geometry::Radial => {
                out[0] = self.right[0] * (u[1] - u[0]);
                for j in 1..n - 1 {
                    out[j] = self.right[j] * (u[j + 1] - u[j]) - self.left[j] * (u[j] - u[j - 1]);
                }
                let r = self.grid.last();
                let damp = (self.dim as f64 - 1.0) / (2.0 * r);
                out[n - 1] = -self.left[n - 1] * (u[n - 1] - u[n - 2]) - self.outer_flux * damp * u[n - 1];
            }
            Geometry::Line { boundary } => {
                let inv = self.right[0];
                for j in 1..n - 1 {
                    out[j] = inv * (u[j + 1] - 2.0 * u[j] + u[j - 1]);
                }
                match boundary {
                    Boundary::Periodic => {
                        out[0] = inv * (u[1] - 2.0 * u[0] + u[n - 1]);
                        out[n - 1] = inv * (u[0] - 2.0 * u[n - 1] + u[n - 2]);
                    }
                    Boundary::Outgoing => {
                        out[0] = 2.0 * inv * (u[1] - u[0]);
                        out[n - 1] = -2.0 * inv * (u[n - 1] - u[n - 2]);
                    }
                }
            }
        }
    }

    /// Adds the velocity-dependent boundary terms of the outgoing condition.
    pub fn laplacian_velocity(&self, ut: &[f64], out: &mut [f64]) {
        let n = ut.len();
        match self.grid.geometry {
            Geometry::Radial => out[n - 1] -= self.outer_flux * ut[n - 1],
            Geometry::Line { boundary: Boundary::Outgoing } => {
                let c = 2.0 / self.grid.dx;
                out[0] -= c * ut[0];
                out[n - 1] -= c * ut[n - 1];
            }
            Geometry::Line { boundary: Boundary::Periodic } => {}
        }
    }

    /// Right-hand side of the second-order system.
    pub fn acceleration(
        &self,
        params: &ModelParams,
        nonlinear: bool,
        u: &[f64],
        ut: &[f64],
        out: &mut [f64],
    ) {
        self.static_acceleration(params, nonlinear, u, out);
        self.add_velocity_terms(params, ut, out);
    }

    fn static_acceleration(&self, params: &ModelParams, nonlinear: bool, u: &[f64], out: &mut [f64]) {
        self.laplacian_static(u, out);
        let p = params.p();
        let forced = params.m() != 0.0;
        for (a, &v) in out.iter_mut().zip(u) {
            if nonlinear {
                *a += if p == 3.0 { v * v * v } else { v.abs().powf(p - 1.0) * v };
            }
            if forced {
                *a += params.perturbation_f(v);
            }
        }
    }

    fn add_velocity_terms(&self, params: &ModelParams, ut: &[f64], out: &mut [f64]) {
        self.laplacian_velocity(ut, out);
        if params.has_damping() {
            for (a, &v) in out.iter_mut().zip(ut) {
                *a += params.perturbation_g(v);
            }
        }
    }

    /// Staggered leapfrog energy `½|(u⁺-u)/dt|² + ½⟨∇u, ∇u⁺⟩`, conserved to round-off by the
    /// linear scheme with constant step while the solution stays away from the outer boundary.
    pub fn staggered_energy(&self, u: &[f64], u_next: &[f64], dt: f64) -> f64 {
        let n = u.len();
        let dx = self.grid.dx;
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        match self.grid.geometry {
            Geometry::Radial => {
                let nd = self.dim as i32;
                for j in 0..n {
                    let vol = self.left_volume(j);
                    let v = (u_next[j] - u[j]) / dt;
                    kinetic += 0.5 * vol * v * v;
                }
                for j in 0..n - 1 {
                    let a = ((j as f64 + 0.5) * dx).powi(nd - 1);
                    potential += 0.5 * a * (u[j + 1] - u[j]) * (u_next[j + 1] - u_next[j]) / dx;
                }
            }
            Geometry::Line { boundary } => {
                for j in 0..n {
                    let v = (u_next[j] - u[j]) / dt;
                    let vol = match boundary {
                        Boundary::Outgoing if j == 0 || j == n - 1 => 0.5 * dx,
                        _ => dx,
                    };
                    kinetic += 0.5 * vol * v * v;
                }
                for j in 0..n - 1 {
                    potential += 0.5 * (u[j + 1] - u[j]) * (u_next[j + 1] - u_next[j]) / dx;
                }
                if boundary == Boundary::Periodic {
                    potential += 0.5 * (u[0] - u[n - 1]) * (u_next[0] - u_next[n - 1]) / dx;
                }
            }
        }
        kinetic + potential
    }

    fn left_volume(&self, j: usize) -> f64 {
        let n = self.grid.len;
        let nd = self.dim as i32;
        let dx = self.grid.dx;
        let jf = j as f64;
        let lo = if j == 0 { 0.0 } else { (jf - 0.5).powi(nd) };
        let hi = if j == n - 1 { jf.powi(nd) } else { (jf + 0.5).powi(nd) };
        (hi - lo) / self.dim as f64 * dx.powi(nd)
    }
}

/// Outcome of a call to [`step`].
#[derive(Debug, Clone)]
pub struct StepInfo {
    /// `max |u_t^{(1)} - u_t^{(0)}|` of the fixed-point correction for the implicit `g(u_t)` term.
    pub fixed_point_residual: f64,
}

/// One velocity-Verlet step. The implicit dependence on `u_t` (damping and the outgoing
/// boundary) is resolved by a predictor plus one fixed-point correction.
pub fn step(
    op: &WaveOperator,
    state: &RadialSnapshot,
    dt: f64,
    params: &ModelParams,
    nonlinear: bool,
) -> Result<(RadialSnapshot, StepInfo)> {
    let n = state.u.len();
    let mut a0 = vec![0.0; n];
    op.acceleration(params, nonlinear, &state.u, &state.ut, &mut a0);
    let mut scratch = Scratch::new(n);
    let info = verlet(op, params, nonlinear, &state.u, &state.ut, &a0, dt, &mut scratch);
    let t = state.t + dt;
    if !scratch.u.iter().chain(scratch.ut.iter()).all(|v| v.is_finite()) {
        return Err(LabError::BlowupReached { t: state.t });
    }
    let next = RadialSnapshot {
        grid: state.grid.clone(),
        u: scratch.u,
        ut: scratch.ut,
        t,
    };
    Ok((next, info))
}

struct Scratch {
    u: Vec<f64>,
    ut: Vec<f64>,
    vh: Vec<f64>,
    a_static: Vec<f64>,
    a: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            u: vec![0.0; n],
            ut: vec![0.0; n],
            vh: vec![0.0; n],
            a_static: vec![0.0; n],
            a: vec![0.0; n],
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn verlet(
    op: &WaveOperator,
    params: &ModelParams,
    nonlinear: bool,
    u: &[f64],
    ut: &[f64],
    a0: &[f64],
    dt: f64,
    s: &mut Scratch,
) -> StepInfo {
    let half = 0.5 * dt;
    for j in 0..u.len() {
        s.vh[j] = ut[j] + half * a0[j];
        s.u[j] = u[j] + dt * s.vh[j];
    }
    op.static_acceleration(params, nonlinear, &s.u, &mut s.a_static);
    // predictor with u_t ≈ v_{n+1/2}
    s.a.copy_from_slice(&s.a_static);
    op.add_velocity_terms(params, &s.vh, &mut s.a);
    for j in 0..u.len() {
        s.ut[j] = s.vh[j] + half * s.a[j];
    }
    // one fixed-point correction
    s.a.copy_from_slice(&s.a_static);
    op.add_velocity_terms(params, &s.ut, &mut s.a);
    let mut residual = 0.0f64;
    for j in 0..u.len() {
        let corrected = s.vh[j] + half * s.a[j];
        residual = residual.max((corrected - s.ut[j]).abs());
        s.ut[j] = corrected;
    }
    StepInfo {
        fixed_point_residual: residual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSample {
    pub t: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSeries {
    pub x: f64,
    pub index: usize,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StopReason {
    /// `‖u‖∞` crossed the cap during the step ending at `t`.
    ReachedCap { t: f64 },
    /// The state became non-finite; `t` is the last finite time.
    Overflow { t: f64 },
    ReachedEnd,
}

/// Stored output of one integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<RadialSnapshot>,
    /// Base step `cfl · dx`.
    pub dt: f64,
    pub cfl: f64,
    pub meta: ModelParams,
    pub cap: f64,
    pub sup_history: Vec<SupSample>,
    pub probes: Vec<ProbeSeries>,
    pub stop: StopReason,
    pub steps: usize,
    pub last_dt: f64,
    pub max_fixed_point_residual: f64,
}

impl Trajectory {
    /// A trajectory consisting only of a sup-norm history, e.g. sampled from a closed form.
    pub fn from_sup_history(meta: ModelParams, samples: Vec<SupSample>, cap: f64, reached_cap: bool) -> Self {
        let last_t = samples.last().map(|s| s.t).unwrap_or(0.0);
        let last_dt = if samples.len() > 1 {
            last_t - samples[samples.len() - 2].t
        } else {
            0.0
        };
        Trajectory {
            snapshots: Vec::new(),
            dt: last_dt,
            cfl: 0.0,
            meta,
            cap,
            sup_history: samples,
            probes: Vec::new(),
            stop: if reached_cap {
                StopReason::ReachedCap { t: last_t + last_dt }
            } else {
                StopReason::ReachedEnd
            },
            steps: 0,
            last_dt,
            max_fixed_point_residual: 0.0,
        }
    }

    pub fn reached_cap(&self) -> bool {
        !matches!(self.stop, StopReason::ReachedEnd)
    }

    pub fn t_range(&self) -> (f64, f64) {
        match (self.snapshots.first(), self.snapshots.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => (0.0, 0.0),
        }
    }
}

/// Integrates from `initial` until the cap is crossed, the state overflows or `t_end` is reached.
pub fn integrate(initial: RadialSnapshot, params: &ModelParams, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = initial.grid.clone();
    let op = WaveOperator::new(grid.clone(), params.dim())?;
    let n = grid.len;
    let dt_base = cfg.cfl * grid.dx;

    let mut outputs: Vec<f64> = cfg
        .output_times
        .iter()
        .copied()
        .filter(|&t| t > initial.t && t <= cfg.t_end)
        .collect();
    outputs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    outputs.dedup();
    let mut next_output = 0usize;

    let mut probes: Vec<ProbeSeries> = cfg
        .probes
        .iter()
        .map(|&x| {
            let index = grid.nearest(x);
            ProbeSeries {
                x: grid.x(index),
                index,
                t: vec![initial.t],
                u: vec![initial.u[index]],
            }
        })
        .collect();

    let initial_sup = initial.sup_norm();
    if initial_sup >= cfg.amplitude_cap {
        return domain("initial amplitude already exceeds the cap");
    }
    let mut sup_history = vec![SupSample {
        t: initial.t,
        sup: initial_sup,
    }];
    let mut snapshots = vec![initial.clone()];
    let mut last_stored_sup = initial_sup.max(f64::MIN_POSITIVE);

    let mut u = initial.u.clone();
    let mut ut = initial.ut.clone();
    let mut t = initial.t;
    let mut a0 = vec![0.0; n];
    op.acceleration(params, cfg.nonlinear, &u, &ut, &mut a0);
    let mut scratch = Scratch::new(n);
    let mut sup = initial_sup;
    let mut steps = 0usize;
    let mut last_dt = dt_base;
    let mut max_residual = 0.0f64;
    let exponent = -(params.p() - 1.0) / 2.0;

    let stop = loop {
        if t >= cfg.t_end {
            break StopReason::ReachedEnd;
        }
        let mut dt = dt_base;
        if cfg.nonlinear && cfg.adapt > 0.0 && sup > 0.0 {
            dt = dt.min(cfg.adapt * sup.powf(exponent));
        }
        let mut landing = None;
        if next_output < outputs.len() && t + dt >= outputs[next_output] {
            dt = outputs[next_output] - t;
            landing = Some(outputs[next_output]);
        }
        if landing.is_none() && t + dt >= cfg.t_end {
            dt = cfg.t_end - t;
            landing = Some(cfg.t_end);
        }
        if dt <= 0.0 {
            // an output time coincides with the current time
            next_output += 1;
            continue;
        }

        let info = verlet(&op, params, cfg.nonlinear, &u, &ut, &a0, dt, &mut scratch);
        max_residual = max_residual.max(info.fixed_point_residual);
        let t_new = landing.unwrap_or(t + dt);
        let finite = scratch.u.iter().chain(scratch.ut.iter()).all(|v| v.is_finite());
        if !finite {
            break StopReason::Overflow { t };
        }
        let new_sup = scratch.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if new_sup >= cfg.amplitude_cap {
            break StopReason::ReachedCap { t: t_new };
        }
        std::mem::swap(&mut u, &mut scratch.u);
        std::mem::swap(&mut ut, &mut scratch.ut);
        t = t_new;
        sup = new_sup;
        steps += 1;
        last_dt = dt;
        // reuse the final acceleration evaluation for the next kick
        op.acceleration(params, cfg.nonlinear, &u, &ut, &mut a0);

        sup_history.push(SupSample { t, sup });
        for probe in probes.iter_mut() {
            probe.t.push(t);
            probe.u.push(u[probe.index]);
        }
        let mut store = false;
        if next_output < outputs.len() && landing == Some(outputs[next_output]) {
            next_output += 1;
            store = true;
        }
        if let Some(factor) = cfg.growth_snapshots {
            if sup >= last_stored_sup * factor {
                store = true;
            }
        }
        if store {
            last_stored_sup = sup.max(f64::MIN_POSITIVE);
            snapshots.push(RadialSnapshot {
                grid: grid.clone(),
                u: u.clone(),
                ut: ut.clone(),
                t,
            });
        }
    };

    // always keep the last state before stopping
    if snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(RadialSnapshot {
            grid: grid.clone(),
            u: u.clone(),
            ut: ut.clone(),
            t,
        });
    }
    debug!(
        "integrated {steps} steps to t = {t}, stop = {stop:?}, max fixed-point residual = {max_residual:e}"
    );
    Ok(Trajectory {
        snapshots,
        dt: dt_base,
        cfl: cfg.cfl,
        meta: params.clone(),
        cap: cfg.amplitude_cap,
        sup_history,
        probes,
        stop,
        steps,
        last_dt,
        max_fixed_point_residual: max_residual,
    })
}

/// `κ(p) (T - t)^{-2/(p-1)}`, the blow-up solution of `u'' = u^p`.
pub fn ode_reference(p: f64, t_blow: f64, t: f64) -> Result<f64> {
    if !(t < t_blow) {
        return domain(format!("ODE reference needs t < T, got t = {t}, T = {t_blow}"));
    }
    let kappa = crate::params::equilibrium_kappa(p)?;
    Ok(kappa * (t_blow - t).powf(-2.0 / (p - 1.0)))
}

/// Time derivative of [`ode_reference`].
pub fn ode_reference_rate(p: f64, t_blow: f64, t: f64) -> Result<f64> {
    let a = 2.0 / (p - 1.0);
    Ok(a * ode_reference(p, t_blow, t)? / (t_blow - t))
}

//! Blow-up time estimation and the blow-up graph `x ↦ T(x)`.
//!
//! For the ODE rate `‖u‖∞ ~ κ (T - t)^{-2/(p-1)}` the quantity `z = ‖u‖∞^{-(p-1)/2}` is
//! linear in `t` and vanishes at `T`. The estimator fits `z` by weighted least squares
//! (weights `1/z^2`, i.e. relative errors) over the last 30% of the recorded time window.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};
use crate::fields::{Geometry, Grid};
use crate::initial::InitialData;
use crate::params::ModelParams;
use crate::solver::{integrate, SolverConfig, StopReason, Trajectory};

/// Fraction of the time window used by the fit.
pub const FIT_WINDOW: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    LinearFit,
    Bracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_est: f64,
    /// Half-width of the two-sigma confidence interval of the fitted root.
    pub ci: f64,
    pub method: EstimateMethod,
    pub samples_used: usize,
}

/// Fits the root of `z(t) = a^{-(p-1)/2}` from `(t, a)` samples that approach blow-up.
pub fn fit_blowup_time(t: &[f64], amplitude: &[f64], p: f64, last_dt: f64) -> Result<BlowupEstimate> {
    if t.len() != amplitude.len() || t.is_empty() {
        return Err(LabError::InsufficientData("empty amplitude history".into()));
    }
    let t_first = t[0];
    let t_last = t[t.len() - 1];
    let start = t_last - FIT_WINDOW * (t_last - t_first);
    let exponent = -(p - 1.0) / 2.0;
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(amplitude)
        .filter(|(&ti, &a)| ti >= start && a > 0.0 && a.is_finite())
        .map(|(&ti, &a)| (ti, a.powf(exponent)))
        .collect();
    let bracket = BlowupEstimate {
        t_est: t_last + last_dt,
        ci: last_dt,
        method: EstimateMethod::Bracket,
        samples_used: pts.len(),
    };
    if pts.len() < 3 {
        return Ok(bracket);
    }
    // weighted least squares z ≈ c0 + c1 (t - tm), weights 1/z^2
    let wsum: f64 = pts.iter().map(|(_, z)| 1.0 / (z * z)).sum();
    let tm = pts.iter().map(|(ti, z)| ti / (z * z)).sum::<f64>() / wsum;
    let (mut sww, mut swz, mut swtz, mut swtt) = (0.0, 0.0, 0.0, 0.0);
    for &(ti, z) in &pts {
        let w = 1.0 / (z * z);
        let d = ti - tm;
        sww += w;
        swz += w * z;
        swtz += w * d * z;
        swtt += w * d * d;
    }
    if !(swtt > 0.0) {
        return Ok(bracket);
    }
    let c1 = swtz / swtt;
    let c0 = swz / sww;
    if !(c1 < 0.0) {
        return Ok(bracket);
    }
    let root = tm - c0 / c1;
    if !root.is_finite() || root < t_last {
        return Ok(bracket);
    }
    let dof = (pts.len() - 2) as f64;
    let rss: f64 = pts
        .iter()
        .map(|&(ti, z)| {
            let r = z - c0 - c1 * (ti - tm);
            r * r / (z * z)
        })
        .sum();
    let var = rss / dof.max(1.0);
    // centred design: var(c0) = var/Σw, var(c1) = var/Σw d², independent
    let var_c0 = var / sww;
    let var_c1 = var / swtt;
    let var_root = var_c0 / (c1 * c1) + var_c1 * (c0 * c0) / (c1 * c1 * c1 * c1);
    let ci = 2.0 * var_root.sqrt() + 4.0 * f64::EPSILON * root.abs();
    Ok(BlowupEstimate {
        t_est: root,
        ci,
        method: EstimateMethod::LinearFit,
        samples_used: pts.len(),
    })
}

/// Estimates the blow-up time from the sup-norm history of a capped trajectory.
pub fn detect_blowup(traj: &Trajectory, params: &ModelParams) -> Result<BlowupEstimate> {
    if matches!(traj.stop, StopReason::ReachedEnd) {
        return Err(LabError::NoBlowupDetected(format!(
            "amplitude cap {} never reached",
            traj.cap
        )));
    }
    let t: Vec<f64> = traj.sup_history.iter().map(|s| s.t).collect();
    let a: Vec<f64> = traj.sup_history.iter().map(|s| s.sup).collect();
    fit_blowup_time(&t, &a, params.p(), traj.last_dt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupGraph {
    pub centers: Vec<f64>,
    /// `T(x)` per center, `None` where detection failed.
    pub t: Vec<Option<f64>>,
    pub ci: Vec<Option<f64>>,
    /// Fitted non-characteristic slope per center, `None` if none passes.
    pub delta0: Vec<Option<f64>>,
    pub errors: Vec<Option<String>>,
    /// Largest `|T(x) - T(x')| - |x - x'|` over pairs of valid centers.
    pub lipschitz_excess: f64,
    /// Largest confidence half-width over valid centers.
    pub fit_tolerance: f64,
}

impl BlowupGraph {
    /// Builds a graph from per-center values, e.g. closed forms used in tests.
    pub fn from_values(centers: Vec<f64>, t: Vec<f64>, tolerance: f64) -> Self {
        let n = centers.len();
        let mut g = BlowupGraph {
            centers,
            t: t.into_iter().map(Some).collect(),
            ci: vec![Some(tolerance); n],
            delta0: vec![None; n],
            errors: vec![None; n],
            lipschitz_excess: 0.0,
            fit_tolerance: tolerance,
        };
        g.refresh();
        g
    }

    fn refresh(&mut self) {
        let valid: Vec<(f64, f64)> = self
            .centers
            .iter()
            .zip(&self.t)
            .filter_map(|(&x, t)| t.map(|t| (x, t)))
            .collect();
        let mut excess = f64::NEG_INFINITY;
        for (i, a) in valid.iter().enumerate() {
            for b in &valid[i + 1..] {
                excess = excess.max((a.1 - b.1).abs() - (a.0 - b.0).abs());
            }
        }
        self.lipschitz_excess = if excess.is_finite() { excess } else { 0.0 };
        self.fit_tolerance = self.ci.iter().flatten().fold(0.0, |m: f64, c| m.max(*c));
        let fitted: Vec<Option<f64>> = (0..self.centers.len())
            .map(|i| fit_delta0(self, self.centers[i]).ok().flatten())
            .collect();
        self.delta0 = fitted;
    }

    /// 1-Lipschitz up to twice the fit tolerance.
    pub fn is_lipschitz(&self) -> bool {
        self.lipschitz_excess <= 2.0 * self.fit_tolerance
    }

    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.centers
            .iter()
            .position(|&c| c == x)
            .and_then(|i| self.t[i])
    }
}

/// Runs one line-geometry integration with probes at `centers` and fits `T(x)` per center.
pub fn blowup_graph(
    data: &InitialData,
    grid: Arc<Grid>,
    centers: &[f64],
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<BlowupGraph> {
    if !matches!(grid.geometry, Geometry::Line { .. }) {
        return domain("blow-up graphs are computed on line grids");
    }
    let initial = data.sample(grid.clone(), params)?;
    let mut cfg = cfg.clone();
    cfg.probes = centers.to_vec();
    let traj = integrate(initial, params, &cfg)?;
    if matches!(traj.stop, StopReason::ReachedEnd) {
        return Err(LabError::NoBlowupDetected("no center reached the amplitude cap".into()));
    }
    let n = centers.len();
    let mut t = vec![None; n];
    let mut ci = vec![None; n];
    let mut errors = vec![None; n];
    for (i, probe) in traj.probes.iter().enumerate() {
        let amp: Vec<f64> = probe.u.iter().map(|v| v.abs()).collect();
        match fit_blowup_time(&probe.t, &amp, params.p(), traj.last_dt) {
            Ok(est) if est.method == EstimateMethod::LinearFit => {
                t[i] = Some(est.t_est);
                ci[i] = Some(est.ci);
            }
            Ok(_) => errors[i] = Some("fit ill-conditioned at this center".into()),
            Err(e) => errors[i] = Some(e.to_string()),
        }
    }
    let mut graph = BlowupGraph {
        centers: centers.to_vec(),
        t,
        ci,
        delta0: vec![None; n],
        errors,
        lipschitz_excess: 0.0,
        fit_tolerance: 0.0,
    };
    graph.refresh();
    Ok(graph)
}

/// Neighborhood radius used by the non-characteristic check.
pub const NEIGHBORHOOD: f64 = 0.5;

/// Discrete cone containment `T(x) >= T(x0) - δ0 |x - x0| - tol` over the sampled neighbours of `x0`.
pub fn non_characteristic_check(graph: &BlowupGraph, x0: f64, delta0: f64) -> Result<bool> {
    non_characteristic_check_with(graph, x0, delta0, NEIGHBORHOOD, graph.fit_tolerance)
}

pub fn non_characteristic_check_with(
    graph: &BlowupGraph,
    x0: f64,
    delta0: f64,
    radius: f64,
    tol: f64,
) -> Result<bool> {
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return domain(format!("δ0 must lie in (0,1), got {delta0}"));
    }
    let t0 = graph
        .value_at(x0)
        .ok_or_else(|| LabError::InsufficientData(format!("no blow-up time at x0 = {x0}")))?;
    let neighbours: Vec<(f64, f64)> = graph
        .centers
        .iter()
        .zip(&graph.t)
        .filter(|(&x, _)| x != x0 && (x - x0).abs() <= radius)
        .filter_map(|(&x, t)| t.map(|t| (x, t)))
        .collect();
    let left = neighbours.iter().any(|(x, _)| *x < x0);
    let right = neighbours.iter().any(|(x, _)| *x > x0);
    if !(left && right) {
        return Err(LabError::InsufficientData(format!(
            "neighborhood of x0 = {x0} is not covered on both sides"
        )));
    }
    Ok(neighbours
        .iter()
        .all(|&(x, t)| t >= t0 - delta0 * (x - x0).abs() - tol))
}

/// Smallest `δ0` on the grid `{0.05, 0.10, ..., 0.95}` passing the check, if any.
pub fn fit_delta0(graph: &BlowupGraph, x0: f64) -> Result<Option<f64>> {
    for k in 1..20 {
        let d = 0.05 * k as f64;
        if non_characteristic_check(graph, x0, d)? {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{ode_reference, SupSample};

    fn ode_traj(p: f64, noise: Option<u64>) -> Trajectory {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(noise.unwrap_or(0));
        let params = ModelParams::with_exponent(3, p).unwrap();
        let samples: Vec<SupSample> = (0..2000)
            .map(|k| {
                let t = 1.0 - (-(k as f64) * 0.008).exp();
                let mut sup = ode_reference(p, 1.0, t).unwrap();
                if noise.is_some() {
                    sup *= 1.0 + 0.01 * rng.gen_range(-1.0..1.0);
                }
                SupSample { t, sup }
            })
            .collect();
        Trajectory::from_sup_history(params, samples, 1e8, true)
    }

    #[test]
    fn exact_ode_samples() {
        for p in [2.0, 3.0, 5.0] {
            let traj = ode_traj(p, None);
            let est = detect_blowup(&traj, &traj.meta).unwrap();
            assert!((est.t_est - 1.0).abs() < 1e-6, "p = {p}: {est:?}");
            assert_eq!(est.method, EstimateMethod::LinearFit);
        }
    }

    #[test]
    fn noisy_ode_samples() {
        let traj = ode_traj(3.0, Some(11));
        let est = detect_blowup(&traj, &traj.meta).unwrap();
        assert!((est.t_est - 1.0).abs() < 1e-2, "{est:?}");
    }

    #[test]
    fn bounded_history_is_rejected() {
        let params = ModelParams::critical(3).unwrap();
        let samples = (0..10).map(|k| SupSample { t: k as f64, sup: 1.0 }).collect();
        let traj = Trajectory::from_sup_history(params.clone(), samples, 1e8, false);
        assert!(matches!(detect_blowup(&traj, &params), Err(LabError::NoBlowupDetected(_))));
    }

    #[test]
    fn cone_checks_on_closed_form_graphs() {
        let xs: Vec<f64> = (-10..=10).map(|k| 0.05 * k as f64).collect();
        let flat = BlowupGraph::from_values(xs.clone(), vec![1.0; xs.len()], 1e-9);
        for d in [0.05, 0.5, 0.95] {
            assert!(non_characteristic_check(&flat, 0.0, d).unwrap());
        }
        let cone: Vec<f64> = xs.iter().map(|x| 1.0 - x.abs()).collect();
        let g = BlowupGraph::from_values(xs.clone(), cone, 1e-9);
        for d in [0.05, 0.5, 0.95] {
            assert!(!non_characteristic_check(&g, 0.0, d).unwrap());
        }
        let sparse = BlowupGraph::from_values(vec![0.0, 0.1], vec![1.0, 1.0], 0.0);
        assert!(matches!(
            non_characteristic_check(&sparse, 0.0, 0.5),
            Err(LabError::InsufficientData(_))
        ));
    }
}

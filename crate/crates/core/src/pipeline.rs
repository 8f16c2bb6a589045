//! Two-pass runs: locate the blow-up time, then rerun landing on similarity frames.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blowup::{detect_blowup, BlowupEstimate};
use crate::error::{LabError, Result};
use crate::fields::{Grid, WState};
use crate::functionals::EnergyTrace;
use crate::initial::InitialData;
use crate::params::ModelParams;
use crate::similarity::sample_frames;
use crate::solver::{integrate, SolverConfig, Trajectory};
use crate::verifier::effective_dy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub ds: f64,
    /// Similarity-time length covered by the frames.
    pub span: f64,
    pub y_cells: usize,
    /// First frame at `s = -ln T0 + s_offset`.
    pub s_offset: f64,
    /// Frame vertex time; `None` uses the fitted blow-up time of the first pass.
    pub t0: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TwoPassOutput {
    pub estimate: BlowupEstimate,
    pub t0: f64,
    pub calibration: Trajectory,
    pub trajectory: Trajectory,
    pub frames: Vec<WState>,
    pub trace: EnergyTrace,
    pub dy_effective: f64,
    /// Frames dropped because they fall past the first pass's amplitude cap.
    pub clipped: usize,
}

/// Frame times `s0 + k ds`, `k = 0..=span/ds`.
pub fn frame_times(t0: f64, plan: &FramePlan) -> Result<Vec<f64>> {
    if !(plan.ds > 0.0 && plan.span > 0.0) {
        return Err(LabError::Config("frame spacing and span must be positive".into()));
    }
    let steps = (plan.span / plan.ds).round() as usize;
    let s0 = -t0.ln() + plan.s_offset;
    Ok((0..=steps).map(|k| s0 + k as f64 * plan.ds).collect())
}

pub fn run_two_pass(
    data: &InitialData,
    params: &ModelParams,
    grid: Arc<Grid>,
    cfg: &SolverConfig,
    plan: &FramePlan,
) -> Result<TwoPassOutput> {
    let calibration = integrate(data.sample(grid.clone(), params)?, params, cfg)?;
    let estimate = detect_blowup(&calibration, params)?;
    let t0 = plan.t0.unwrap_or(estimate.t_est);
    let t_stop = calibration.t_range().1;
    let all = frame_times(t0, plan)?;
    let s_list: Vec<f64> = all.iter().copied().filter(|s| t0 - (-s).exp() < t_stop).collect();
    let clipped = all.len() - s_list.len();
    if s_list.len() < 3 {
        return Err(LabError::InsufficientData(format!(
            "{} frames before the amplitude cap",
            s_list.len()
        )));
    }
    let mut cfg2 = cfg.clone();
    cfg2.output_times = s_list.iter().map(|s| (t0 - (-s).exp()).max(0.0)).collect();
    cfg2.t_end = *cfg2.output_times.last().unwrap();
    let trajectory = integrate(data.sample(grid.clone(), params)?, params, &cfg2)?;
    let frames = sample_frames(&trajectory, params, 0.0, t0, &s_list, plan.y_cells)?;
    let trace = EnergyTrace::from_frames(&frames, params)?;
    let tau_min = (-s_list[s_list.len() - 1]).exp();
    Ok(TwoPassOutput {
        estimate,
        t0,
        calibration,
        trajectory,
        frames,
        trace,
        dy_effective: effective_dy(plan.y_cells, grid.dx, tau_min),
        clipped,
    })
}

//! Scenario orchestration: evolution, frames, tuning, checks and bundle assembly.

use std::collections::BTreeMap;
use std::sync::Arc;

use blowup_core::blowup::{blowup_graph, fit_delta0, BlowupEstimate, BlowupGraph};
use blowup_core::covering::covering_suite;
use blowup_core::fields::{Boundary, Grid};
use blowup_core::functionals::{EnergyTrace, FrameIntegrals};
use blowup_core::params::{Forcing, ModelParams};
use blowup_core::pipeline::{run_two_pass, TwoPassOutput};
use blowup_core::solver::SolverConfig;
use blowup_core::verifier::{
    self, blowup_criterion_probe, check_dissipation_identity, check_dissipation_identity_with, check_e0_monotone,
    check_lp1_control, check_pohozaev_identity, check_prop_2_2, check_rough_bound, check_theorem_1_1,
    check_theorem_1_1_with, constant_is_stable, dissipation_residual, fit_blowup_rate, fit_lp1_constant,
    pohozaev_residual, tune_constants, CheckOptions, CheckReport, CheckStatus, CriterionRow, Resolution, SourceSign,
    WindowForm,
};
use blowup_core::LabError;
use serde::Serialize;

use crate::bundle::{csv_bytes, float_rows, fmt, json_bytes, Bundle};
use crate::scenario::{CheckKind, Scenario, Tunable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Target of the residual ratio under halving of every resolution.
pub const RICHARDSON_TARGET: f64 = 4.0;
pub const RICHARDSON_TOL: f64 = 0.5;
/// Stationarity bound for ODE data.
pub const STATIONARITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct DerivedConstants {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub eta: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl DerivedConstants {
    pub fn of(params: &ModelParams) -> Self {
        DerivedConstants {
            p: params.p(),
            q: params.q(),
            gamma: params.gamma(),
            kappa: params.kappa(),
            alpha: params.alpha(),
            eta: params.eta(),
            sigma: params.sigma(),
            theta: params.theta(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionSummary {
    pub t0: f64,
    pub estimate: BlowupEstimate,
    pub dr: f64,
    pub dy: f64,
    pub dy_effective: f64,
    pub ds: f64,
    pub frames: usize,
    pub clipped_frames: usize,
    pub steps_calibration: usize,
    pub steps_frames: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub complete: bool,
    pub error: Option<String>,
    pub seed: u64,
    pub resolution_scale: f64,
    pub scenario: Scenario,
    pub params: ModelParams,
    pub constants: DerivedConstants,
    pub tuned: BTreeMap<String, f64>,
    pub evolution: Option<EvolutionSummary>,
    pub checks: Vec<String>,
    pub passed: bool,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub bundle: Bundle,
    pub reports: Vec<CheckReport>,
    pub error: Option<LabError>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.error.is_none() && self.reports.iter().all(|r| r.passed)
    }

    /// Process exit code: 0 all pass, 1 check failure, 2 config error, 3 runtime error.
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(LabError::Config(_)) => 2,
            Some(_) => 3,
            None if self.all_passed() => 0,
            None => 1,
        }
    }
}

struct Context {
    sc: Scenario,
    params: ModelParams,
    run: Option<TwoPassOutput>,
    trace: Option<EnergyTrace>,
    tuned: BTreeMap<String, f64>,
    reports: Vec<CheckReport>,
    bundle: Bundle,
}

pub fn solver_config(sc: &Scenario, params: &ModelParams) -> SolverConfig {
    let mut cfg = SolverConfig::new(params, sc.t_end);
    cfg.cfl = sc.cfl;
    cfg.adapt = sc.adapt;
    cfg.growth_snapshots = Some(sc.growth_snapshots);
    cfg
}

pub fn radial_grid(sc: &Scenario) -> Result<Arc<Grid>, LabError> {
    Ok(Arc::new(Grid::radial(sc.radius, sc.cells)?))
}

/// Evolution plus frames for `sc`, without tuning or checks.
pub fn evolve(sc: &Scenario, params: &ModelParams) -> Result<TwoPassOutput, LabError> {
    run_two_pass(&sc.initial, params, radial_grid(sc)?, &solver_config(sc, params), &sc.frames)
}

pub fn check_options(sc: &Scenario, run: &TwoPassOutput) -> CheckOptions {
    CheckOptions { window: sc.window, dy: run.dy_effective, ..Default::default() }
}

/// Smallest passing σ, θ on the scenario's own run, honouring fixed values.
pub fn tune(sc: &Scenario, run: &TwoPassOutput) -> Result<(f64, f64), LabError> {
    let opts = check_options(sc, run);
    let (mut sigma, mut theta) = tune_constants(&run.trace, &sc.params, &opts)?;
    if let Tunable::Fixed(v) = sc.sigma {
        sigma = v;
    }
    if let Tunable::Fixed(v) = sc.theta {
        theta = v;
    }
    Ok((sigma, theta))
}

pub fn run_scenario(sc: &Scenario) -> RunOutcome {
    let mut ctx = Context {
        sc: sc.clone(),
        params: sc.params.clone(),
        run: None,
        trace: None,
        tuned: BTreeMap::new(),
        reports: Vec::new(),
        bundle: Bundle::default(),
    };
    let result = execute(&mut ctx);
    let error = result.err();
    if let Some(e) = &error {
        log::error!("scenario {}: {e}", sc.name);
    }
    if let Err(e) = finish(&mut ctx, error.as_ref()) {
        return RunOutcome { bundle: ctx.bundle, reports: ctx.reports, error: Some(e) };
    }
    RunOutcome { bundle: ctx.bundle, reports: ctx.reports, error }
}

fn execute(ctx: &mut Context) -> Result<(), LabError> {
    ctx.sc.validate()?;
    if ctx.sc.evolve {
        log::info!("{}: evolving", ctx.sc.name);
        let run = evolve(&ctx.sc, &ctx.params)?;
        let (sigma, theta) = tune(&ctx.sc, &run)?;
        ctx.params = ctx.params.clone().with_sigma(sigma)?.with_theta(theta)?;
        ctx.tuned.insert("sigma".into(), sigma);
        ctx.tuned.insert("theta".into(), theta);
        ctx.trace = Some(run.trace.with_constants(&ctx.params)?);
        write_evolution(ctx, &run)?;
        ctx.run = Some(run);
    }
    let kinds = ctx.sc.checks.clone();
    for kind in kinds {
        log::info!("{}: check {}", ctx.sc.name, kind.name());
        let reports = run_check(ctx, kind).map_err(|e| context(kind, e))?;
        ctx.reports.extend(reports);
    }
    Ok(())
}

fn context(kind: CheckKind, e: LabError) -> LabError {
    match e {
        LabError::Config(m) => LabError::Config(format!("{}: {m}", kind.name())),
        other => LabError::Inconclusive(format!("{}: {other}", kind.name())),
    }
}

fn need<T>(v: &Option<T>, kind: CheckKind) -> Result<&T, LabError> {
    v.as_ref()
        .ok_or_else(|| LabError::Config(format!("{} needs an evolution run", kind.name())))
}

fn negated(mut r: CheckReport, name: &str) -> CheckReport {
    r.name = name.to_string();
    r.passed = r.status == CheckStatus::Fail;
    r.status = if r.passed { CheckStatus::Pass } else { CheckStatus::Fail };
    r.notes.push("negative control: passes when the altered check fails".into());
    r
}

fn run_check(ctx: &mut Context, kind: CheckKind) -> Result<Vec<CheckReport>, LabError> {
    let sc = ctx.sc.clone();
    let params = ctx.params.clone();
    Ok(match kind {
        CheckKind::E0Monotone => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            vec![check_e0_monotone(trace, &check_options(&sc, run))?]
        }
        CheckKind::DissipationIdentity => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            vec![check_dissipation_identity(trace, &check_options(&sc, run))?]
        }
        CheckKind::Theorem11 => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            vec![check_theorem_1_1(trace, &check_options(&sc, run))?]
        }
        CheckKind::Prop22 => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            vec![check_prop_2_2(trace, &params, &check_options(&sc, run))?]
        }
        CheckKind::RoughBound => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            let mut out = Vec::new();
            for &eta in &sc.rough_etas {
                let t = trace.with_constants(&params.clone().with_eta(eta)?)?;
                let mut r = check_rough_bound(&t, &params, &check_options(&sc, run))?;
                r.name = format!("rough_bound_eta_{eta}");
                out.push(r);
            }
            out
        }
        CheckKind::PohozaevIdentity => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            vec![check_pohozaev_identity(trace, &params, &check_options(&sc, run))?]
        }
        CheckKind::Lp1Control => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            let k3 = fit_lp1_constant(trace, sc.eps1, sc.lp1_c, sc.window)?;
            ctx.tuned.insert("k3".into(), k3);
            vec![check_lp1_control(trace, sc.eps1, k3, sc.lp1_c, &check_options(&sc, run))?]
        }
        CheckKind::Convergence => {
            let trace = need(&ctx.trace, kind)?;
            convergence(&sc, &params, trace)?
        }
        CheckKind::NegativeControls => {
            let (run, trace) = (need(&ctx.run, kind)?, need(&ctx.trace, kind)?);
            let opts = check_options(&sc, run);
            let reversed = check_theorem_1_1_with(trace, &opts, WindowForm::TimeReversed)?;
            let mut out = vec![negated(reversed, "control_time_reversed")];
            let literal = check_dissipation_identity_with(trace, &opts, SourceSign::Literal)?;
            if params.forcing() == Forcing::Zero || params.m() == 0.0 {
                let mut r = literal;
                r.name = "control_literal_i2".into();
                r.status = CheckStatus::NotApplicable;
                r.passed = true;
                r.notes.push("I2 vanishes without forcing; both signs agree".into());
                out.push(r);
            } else {
                out.push(negated(literal, "control_literal_i2"));
            }
            out
        }
        CheckKind::Stationarity => {
            let run = need(&ctx.run, kind)?;
            let k = params.kappa();
            let worst = run
                .frames
                .iter()
                .map(|f| {
                    let dw = f.w.iter().fold(0.0f64, |m, w| m.max((w - k).abs()));
                    let ds = f.ws.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    dw + ds
                })
                .fold(0.0f64, f64::max);
            let res = Resolution { dy: run.dy_effective, ds: sc.frames.ds };
            let mut r = report("stationarity", worst, 0.0, worst, STATIONARITY_TOL, res);
            r.details.insert("kappa".into(), k);
            vec![r]
        }
        CheckKind::BlowupRate => {
            let run = need(&ctx.run, kind)?;
            vec![fit_blowup_rate(&run.calibration, &params, Some(run.estimate.t_est), None)?]
        }
        CheckKind::BlowupCriterion => {
            let mut cfg = solver_config(&sc, &params);
            cfg.growth_snapshots = None;
            let (r, rows) = blowup_criterion_probe(
                &params,
                &sc.initial,
                &sc.sweep,
                radial_grid(&sc)?,
                &cfg,
                sc.sweep_t0,
                sc.frames.y_cells,
            )?;
            ctx.bundle.insert("criterion.csv", criterion_csv(&rows)?);
            vec![r]
        }
        CheckKind::BlowupGraph => {
            let spec = sc.graph.clone().expect("validated");
            let grid = Arc::new(Grid::line(spec.half_length, spec.cells, Boundary::Outgoing)?);
            let cfg = solver_config(&sc, &params);
            let graph = blowup_graph(&sc.initial, grid, &spec.centers, &params, &cfg)?;
            ctx.bundle.insert("blowup_graph.csv", graph_csv(&graph)?);
            vec![graph_report(&graph, sc.x0[0])?]
        }
        CheckKind::Covering => {
            let cs = &sc.covering;
            let (reports, cover) = covering_suite(cs.dim, cs.configs, cs.points, cs.grid, &cs.options, sc.seed)?;
            if cs.dim == 1 {
                ctx.bundle.insert("covering_slices.csv", covering_csv(&cover)?);
            }
            reports
        }
    })
}

fn report(name: &str, lhs: f64, rhs: f64, residual: f64, tolerance: f64, resolution: Resolution) -> CheckReport {
    let passed = residual <= tolerance;
    CheckReport {
        name: name.into(),
        passed,
        status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
        lhs,
        rhs,
        residual,
        tolerance,
        resolution,
        window: None,
        paper_window: false,
        notes: Vec::new(),
        details: BTreeMap::new(),
    }
}

/// Residuals at resolution scales 1/2, 1, 2 and the two Richardson ratios; `K3` stability.
fn convergence(sc: &Scenario, params: &ModelParams, trace: &EnergyTrace) -> Result<Vec<CheckReport>, LabError> {
    let coarse_sc = sc.scaled(0.5)?;
    let fine_sc = sc.scaled(2.0)?;
    let coarse = evolve(&coarse_sc, params)?.trace.with_constants(params)?;
    let fine = evolve(&fine_sc, params)?.trace.with_constants(params)?;
    let traces = [&coarse, trace, &fine];
    let mut out = Vec::new();
    let res = Resolution { dy: 1.0 / sc.frames.y_cells as f64, ds: sc.frames.ds };
    let d: Vec<f64> = traces
        .iter()
        .map(|t| dissipation_residual(t, SourceSign::Derived).map(|r| r.0))
        .collect::<Result<_, _>>()?;
    let pz: Vec<f64> = traces
        .iter()
        .map(|t| pohozaev_residual(t, params, sc.window).map(|r| r.0))
        .collect::<Result<_, _>>()?;
    for (name, r) in [("dissipation_convergence", &d), ("pohozaev_convergence", &pz)] {
        let (r1, r2) = (verifier::richardson_ratio(r[0], r[1]), verifier::richardson_ratio(r[1], r[2]));
        let dev = (r1 - RICHARDSON_TARGET).abs().max((r2 - RICHARDSON_TARGET).abs());
        let mut rep = report(name, r1, r2, dev, RICHARDSON_TOL, res);
        rep.details.insert("residual_coarse".into(), r[0]);
        rep.details.insert("residual_base".into(), r[1]);
        rep.details.insert("residual_fine".into(), r[2]);
        out.push(rep);
    }
    let k: Vec<f64> = traces
        .iter()
        .map(|t| fit_lp1_constant(t, sc.eps1, sc.lp1_c, sc.window))
        .collect::<Result<_, _>>()?;
    let stable = constant_is_stable(k[0], k[1]) && constant_is_stable(k[2], k[1]);
    let spread = (k[0] / k[1] - 1.0).abs().max((k[2] / k[1] - 1.0).abs());
    let mut rep = report("lp1_stability", k[0], k[2], spread, 0.5, res);
    rep.passed = stable;
    rep.status = if stable { CheckStatus::Pass } else { CheckStatus::Fail };
    rep.details.insert("k3_base".into(), k[1]);
    out.push(rep);
    Ok(out)
}

fn graph_report(graph: &BlowupGraph, x0: f64) -> Result<CheckReport, LabError> {
    let delta0 = fit_delta0(graph, x0)?;
    let ok = graph.is_lipschitz() && delta0.is_some();
    let res = Resolution { dy: 0.0, ds: 0.0 };
    let mut r = report(
        "blowup_graph",
        graph.lipschitz_excess,
        2.0 * graph.fit_tolerance,
        graph.lipschitz_excess,
        2.0 * graph.fit_tolerance,
        res,
    );
    r.passed = ok;
    r.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    if let Some(d) = delta0 {
        r.details.insert("delta0".into(), d);
    } else {
        r.notes.push(format!("x0 = {x0} admits no non-characteristic slope below 1"));
    }
    Ok(r)
}

fn write_evolution(ctx: &mut Context, run: &TwoPassOutput) -> Result<(), LabError> {
    let trace = ctx.trace.as_ref().expect("trace set before writing");
    let b = &mut ctx.bundle;
    b.insert(
        "trajectory_sup.csv",
        float_rows(&["t", "sup"], run.calibration.sup_history.iter().map(|s| vec![s.t, s.sup]))?,
    );
    let stride = ctx.sc.profile_stride;
    let mut rows = Vec::new();
    for (k, snap) in run.trajectory.snapshots.iter().enumerate() {
        if k % stride != 0 && k + 1 != run.trajectory.snapshots.len() {
            continue;
        }
        for (j, r) in snap.grid.coords().iter().enumerate() {
            rows.push(vec![snap.t, *r, snap.u[j], snap.ut[j]]);
        }
    }
    b.insert("trajectory_profiles.csv", float_rows(&["t", "r", "u", "ut"], rows)?);
    let mut rows = Vec::new();
    for (k, f) in run.frames.iter().enumerate() {
        if k % stride != 0 && k + 1 != run.frames.len() {
            continue;
        }
        for j in 0..f.cells() {
            rows.push(vec![f.s, f.ygrid[j], f.w[j], f.ws[j], f.wy[j]]);
        }
    }
    b.insert("wstate_frames.csv", float_rows(&["s", "y", "w", "ws", "wy"], rows)?);
    b.insert(
        "energy_trace.csv",
        float_rows(&EnergyTrace::CSV_COLUMNS, trace.rows().into_iter().map(|r| r.to_vec()))?,
    );
    b.insert("frame_integrals.csv", integrals_csv(&trace.frames)?);
    Ok(())
}

pub const INTEGRAL_COLUMNS: [&str; 24] = [
    "s",
    "e0",
    "i0",
    "e_eta",
    "i_eta",
    "j_eta",
    "boundary_dissipation",
    "boundary_w_ws",
    "h1l2",
    "ws2",
    "grad_tangential",
    "grad2",
    "w2",
    "wp1",
    "ws_ydw",
    "w_ws",
    "i1",
    "i2",
    "i3",
    "f_w",
    "g_w",
    "ws2_singular_eta",
    "wp1_eta",
    "grad_tangential_eta",
];

fn integrals_csv(frames: &[FrameIntegrals]) -> Result<Vec<u8>, LabError> {
    float_rows(
        &INTEGRAL_COLUMNS,
        frames.iter().map(|f| {
            vec![
                f.s,
                f.e0,
                f.i0,
                f.e_eta,
                f.i_eta,
                f.j_eta,
                f.boundary_dissipation,
                f.boundary_w_ws,
                f.h1l2,
                f.ws2,
                f.grad_tangential,
                f.grad2,
                f.w2,
                f.wp1,
                f.ws_ydw,
                f.w_ws,
                f.i1,
                f.i2,
                f.i3,
                f.f_w,
                f.g_w,
                f.ws2_singular_eta,
                f.wp1_eta,
                f.grad_tangential_eta,
            ]
        }),
    )
}

/// Inverse of the `frame_integrals.csv` writer.
pub fn integrals_from_rows(header: &[String], rows: &[Vec<f64>]) -> Result<Vec<FrameIntegrals>, LabError> {
    if header.iter().map(String::as_str).ne(INTEGRAL_COLUMNS.iter().copied()) {
        return Err(LabError::Format("frame_integrals.csv has unexpected columns".into()));
    }
    rows.iter()
        .map(|r| {
            if r.len() != INTEGRAL_COLUMNS.len() {
                return Err(LabError::Format("short row in frame_integrals.csv".into()));
            }
            Ok(FrameIntegrals {
                s: r[0],
                e0: r[1],
                i0: r[2],
                e_eta: r[3],
                i_eta: r[4],
                j_eta: r[5],
                boundary_dissipation: r[6],
                boundary_w_ws: r[7],
                h1l2: r[8],
                ws2: r[9],
                grad_tangential: r[10],
                grad2: r[11],
                w2: r[12],
                wp1: r[13],
                ws_ydw: r[14],
                w_ws: r[15],
                i1: r[16],
                i2: r[17],
                i3: r[18],
                f_w: r[19],
                g_w: r[20],
                ws2_singular_eta: r[21],
                wp1_eta: r[22],
                grad_tangential_eta: r[23],
            })
        })
        .collect()
}

fn criterion_csv(rows: &[CriterionRow]) -> Result<Vec<u8>, LabError> {
    csv_bytes(
        &["amplitude", "h_first", "g_first", "blew_up", "blowup_time", "applicable"],
        rows.iter().map(|r| {
            vec![
                fmt(r.amplitude),
                fmt(r.h_first),
                fmt(r.g_first),
                r.blew_up.to_string(),
                r.blowup_time.map(fmt).unwrap_or_default(),
                r.applicable.to_string(),
            ]
        }),
    )
}

fn graph_csv(g: &BlowupGraph) -> Result<Vec<u8>, LabError> {
    csv_bytes(
        &["x", "t_blow", "ci", "delta0"],
        (0..g.centers.len()).map(|i| {
            vec![
                fmt(g.centers[i]),
                g.t[i].map(fmt).unwrap_or_default(),
                g.ci[i].map(fmt).unwrap_or_default(),
                g.delta0[i].map(fmt).unwrap_or_default(),
            ]
        }),
    )
}

fn covering_csv(cover: &blowup_core::covering::Cover) -> Result<Vec<u8>, LabError> {
    let mut rows = Vec::new();
    let all = std::iter::once(("parent", &cover.parent)).chain(cover.slices.iter().map(|s| ("sub", s)));
    for (id, (role, slice)) in all.enumerate() {
        for (v, (x, t)) in slice.polygon()?.into_iter().enumerate() {
            rows.push(vec![id.to_string(), role.to_string(), v.to_string(), fmt(x), fmt(t)]);
        }
    }
    csv_bytes(&["slice", "role", "vertex", "xi", "tau"], rows)
}

fn finish(ctx: &mut Context, error: Option<&LabError>) -> Result<(), LabError> {
    let evolution = ctx.run.as_ref().map(|run| EvolutionSummary {
        t0: run.t0,
        estimate: run.estimate,
        dr: ctx.sc.radius / ctx.sc.cells as f64,
        dy: 1.0 / ctx.sc.frames.y_cells as f64,
        dy_effective: run.dy_effective,
        ds: ctx.sc.frames.ds,
        frames: run.frames.len(),
        clipped_frames: run.clipped,
        steps_calibration: run.calibration.steps,
        steps_frames: run.trajectory.steps,
    });
    ctx.bundle.insert("checks.json", json_bytes(&ctx.reports)?);
    let mut files: Vec<String> = ctx.bundle.files.keys().cloned().collect();
    files.push("manifest.json".into());
    files.sort();
    let manifest = Manifest {
        name: ctx.sc.name.clone(),
        version: VERSION.into(),
        complete: error.is_none(),
        error: error.map(|e| e.to_string()),
        seed: ctx.sc.seed,
        resolution_scale: ctx.sc.resolution_scale,
        scenario: ctx.sc.clone(),
        params: ctx.params.clone(),
        constants: DerivedConstants::of(&ctx.params),
        tuned: ctx.tuned.clone(),
        evolution,
        checks: ctx.sc.checks.iter().map(|k| k.name().to_string()).collect(),
        passed: error.is_none() && ctx.reports.iter().all(|r| r.passed),
        files,
    };
    ctx.bundle.insert("manifest.json", json_bytes(&manifest)?);
    Ok(())
}

//! Identity checks on a real perturbed evolution, plus negative controls that must fail.

use std::sync::Arc;

use blowup_core::fields::Grid;
use blowup_core::initial::InitialData;
use blowup_core::params::{Damping, Forcing, ModelParams};
use blowup_core::pipeline::{run_two_pass, FramePlan, TwoPassOutput};
use blowup_core::solver::SolverConfig;
use blowup_core::verifier::{
    check_dissipation_identity, check_dissipation_identity_with, check_pohozaev_identity, check_prop_2_2,
    check_rough_bound, check_theorem_1_1, check_theorem_1_1_with, tune_constants, CheckOptions, SourceSign,
    WindowForm,
};

fn perturbed_run(cells: usize, y_cells: usize, ds: f64) -> (ModelParams, TwoPassOutput) {
    let params = ModelParams::critical(3)
        .unwrap()
        .with_perturbation(0.1, 2.0, Forcing::Power, Damping::Sine)
        .unwrap();
    let grid = Arc::new(Grid::radial(1.0, cells).unwrap());
    let data = InitialData::Gaussian { amplitude: 8.0, width: 0.5, center: 0.0 };
    let cfg = SolverConfig::new(&params, 10.0);
    let plan = FramePlan { ds, span: 3.0, y_cells, s_offset: 0.0, t0: None };
    let out = run_two_pass(&data, &params, grid, &cfg, &plan).unwrap();
    (params, out)
}

#[test]
fn perturbed_run_passes_identities_and_fails_controls() {
    let (params, run) = perturbed_run(2000, 256, 0.02);
    let opts = CheckOptions { dy: run.dy_effective, ..Default::default() };

    let diss = check_dissipation_identity(&run.trace, &opts).unwrap();
    assert!(diss.passed, "{diss:?}");
    let poh = check_pohozaev_identity(&run.trace, &params, &opts).unwrap();
    assert!(poh.passed, "{poh:?}");

    let (sigma, theta) = tune_constants(&run.trace, &params, &opts).unwrap();
    let tuned = params.clone().with_sigma(sigma).unwrap().with_theta(theta).unwrap();
    let trace = run.trace.with_constants(&tuned).unwrap();
    let lyap = check_theorem_1_1(&trace, &opts).unwrap();
    assert!(lyap.passed, "{lyap:?}");
    assert!(!lyap.paper_window);
    assert!(check_prop_2_2(&trace, &tuned, &opts).unwrap().passed);

    for eta in [0.2, 0.5] {
        let t = trace.with_constants(&tuned.clone().with_eta(eta).unwrap()).unwrap();
        let r = check_rough_bound(&t, &tuned, &opts).unwrap();
        assert!(r.passed, "eta {eta}: {r:?}");
    }

    let reversed = check_theorem_1_1_with(&trace, &opts, WindowForm::TimeReversed).unwrap();
    assert!(!reversed.passed, "time-reversed inequality should fail: {reversed:?}");
    let literal = check_dissipation_identity_with(&run.trace, &opts, SourceSign::Literal).unwrap();
    assert!(!literal.passed, "literal I2 sign should fail: {literal:?}");
}

#[test]
fn sigma_zero_suffices_without_perturbation() {
    let params = ModelParams::critical(3).unwrap();
    let grid = Arc::new(Grid::radial(1.0, 1000).unwrap());
    let data = InitialData::Gaussian { amplitude: 8.0, width: 0.5, center: 0.0 };
    let cfg = SolverConfig::new(&params, 10.0);
    let plan = FramePlan { ds: 0.04, span: 3.0, y_cells: 128, s_offset: 0.0, t0: None };
    let run = run_two_pass(&data, &params, grid, &cfg, &plan).unwrap();
    let opts = CheckOptions { dy: run.dy_effective, ..Default::default() };
    let (sigma, _) = tune_constants(&run.trace, &params, &opts).unwrap();
    assert_eq!(sigma, 0.0);
}

//! Scenario files, run orchestration and artifact bundles for the blow-up lab.

// Guards are written as `!(x > 0.0)` on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod run;
pub mod scenario;

use std::path::Path;

use blowup_core::functionals::EnergyTrace;
use blowup_core::params::ModelParams;
use blowup_core::verifier::{
    check_dissipation_identity, check_e0_monotone, check_lp1_control, check_pohozaev_identity, check_prop_2_2,
    check_rough_bound, check_theorem_1_1, CheckOptions, CheckReport,
};
use blowup_core::LabError;

use crate::bundle::{read_float_csv, Bundle};
use crate::run::integrals_from_rows;
use crate::scenario::{CheckKind, Scenario};

pub use crate::run::{run_scenario, RunOutcome};

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, LabError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    Scenario::from_text(&text).map_err(|e| match e {
        LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn list_checks() -> Vec<(&'static str, &'static str)> {
    CheckKind::ALL.iter().map(|k| (k.name(), k.description())).collect()
}

fn json_err(e: serde_json::Error) -> LabError {
    LabError::Format(e.to_string())
}

/// Re-evaluates the trace-based checks of a bundle from its stored frame integrals and
/// returns them together with the stored reports of every other check.
pub fn check_bundle(dir: &Path) -> Result<Vec<CheckReport>, LabError> {
    let bundle = Bundle::read(dir)?;
    let manifest: serde_json::Value = serde_json::from_slice(bundle.get("manifest.json")?).map_err(json_err)?;
    if manifest["complete"] != serde_json::Value::Bool(true) {
        return Err(LabError::Format(format!("bundle {} is incomplete", dir.display())));
    }
    let stored: Vec<CheckReport> = serde_json::from_slice(bundle.get("checks.json")?).map_err(json_err)?;
    if !bundle.files.contains_key("frame_integrals.csv") {
        return Ok(stored);
    }
    let params: ModelParams = serde_json::from_value(manifest["params"].clone()).map_err(json_err)?;
    let sc = &manifest["scenario"];
    let num = |v: &serde_json::Value, what: &str| {
        v.as_f64().ok_or_else(|| LabError::Format(format!("manifest lacks {what}")))
    };
    let opts = CheckOptions {
        window: num(&sc["window"], "window")?,
        dy: num(&manifest["evolution"]["dy_effective"], "dy_effective")?,
        ..Default::default()
    };
    let (header, rows) = read_float_csv(bundle.get("frame_integrals.csv")?)?;
    let trace = EnergyTrace::from_integrals(integrals_from_rows(&header, &rows)?, &params)?;
    let checks: Vec<String> = serde_json::from_value(manifest["checks"].clone()).map_err(json_err)?;
    let mut out = Vec::new();
    let mut recomputed = std::collections::BTreeSet::new();
    for name in &checks {
        let kind = CheckKind::parse(name)?;
        let reports = match kind {
            CheckKind::E0Monotone => vec![check_e0_monotone(&trace, &opts)?],
            CheckKind::DissipationIdentity => vec![check_dissipation_identity(&trace, &opts)?],
            CheckKind::Theorem11 => vec![check_theorem_1_1(&trace, &opts)?],
            CheckKind::Prop22 => vec![check_prop_2_2(&trace, &params, &opts)?],
            CheckKind::PohozaevIdentity => vec![check_pohozaev_identity(&trace, &params, &opts)?],
            CheckKind::RoughBound => {
                let etas: Vec<f64> = serde_json::from_value(sc["rough_etas"].clone()).map_err(json_err)?;
                let mut v = Vec::new();
                for eta in etas {
                    let t = trace.with_constants(&params.clone().with_eta(eta)?)?;
                    let mut r = check_rough_bound(&t, &params, &opts)?;
                    r.name = format!("rough_bound_eta_{eta}");
                    v.push(r);
                }
                v
            }
            CheckKind::Lp1Control => {
                let k3 = num(&manifest["tuned"]["k3"], "k3")?;
                let (eps1, c) = (num(&sc["eps1"], "eps1")?, num(&sc["lp1_c"], "lp1_c")?);
                vec![check_lp1_control(&trace, eps1, k3, c, &opts)?]
            }
            _ => continue,
        };
        for r in &reports {
            recomputed.insert(r.name.clone());
        }
        out.extend(reports);
    }
    out.extend(stored.into_iter().filter(|r| !recomputed.contains(&r.name)));
    Ok(out)
}

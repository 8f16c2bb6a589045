//! Scenario description, parsed from a flat config file.

use blowup_core::covering::CoverOptions;
use blowup_core::initial::InitialData;
use blowup_core::params::{Damping, Forcing, ModelParams};
use blowup_core::pipeline::FramePlan;
use blowup_core::verifier::DESK_WINDOW;
use blowup_core::LabError;
use serde::Serialize;

use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    E0Monotone,
    DissipationIdentity,
    Theorem11,
    Prop22,
    RoughBound,
    PohozaevIdentity,
    Lp1Control,
    Convergence,
    NegativeControls,
    Stationarity,
    BlowupRate,
    BlowupCriterion,
    BlowupGraph,
    Covering,
}

impl CheckKind {
    pub const ALL: [CheckKind; 14] = [
        CheckKind::E0Monotone,
        CheckKind::DissipationIdentity,
        CheckKind::Theorem11,
        CheckKind::Prop22,
        CheckKind::RoughBound,
        CheckKind::PohozaevIdentity,
        CheckKind::Lp1Control,
        CheckKind::Convergence,
        CheckKind::NegativeControls,
        CheckKind::Stationarity,
        CheckKind::BlowupRate,
        CheckKind::BlowupCriterion,
        CheckKind::BlowupGraph,
        CheckKind::Covering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::E0Monotone => "e0_monotone",
            CheckKind::DissipationIdentity => "dissipation_identity",
            CheckKind::Theorem11 => "theorem_1_1",
            CheckKind::Prop22 => "prop_2_2",
            CheckKind::RoughBound => "rough_bound",
            CheckKind::PohozaevIdentity => "pohozaev_identity",
            CheckKind::Lp1Control => "lp1_control",
            CheckKind::Convergence => "convergence",
            CheckKind::NegativeControls => "negative_controls",
            CheckKind::Stationarity => "stationarity",
            CheckKind::BlowupRate => "blowup_rate",
            CheckKind::BlowupCriterion => "blowup_criterion",
            CheckKind::BlowupGraph => "blowup_graph",
            CheckKind::Covering => "covering",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            CheckKind::E0Monotone => "E0(s) non-increasing up to discretisation drift",
            CheckKind::DissipationIdentity => "d/ds(E0+I0) = -boundary dissipation + I1 - I2 + I3",
            CheckKind::Theorem11 => "windowed Lyapunov inequality for H = E0 + I0 + sigma e^{-gamma s}",
            CheckKind::Prop22 => "decrease of G_eta with three explicit dissipation terms",
            CheckKind::RoughBound => "growth slope of windowed space-time integrals <= eta(p+3)/2 + 0.05",
            CheckKind::PohozaevIdentity => "identity obtained by multiplying the similarity equation by w",
            CheckKind::Lp1Control => "space-time L^{p+1} control with K3 fitted on the run",
            CheckKind::Convergence => "Richardson factor 4 +- 0.5 of the identity residuals",
            CheckKind::NegativeControls => "altered identities that must fail",
            CheckKind::Stationarity => "|w - kappa| + |w_s| small on ODE data",
            CheckKind::BlowupRate => "log-log slope of the sup norm and band of scaled norms",
            CheckKind::BlowupCriterion => "H < 0 at the first frame implies blow-up before T0",
            CheckKind::BlowupGraph => "line run: 1-Lipschitz T(x) and non-characteristic centre",
            CheckKind::Covering => "slice inclusions, cover inequality and k(delta0) scale invariance",
        }
    }

    pub fn parse(s: &str) -> Result<Self, LabError> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::Config(format!("unknown check `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tunable {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSpec {
    pub centers: Vec<f64>,
    pub half_length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringSpec {
    pub dim: usize,
    pub configs: usize,
    pub points: usize,
    pub grid: usize,
    pub options: CoverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub sigma: Tunable,
    pub theta: Tunable,
    pub initial: InitialData,
    pub seed: u64,
    pub evolve: bool,
    pub radius: f64,
    pub cells: usize,
    pub cfl: f64,
    pub adapt: f64,
    pub t_end: f64,
    pub growth_snapshots: f64,
    pub frames: FramePlan,
    pub x0: Vec<f64>,
    pub window: f64,
    pub checks: Vec<CheckKind>,
    pub sweep: Vec<f64>,
    pub sweep_t0: f64,
    pub eps1: f64,
    pub lp1_c: f64,
    pub rough_etas: Vec<f64>,
    pub profile_stride: usize,
    pub graph: Option<GraphSpec>,
    pub covering: CoveringSpec,
    pub resolution_scale: f64,
}

fn cfg_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl Scenario {
    pub fn from_text(text: &str) -> Result<Self, LabError> {
        Self::from_config(&Config::parse(text)?)
    }

    pub fn from_config(c: &Config) -> Result<Self, LabError> {
        let name = c.string("name")?;
        let dim: usize = c.get_or("dim", 3)?;
        let mut params = match c.raw("p") {
            None | Some("critical") => ModelParams::critical(dim)?,
            Some(v) => {
                let p: f64 = v.parse().map_err(|_| cfg_err(format!("key `p`: cannot parse `{v}`")))?;
                ModelParams::with_exponent(dim, p)?
            }
        };
        let m: f64 = c.get_or("m", 0.0)?;
        let forcing = match c.string_or("forcing", "zero").as_str() {
            "zero" => Forcing::Zero,
            "power" => Forcing::Power,
            other => return Err(cfg_err(format!("unknown forcing `{other}`"))),
        };
        let damping = match c.string_or("damping", "zero").as_str() {
            "zero" => Damping::Zero,
            "sine" => Damping::Sine,
            "linear" => Damping::Linear { softening: c.get_or("damping_softening", 0.0)? },
            other => return Err(cfg_err(format!("unknown damping `{other}`"))),
        };
        if let Some(q) = c.get::<f64>("q")? {
            params = params.with_perturbation(m, q, forcing, damping)?;
        } else if m != 0.0 || forcing != Forcing::Zero || damping != Damping::Zero {
            let q = params.q();
            params = params.with_perturbation(m, q, forcing, damping)?;
        }
        params = params.with_eta(c.get_or("eta", 0.5)?)?;
        let tunable = |key: &str| -> Result<Tunable, LabError> {
            match c.raw(key) {
                None | Some("auto") => Ok(Tunable::Auto),
                Some(v) => v
                    .parse()
                    .map(Tunable::Fixed)
                    .map_err(|_| cfg_err(format!("key `{key}`: expected `auto` or a number, got `{v}`"))),
            }
        };
        let sigma = tunable("sigma")?;
        let theta = tunable("theta")?;
        if let Tunable::Fixed(v) = sigma {
            params = params.with_sigma(v)?;
        }
        if let Tunable::Fixed(v) = theta {
            params = params.with_theta(v)?;
        }

        let seed: u64 = c.get_or("seed", 0)?;
        let initial = match c.string_or("initial", "gaussian").as_str() {
            "zero" => InitialData::Zero,
            "constant" => InitialData::Constant {
                amplitude: c.get_or("amplitude", 1.0)?,
                velocity: c.get_or("velocity", 0.0)?,
            },
            "gaussian" => InitialData::Gaussian {
                amplitude: c.get_or("amplitude", 1.0)?,
                width: c.get_or("width", 0.5)?,
                center: c.get_or("center", 0.0)?,
            },
            "ode-profile" => InitialData::OdeProfile { t_blow: c.get_or("t_blow", 1.0)? },
            "random-smooth" => InitialData::RandomSmooth {
                seed,
                amplitude: c.get_or("amplitude", 1.0)?,
                width: c.get_or("width", 0.5)?,
                modes: c.get_or("modes", 4)?,
            },
            other => return Err(cfg_err(format!("unknown initial data family `{other}`"))),
        };

        let t0 = match c.raw("t0") {
            None | Some("fitted") => None,
            Some(v) => Some(v.parse().map_err(|_| cfg_err(format!("key `t0`: expected `fitted` or a number, got `{v}`")))?),
        };
        let frames = FramePlan {
            ds: c.get_or("ds", 0.01)?,
            span: c.get_or("span", 3.0)?,
            y_cells: c.get_or("y_cells", 512)?,
            s_offset: c.get_or("s_offset", 0.0)?,
            t0,
        };
        let checks = c
            .list::<String>("checks")?
            .unwrap_or_default()
            .iter()
            .map(|s| CheckKind::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        let graph = match c.list::<f64>("graph_centers")? {
            None => None,
            Some(centers) => Some(GraphSpec {
                centers,
                half_length: c.get_or("graph_half_length", 4.0)?,
                cells: c.get_or("graph_cells", 4000)?,
            }),
        };
        let covering = CoveringSpec {
            dim: c.get_or("covering_dim", 1)?,
            configs: c.get_or("covering_configs", 20)?,
            points: c.get_or("covering_points", 10_000)?,
            grid: c.get_or("covering_grid", 200)?,
            options: CoverOptions { basis_per_axis: c.get_or("covering_basis", 21)? },
        };
        let sc = Scenario {
            name,
            params,
            sigma,
            theta,
            initial,
            seed,
            evolve: c.get_or("evolve", true)?,
            radius: c.get_or("radius", 1.0)?,
            cells: c.get_or("cells", 4000)?,
            cfl: c.get_or("cfl", 0.5)?,
            adapt: c.get_or("adapt", 0.02)?,
            t_end: c.get_or("t_end", 10.0)?,
            growth_snapshots: c.get_or("growth_snapshots", 1.05)?,
            frames,
            x0: c.list("x0")?.unwrap_or_else(|| vec![0.0]),
            window: c.get_or("window", DESK_WINDOW)?,
            checks,
            sweep: c.list("sweep")?.unwrap_or_default(),
            sweep_t0: c.get_or("sweep_t0", 0.5)?,
            eps1: c.get_or("eps1", 0.5)?,
            lp1_c: c.get_or("lp1_c", 1.0)?,
            rough_etas: c.list("rough_etas")?.unwrap_or_else(|| vec![0.2, 0.5]),
            profile_stride: c.get_or("profile_stride", 25)?,
            graph,
            covering,
            resolution_scale: 1.0,
        };
        let unused = c.unused();
        if !unused.is_empty() {
            return Err(cfg_err(format!("unknown keys: {}", unused.join(", "))));
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let positive = [
            ("radius", self.radius),
            ("cfl", self.cfl),
            ("t_end", self.t_end),
            ("ds", self.frames.ds),
            ("span", self.frames.span),
            ("window", self.window),
            ("sweep_t0", self.sweep_t0),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(cfg_err(format!("`{k}` must be positive, got {v}")));
            }
        }
        if self.cells < 4 || self.frames.y_cells < 3 {
            return Err(cfg_err("need at least 4 radial cells and 3 y cells"));
        }
        if !(self.adapt >= 0.0) || !(self.growth_snapshots > 1.0) {
            return Err(cfg_err("`adapt` must be >= 0 and `growth_snapshots` > 1"));
        }
        if self.x0.iter().any(|&x| x != 0.0) {
            return Err(cfg_err("radial scenarios are centred at x0 = 0"));
        }
        if !(self.eps1 > 0.0 && self.eps1 < 1.0) || !(self.lp1_c >= 0.0) {
            return Err(cfg_err("`eps1` must lie in (0,1) and `lp1_c` be >= 0"));
        }
        if self.profile_stride == 0 {
            return Err(cfg_err("`profile_stride` must be positive"));
        }
        let steps = self.window / self.frames.ds;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(cfg_err("`window` must be a multiple of `ds`"));
        }
        if !self.evolve
            && self.checks.iter().any(|k| !matches!(k, CheckKind::Covering | CheckKind::BlowupCriterion))
        {
            return Err(cfg_err("`evolve = false` only supports the covering and blowup_criterion checks"));
        }
        if self.checks.contains(&CheckKind::BlowupCriterion) && self.sweep.is_empty() {
            return Err(cfg_err("blowup_criterion needs a `sweep` list of amplitude factors"));
        }
        if self.checks.contains(&CheckKind::BlowupGraph) && self.graph.is_none() {
            return Err(cfg_err("blowup_graph needs `graph_centers`"));
        }
        if self.checks.contains(&CheckKind::Covering) && !(1..=3).contains(&self.covering.dim) {
            return Err(cfg_err("`covering_dim` must be 1, 2 or 3"));
        }
        Ok(())
    }

    /// Refines space, similarity grid, frame spacing and the near-blow-up step by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, LabError> {
        if !(factor > 0.0) {
            return Err(cfg_err(format!("resolution scale must be positive, got {factor}")));
        }
        let mut s = self.clone();
        s.cells = ((self.cells as f64) * factor).round() as usize;
        s.frames.y_cells = ((self.frames.y_cells as f64) * factor).round() as usize;
        s.frames.ds = self.frames.ds / factor;
        s.adapt = self.adapt / factor;
        s.resolution_scale = self.resolution_scale * factor;
        s.validate()?;
        Ok(s)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        if let InitialData::RandomSmooth { amplitude, width, modes, .. } = s.initial {
            s.initial = InitialData::RandomSmooth { seed, amplitude, width, modes };
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario() {
        let s = Scenario::from_text("name = t\nchecks = e0_monotone, theorem_1_1").unwrap();
        assert_eq!(s.checks, vec![CheckKind::E0Monotone, CheckKind::Theorem11]);
        assert_eq!(s.params.p(), 3.0);
        assert_eq!(s.sigma, Tunable::Auto);
    }

    #[test]
    fn hypothesis_violation_is_a_config_error() {
        let e = Scenario::from_text("name = t\nm = 0.1\nq = 3\nforcing = power").unwrap_err();
        assert!(matches!(e, LabError::Config(ref m) if m.contains("(H_f)")), "{e}");
    }

    #[test]
    fn unknown_keys_and_checks() {
        assert!(Scenario::from_text("name = t\nbogus = 1").is_err());
        assert!(Scenario::from_text("name = t\nchecks = nope").is_err());
        assert!(Scenario::from_text("name = t\nwindow = 0.015").is_err());
    }

    #[test]
    fn scaling_refines_everything() {
        let s = Scenario::from_text("name = t").unwrap().scaled(2.0).unwrap();
        assert_eq!(s.cells, 8000);
        assert_eq!(s.frames.y_cells, 1024);
        assert_eq!(s.frames.ds, 0.005);
    }
}

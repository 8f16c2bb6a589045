//! Weighted energy functionals of a radial similarity-variable state.
//!
//! For radial fields `|∇w|^2 - (y·∇w)^2 = (1 - |y|^2) w_y^2` and `y·∇w = |y| w_y`.
//! All integrals use [`crate::quadrature`] cell-moment weights; `ρ_η = (1-|y|^2)^η`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fields::WState;
use crate::params::{sphere_area, Damping, Forcing, ModelParams};
use crate::quadrature::{cell_weights, dot, validate_ygrid, QuadratureRule};

fn weights(wst: &WState, dim: usize, beta: f64) -> std::sync::Arc<Vec<f64>> {
    cell_weights(wst.cells(), dim, beta, QuadratureRule::CellMoments)
}

fn check(wst: &WState, eta: f64) -> Result<()> {
    validate_ygrid(&wst.ygrid)?;
    if !(0.0..1.0).contains(&eta) {
        return domain(format!("weight exponent η must lie in [0, 1), got {eta}"));
    }
    Ok(())
}

/// `E_η(w)`; `η = 0` gives `E_0`.
pub fn energy_e(wst: &WState, params: &ModelParams, eta: f64) -> Result<f64> {
    check(wst, eta)?;
    let dim = params.dim();
    let p = params.p();
    let c2 = (p + 1.0) / ((p - 1.0) * (p - 1.0));
    let bulk: Vec<f64> = (0..wst.cells())
        .map(|j| {
            let w = wst.w[j];
            0.5 * wst.ws[j] * wst.ws[j] + c2 * w * w - params.abs_pow_p1(w) / (p + 1.0)
        })
        .collect();
    let grad: Vec<f64> = wst.wy.iter().map(|v| 0.5 * v * v).collect();
    Ok(dot(&bulk, &weights(wst, dim, eta)) + dot(&grad, &weights(wst, dim, eta + 1.0)))
}

/// `λ^{-(p+1)} F(λ w)` with `λ = e^{2s/(p-1)}`, evaluated without forming `λ`.
fn scaled_source_potential(params: &ModelParams, s: f64, w: f64) -> f64 {
    match params.forcing() {
        Forcing::Zero => 0.0,
        Forcing::Power => {
            let q = params.q();
            let decay = (-(params.p() - q) * params.scaling_exponent() * s).exp();
            params.m() * decay * w.abs().powf(q + 1.0) / (q + 1.0)
        }
    }
}

/// `λ^{-p} f(λ w)` with `λ = e^{2s/(p-1)}`.
fn scaled_source(params: &ModelParams, s: f64, w: f64) -> f64 {
    match params.forcing() {
        Forcing::Zero => 0.0,
        Forcing::Power => {
            let q = params.q();
            let decay = (-(params.p() - q) * params.scaling_exponent() * s).exp();
            params.m() * decay * w.abs().powf(q - 1.0) * w
        }
    }
}

/// `e^{-2ps/(p-1)} g(e^{(p+1)s/(p-1)} v)`.
fn scaled_damping(params: &ModelParams, s: f64, v: f64) -> f64 {
    if !params.has_damping() {
        return 0.0;
    }
    let a = params.scaling_exponent();
    let p = params.p();
    match params.damping() {
        Damping::Zero => 0.0,
        // linear in v: the exponentials combine to e^{-s}
        Damping::Linear { .. } => (-s).exp() * params.perturbation_g(v),
        Damping::Sine => (-a * p * s).exp() * params.perturbation_g((a * (p + 1.0) * 0.5 * s).exp() * v),
    }
}

/// `I_η(w) = -e^{-2(p+1)s/(p-1)} ∫ F(e^{2s/(p-1)} w) ρ_η`.
pub fn source_i(wst: &WState, params: &ModelParams, eta: f64) -> Result<f64> {
    check(wst, eta)?;
    let vals: Vec<f64> = wst.w.iter().map(|&w| scaled_source_potential(params, wst.s, w)).collect();
    Ok(-dot(&vals, &weights(wst, params.dim(), eta)))
}

/// `J_η(w) = -η ∫ w w_s ρ_η + (Nη/2) ∫ w^2 ρ_η`.
pub fn coupling_j(wst: &WState, params: &ModelParams, eta: f64) -> Result<f64> {
    check(wst, eta)?;
    if eta == 0.0 {
        return Ok(0.0);
    }
    let half_n = 0.5 * params.dim() as f64;
    let vals: Vec<f64> = (0..wst.cells())
        .map(|j| eta * (half_n * wst.w[j] * wst.w[j] - wst.w[j] * wst.ws[j]))
        .collect();
    Ok(dot(&vals, &weights(wst, params.dim(), eta)))
}

/// `H_η = E_η + I_η + J_η`.
pub fn total_h_eta(wst: &WState, params: &ModelParams, eta: f64) -> Result<f64> {
    Ok(energy_e(wst, params, eta)? + source_i(wst, params, eta)? + coupling_j(wst, params, eta)?)
}

/// `G_η = (H_η + θ) e^{-η(p+3)s/2}`.
pub fn scaled_g_eta(h_eta: f64, s: f64, eta: f64, theta: f64, p: f64) -> f64 {
    (h_eta + theta) * (-eta * (p + 3.0) * s / 2.0).exp()
}

/// `H = E_0 + I_0 + σ e^{-γs}`.
pub fn lyapunov_h(wst: &WState, params: &ModelParams) -> Result<f64> {
    Ok(energy_e(wst, params, 0.0)? + source_i(wst, params, 0.0)? + params.sigma() * (-params.gamma() * wst.s).exp())
}

/// `∫_{∂B} (∂_s w)^2 dσ` with `w_s` extrapolated to `|y| = 1`.
pub fn boundary_dissipation(wst: &WState, dim: usize) -> f64 {
    let b = wst.ws_boundary();
    sphere_area(dim) * b * b
}

/// Right-hand side minus left-hand side of the Hardy-type inequality
/// `∫ w^2 |y|^2 ρ_η/(1-|y|^2) <= η^{-2} ∫ |∇w|^2 (1-|y|^2) ρ_η + (N/η) ∫ w^2 ρ_η`.
pub fn hardy_gap(ygrid: &[f64], w: &[f64], wy: &[f64], eta: f64, dim: usize) -> Result<f64> {
    validate_ygrid(ygrid)?;
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("Hardy gap needs η in (0,1), got {eta}"));
    }
    let n = ygrid.len();
    let wgt = |beta: f64| cell_weights(n, dim, beta, QuadratureRule::CellMoments);
    let lhs_f: Vec<f64> = (0..n).map(|j| w[j] * w[j] * ygrid[j] * ygrid[j]).collect();
    let grad: Vec<f64> = wy.iter().map(|v| v * v).collect();
    let sq: Vec<f64> = w.iter().map(|v| v * v).collect();
    let lhs = dot(&lhs_f, &wgt(eta - 1.0));
    let rhs = dot(&grad, &wgt(eta + 1.0)) / (eta * eta) + dim as f64 / eta * dot(&sq, &wgt(eta));
    Ok(rhs - lhs)
}

/// Smallest `C` making `C_j ∫ w^2 ρ_η <= c ∫ |w|^{p+1} ρ_η + C` hold for constant fields,
/// with `c = η(p-1)/(8(p+1))`, together with the pointwise optimum value.
pub fn jensen_constant(eta: f64, p: f64, c_j: f64) -> (f64, f64) {
    let c = eta * (p - 1.0) / (8.0 * (p + 1.0));
    let a_star = (2.0 * c_j / (c * (p + 1.0))).powf(1.0 / (p - 1.0));
    let sup = c_j * a_star * a_star - c * a_star.powf(p + 1.0);
    (sup, a_star)
}

/// `c ∫ |w|^{p+1} ρ_η + C - C_j ∫ w^2 ρ_η`, which is non-negative for every field.
pub fn jensen_gap(ygrid: &[f64], w: &[f64], eta: f64, p: f64, c_j: f64, dim: usize) -> Result<f64> {
    validate_ygrid(ygrid)?;
    if !(c_j > 0.0) {
        return domain("Jensen constant C_j must be positive");
    }
    if !(eta > 0.0 && eta < 1.0) {
        return domain(format!("Jensen gap needs η in (0,1), got {eta}"));
    }
    let c = eta * (p - 1.0) / (8.0 * (p + 1.0));
    let (sup, _) = jensen_constant(eta, p, c_j);
    let pointwise: Vec<f64> = w
        .iter()
        .map(|v| sup - c_j * v * v + c * v.abs().powf(p + 1.0))
        .collect();
    Ok(dot(&pointwise, &cell_weights(ygrid.len(), dim, eta, QuadratureRule::CellMoments)))
}

/// `‖w‖_{H^1(B)} + ‖∂_s w‖_{L^2(B)}`, unweighted.
pub fn h1l2_norm(wst: &WState, dim: usize) -> Result<f64> {
    validate_ygrid(&wst.ygrid)?;
    let w0 = weights(wst, dim, 0.0);
    let h1: Vec<f64> = (0..wst.cells()).map(|j| wst.w[j] * wst.w[j] + wst.wy[j] * wst.wy[j]).collect();
    let l2: Vec<f64> = wst.ws.iter().map(|v| v * v).collect();
    Ok(dot(&h1, &w0).sqrt() + dot(&l2, &w0).sqrt())
}

/// Every ball integral of one frame needed by the functionals and the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameIntegrals {
    pub s: f64,
    pub e0: f64,
    pub i0: f64,
    pub e_eta: f64,
    pub i_eta: f64,
    pub j_eta: f64,
    pub boundary_dissipation: f64,
    /// `w(1) ∂_s w(1) |S^{N-1}|`.
    pub boundary_w_ws: f64,
    pub h1l2: f64,
    /// Unweighted integrals.
    pub ws2: f64,
    pub grad_tangential: f64,
    pub grad2: f64,
    pub w2: f64,
    pub wp1: f64,
    pub ws_ydw: f64,
    pub w_ws: f64,
    /// Perturbation integrals.
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub f_w: f64,
    pub g_w: f64,
    /// `ρ_η`-weighted dissipation integrals.
    pub ws2_singular_eta: f64,
    pub wp1_eta: f64,
    pub grad_tangential_eta: f64,
}

impl FrameIntegrals {
    pub fn compute(wst: &WState, params: &ModelParams) -> Result<Self> {
        let eta = params.eta();
        check(wst, eta)?;
        let dim = params.dim();
        let p = params.p();
        let a = params.scaling_exponent();
        let s = wst.s;
        let n = wst.cells();
        let w0 = weights(wst, dim, 0.0);
        let w1 = weights(wst, dim, 1.0);
        let we = weights(wst, dim, eta);
        let wem = weights(wst, dim, eta - 1.0);
        let wep = weights(wst, dim, eta + 1.0);
        let integrate = |f: &dyn Fn(usize) -> f64, wgt: &[f64]| -> f64 { (0..n).map(|j| f(j) * wgt[j]).sum() };
        let (w, ws, wy, y) = (&wst.w, &wst.ws, &wst.wy, &wst.ygrid);

        let ws2 = integrate(&|j| ws[j] * ws[j], &w0);
        let grad_tangential = integrate(&|j| wy[j] * wy[j], &w1);
        let grad2 = integrate(&|j| wy[j] * wy[j], &w0);
        let w2 = integrate(&|j| w[j] * w[j], &w0);
        let wp1 = integrate(&|j| params.abs_pow_p1(w[j]), &w0);
        let ws_ydw = integrate(&|j| ws[j] * y[j] * wy[j], &w0);
        let w_ws = integrate(&|j| w[j] * ws[j], &w0);
        let f_pot = integrate(&|j| scaled_source_potential(params, s, w[j]), &w0);
        let f_w = integrate(&|j| scaled_source(params, s, w[j]) * w[j], &w0);
        let g_arg = |j: usize| ws[j] + y[j] * wy[j] + a * w[j];
        let i3 = integrate(&|j| scaled_damping(params, s, g_arg(j)) * ws[j], &w0);
        let g_w = integrate(&|j| scaled_damping(params, s, g_arg(j)) * w[j], &w0);

        let c2 = (p + 1.0) / ((p - 1.0) * (p - 1.0));
        let e0 = 0.5 * ws2 + 0.5 * grad_tangential + c2 * w2 - wp1 / (p + 1.0);
        let e_eta = energy_e(wst, params, eta)?;
        let i_eta = source_i(wst, params, eta)?;
        let j_eta = coupling_j(wst, params, eta)?;
        let area = sphere_area(dim);

        Ok(FrameIntegrals {
            s,
            e0,
            i0: -f_pot,
            e_eta,
            i_eta,
            j_eta,
            boundary_dissipation: boundary_dissipation(wst, dim),
            boundary_w_ws: area * wst.w_boundary() * wst.ws_boundary(),
            h1l2: (w2 + grad2).sqrt() + ws2.sqrt(),
            ws2,
            grad_tangential,
            grad2,
            w2,
            wp1,
            ws_ydw,
            w_ws,
            i1: 2.0 * (p + 1.0) / (p - 1.0) * f_pot,
            i2: a * f_w,
            i3,
            f_w,
            g_w,
            ws2_singular_eta: integrate(&|j| ws[j] * ws[j], &wem),
            wp1_eta: integrate(&|j| params.abs_pow_p1(w[j]), &we),
            grad_tangential_eta: integrate(&|j| wy[j] * wy[j], &wep),
        })
    }

    pub fn h_eta(&self) -> f64 {
        self.e_eta + self.i_eta + self.j_eta
    }
}

/// Time series of every functional along the similarity time `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub s: Vec<f64>,
    pub e0: Vec<f64>,
    pub e_eta: Vec<f64>,
    pub i_eta: Vec<f64>,
    pub j_eta: Vec<f64>,
    pub h_eta: Vec<f64>,
    pub g_eta: Vec<f64>,
    pub h_lyap: Vec<f64>,
    pub boundary_dissipation: Vec<f64>,
    pub h1l2_norm: Vec<f64>,
    pub eta: f64,
    pub sigma: f64,
    pub theta: f64,
    pub gamma: f64,
    /// Per-frame integrals the trace was built from.
    #[serde(skip)]
    pub frames: Vec<FrameIntegrals>,
}

impl EnergyTrace {
    pub fn from_frames(frames: &[WState], params: &ModelParams) -> Result<Self> {
        let integrals: Vec<FrameIntegrals> = frames
            .par_iter()
            .map(|f| FrameIntegrals::compute(f, params))
            .collect::<Result<_>>()?;
        Self::from_integrals(integrals, params)
    }

    pub fn from_integrals(frames: Vec<FrameIntegrals>, params: &ModelParams) -> Result<Self> {
        if frames.windows(2).any(|w| !(w[1].s > w[0].s)) {
            return domain("energy trace needs strictly increasing s");
        }
        let p = params.p();
        let (eta, sigma, theta, gamma) = (params.eta(), params.sigma(), params.theta(), params.gamma());
        let col = |f: &dyn Fn(&FrameIntegrals) -> f64| frames.iter().map(f).collect::<Vec<f64>>();
        Ok(EnergyTrace {
            s: col(&|f| f.s),
            e0: col(&|f| f.e0),
            e_eta: col(&|f| f.e_eta),
            i_eta: col(&|f| f.i_eta),
            j_eta: col(&|f| f.j_eta),
            h_eta: col(&|f| f.h_eta()),
            g_eta: col(&|f| scaled_g_eta(f.h_eta(), f.s, eta, theta, p)),
            h_lyap: col(&|f| f.e0 + f.i0 + sigma * (-gamma * f.s).exp()),
            boundary_dissipation: col(&|f| f.boundary_dissipation),
            h1l2_norm: col(&|f| f.h1l2),
            eta,
            sigma,
            theta,
            gamma,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Rebuilds the σ/θ dependent columns for new constants.
    pub fn with_constants(&self, params: &ModelParams) -> Result<Self> {
        Self::from_integrals(self.frames.clone(), params)
    }

    pub const CSV_COLUMNS: [&'static str; 10] = [
        "s",
        "E0",
        "E_eta",
        "I_eta",
        "J_eta",
        "H_eta",
        "G_eta",
        "H_lyap",
        "boundary_dissipation",
        "h1l2_norm",
    ];

    pub fn rows(&self) -> Vec<[f64; 10]> {
        (0..self.len())
            .map(|k| {
                [
                    self.s[k],
                    self.e0[k],
                    self.e_eta[k],
                    self.i_eta[k],
                    self.j_eta[k],
                    self.h_eta[k],
                    self.g_eta[k],
                    self.h_lyap[k],
                    self.boundary_dissipation[k],
                    self.h1l2_norm[k],
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::cell_centres;
    use std::f64::consts::PI;

    #[test]
    fn energy_of_equilibrium() {
        let params = ModelParams::critical(3).unwrap();
        let w = WState::constant(1024, params.kappa(), 0.0, 0.0);
        let e = energy_e(&w, &params, 0.0).unwrap();
        // integrand reduces to κ²/(p-1) = 1
        assert!((e - 4.0 * PI / 3.0).abs() < 1e-3, "{e}");
    }

    #[test]
    fn energy_of_unit_field_n2() {
        let params = ModelParams::critical(2).unwrap();
        let w = WState::constant(1024, 1.0, 0.0, 0.0);
        let e = energy_e(&w, &params, 0.0).unwrap();
        assert!((e - PI * (6.0 / 16.0 - 1.0 / 6.0)).abs() < 1e-3);
        let zero = WState::constant(64, 0.0, 0.0, 0.0);
        assert_eq!(energy_e(&zero, &params, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn source_closed_form() {
        let params = ModelParams::critical(2)
            .unwrap()
            .with_perturbation(1.0, 2.0, Forcing::Power, Damping::Zero)
            .unwrap();
        let w = WState::constant(1024, 1.0, 0.0, 0.0);
        let i = source_i(&w, &params, 0.0).unwrap();
        assert!((i + PI / 3.0).abs() < 1e-3);
        let unperturbed = ModelParams::critical(2).unwrap();
        assert_eq!(source_i(&w, &unperturbed, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn coupling_examples() {
        let params = ModelParams::critical(2).unwrap();
        let w = WState::constant(1024, 1.0, 0.0, 0.0);
        assert!((coupling_j(&w, &params, 0.5).unwrap() - PI / 3.0).abs() < 1e-3);
        let w = WState::constant(1024, 1.0, 1.0, 0.0);
        assert!(coupling_j(&w, &params, 0.5).unwrap().abs() < 1e-3);
        assert_eq!(coupling_j(&w, &params, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn g_eta_formula() {
        assert!((scaled_g_eta(0.0, 2.0, 0.5, 5.0, 3.0) - 5.0 * (-3.0f64).exp()).abs() < 1e-14);
        assert_eq!(scaled_g_eta(1.7, 0.0, 0.5, 0.0, 3.0), 1.7);
    }

    #[test]
    fn lyapunov_shift() {
        let params = ModelParams::critical(3)
            .unwrap()
            .with_perturbation(0.0, 2.0, Forcing::Zero, Damping::Zero)
            .unwrap()
            .with_sigma(10.0)
            .unwrap();
        let w = WState::constant(256, 0.3, 0.0, 4.0);
        let e = energy_e(&w, &params, 0.0).unwrap();
        let h = lyapunov_h(&w, &params).unwrap();
        assert!((h - e - 10.0 * (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn dissipation_examples() {
        let w = WState::constant(64, 0.0, 1.0, 0.0);
        assert!((boundary_dissipation(&w, 3) - 4.0 * PI).abs() < 1e-12);
        assert!((boundary_dissipation(&w, 2) - 2.0 * PI).abs() < 1e-12);
        let w = WState::constant(64, 1.0, 0.0, 0.0);
        assert_eq!(boundary_dissipation(&w, 3), 0.0);
    }

    #[test]
    fn hardy_examples() {
        let y = cell_centres(1024);
        let gap = hardy_gap(&y, &vec![1.0; 1024], &vec![0.0; 1024], 0.5, 2).unwrap();
        assert!((gap - 4.0 * PI / 3.0).abs() < 1e-3, "{gap}");
        assert_eq!(hardy_gap(&y, &vec![0.0; 1024], &vec![0.0; 1024], 0.5, 2).unwrap(), 0.0);
    }

    #[test]
    fn jensen_equality_case() {
        let y = cell_centres(512);
        let (_, a_star) = jensen_constant(0.5, 3.0, 2.0);
        let gap = jensen_gap(&y, &vec![a_star; 512], 0.5, 3.0, 2.0, 3).unwrap();
        assert!(gap.abs() < 1e-6, "{gap}");
        assert!(jensen_gap(&y, &vec![0.0; 512], 0.5, 3.0, 2.0, 3).unwrap() >= 0.0);
    }

    #[test]
    fn h1l2_examples() {
        let params = ModelParams::critical(3).unwrap();
        let w = WState::constant(1024, params.kappa(), 0.0, 0.0);
        let v = (4.0 * PI / 3.0f64).sqrt();
        assert!((h1l2_norm(&w, 3).unwrap() - 2f64.sqrt() * v).abs() < 1e-3);
        let w = WState::constant(1024, params.kappa(), 1.0, 0.0);
        assert!((h1l2_norm(&w, 3).unwrap() - (2f64.sqrt() + 1.0) * v).abs() < 1e-3);
    }
}

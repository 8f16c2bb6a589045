//! Model parameters, derived constants and the perturbation shapes.
//!
//! The equation integrated throughout the crate is
//!
//! ```text
//! u_tt = Δu + |u|^{p-1} u + f(u) + g(u_t)
//! ```
//!
//! with `f` and `g` drawn from a closed set of shapes whose growth bounds
//! `|f(x)| <= M (1 + |x|^q)` and `|g(x)| <= M (1 + |x|)` can be checked by the
//! test suite. Concrete shapes are a choice of this crate; only the bounds are
//! prescribed by the theory.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// `1 + 4/(N-1)`, the exponent at which the similarity-variable weight exponent vanishes.
pub fn critical_exponent(dim: usize) -> Result<f64> {
    if dim < 2 {
        return domain(format!("critical exponent needs N >= 2, got N = {dim}"));
    }
    Ok(1.0 + 4.0 / (dim as f64 - 1.0))
}

/// `min(1/2, (p-q)/(p-1))`.
pub fn gamma_exponent(p: f64, q: f64) -> Result<f64> {
    if !(p > 1.0) {
        return domain(format!("gamma exponent needs p > 1, got p = {p}"));
    }
    if !(q < p) {
        return domain(format!("gamma exponent needs q < p, got q = {q}, p = {p}"));
    }
    if !(q > 1.0) {
        return domain(format!("gamma exponent needs q > 1, got q = {q}"));
    }
    Ok(0.5f64.min((p - q) / (p - 1.0)))
}

/// `2/(p-1) - (N-1)/2`; zero at the critical exponent.
pub fn alpha_exponent(dim: usize, p: f64) -> Result<f64> {
    if dim < 2 {
        return domain(format!("alpha exponent needs N >= 2, got N = {dim}"));
    }
    if !(p > 1.0) {
        return domain(format!("alpha exponent needs p > 1, got p = {p}"));
    }
    if critical_exponent(dim)? == p {
        return Ok(0.0);
    }
    Ok(2.0 / (p - 1.0) - (dim as f64 - 1.0) / 2.0)
}

/// Positive constant solution of the similarity equation: `kappa^{p-1} = 2(p+1)/(p-1)^2`.
pub fn equilibrium_kappa(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return domain(format!("kappa needs p > 1, got p = {p}"));
    }
    Ok((2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0))).powf(1.0 / (p - 1.0)))
}

/// `(1 - |y|^2)^eta` for `|y| < 1`.
pub fn rho_weight(y_abs: f64, eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&y_abs) {
        return domain(format!("rho weight needs 0 <= |y| < 1, got {y_abs}"));
    }
    if eta == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - y_abs * y_abs).powf(eta))
}

/// Surface measure of the unit sphere `S^{N-1}` in `R^N`.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    // |S^{N-1}| = 2π/(N-2) |S^{N-3}|, |S^0| = 2, |S^1| = 2π
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        n => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

/// Volume of the unit ball in `R^N`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Shape of the source perturbation `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Forcing {
    /// `f ≡ 0`.
    Zero,
    /// `f(u) = M |u|^{q-1} u`; bound `|f(u)| = M|u|^q <= M (1 + |u|^q)`.
    Power,
}

/// Shape of the damping perturbation `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Damping {
    /// `g ≡ 0`.
    Zero,
    /// `g(v) = M v / (1 + softening)`, `softening >= 0`; bound `|g(v)| <= M |v| <= M (1 + |v|)`.
    Linear { softening: f64 },
    /// `g(v) = M sin v`; bound `|g(v)| <= M <= M (1 + |v|)`.
    Sine,
}

/// Model parameters with derived constants frozen at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dim: usize,
    p: f64,
    q: f64,
    m: f64,
    forcing: Forcing,
    damping: Damping,
    eta: f64,
    sigma: f64,
    theta: f64,
    critical: bool,
    gamma: f64,
    kappa: f64,
    alpha: f64,
}

impl ModelParams {
    /// Unperturbed parameters at the critical exponent `p = 1 + 4/(N-1)`.
    pub fn critical(dim: usize) -> Result<Self> {
        let p = critical_exponent(dim)?;
        let mut params = Self::base(dim, p)?;
        params.critical = true;
        Ok(params)
    }

    /// Unperturbed parameters with an arbitrary exponent `p > 1`.
    ///
    /// Non-critical exponents are used by the ODE oracles; the similarity-variable
    /// identities implemented downstream assume criticality and check it.
    pub fn with_exponent(dim: usize, p: f64) -> Result<Self> {
        let mut params = Self::base(dim, p)?;
        params.critical = critical_exponent(dim)? == p;
        Ok(params)
    }

    fn base(dim: usize, p: f64) -> Result<Self> {
        if dim < 2 {
            return config(format!("dimension must be >= 2, got {dim}"));
        }
        if !(p > 1.0) || !p.is_finite() {
            return config(format!("exponent must be > 1, got {p}"));
        }
        // q defaults halfway between 1 and p; only meaningful once f is switched on.
        let q = 0.5 * (1.0 + p);
        let mut params = ModelParams {
            dim,
            p,
            q,
            m: 0.0,
            forcing: Forcing::Zero,
            damping: Damping::Zero,
            eta: 0.5,
            sigma: 0.0,
            theta: 0.0,
            critical: false,
            gamma: 0.0,
            kappa: 0.0,
            alpha: 0.0,
        };
        params.refresh()?;
        Ok(params)
    }

    /// Switch on the perturbation `(f, g)` with magnitude `m` and sub-exponent `q`.
    pub fn with_perturbation(
        mut self,
        m: f64,
        q: f64,
        forcing: Forcing,
        damping: Damping,
    ) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return config(format!("perturbation magnitude M must be >= 0, got {m}"));
        }
        if !(q < self.p) {
            return config(format!(
                "hypothesis (H_f) violated: sub-exponent q = {q} must satisfy q < p = {}",
                self.p
            ));
        }
        if !(q > 1.0) {
            return config(format!("sub-exponent q must exceed 1, got {q}"));
        }
        if let Damping::Linear { softening } = damping {
            if !(softening >= 0.0) {
                return config(format!("linear damping softening must be >= 0, got {softening}"));
            }
        }
        self.m = m;
        self.q = q;
        self.forcing = forcing;
        self.damping = damping;
        self.refresh()?;
        Ok(self)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return config(format!("eta must lie in (0,1), got {eta}"));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return config(format!("sigma must be >= 0, got {sigma}"));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return config(format!("theta must be >= 0, got {theta}"));
        }
        self.theta = theta;
        Ok(self)
    }

    fn refresh(&mut self) -> Result<()> {
        self.gamma = gamma_exponent(self.p, self.q)?;
        self.kappa = equilibrium_kappa(self.p)?;
        self.alpha = alpha_exponent(self.dim, self.p)?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn forcing(&self) -> Forcing {
        self.forcing
    }
    pub fn damping(&self) -> Damping {
        self.damping
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn is_critical(&self) -> bool {
        self.critical
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `2/(p-1)`, the self-similar scaling exponent of `u`.
    pub fn scaling_exponent(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    pub fn is_unperturbed(&self) -> bool {
        self.m == 0.0 || (self.forcing == Forcing::Zero && self.damping == Damping::Zero)
    }

    pub fn has_damping(&self) -> bool {
        self.m != 0.0 && self.damping != Damping::Zero
    }

    /// Source perturbation `f(u)`.
    pub fn perturbation_f(&self, u: f64) -> f64 {
        match self.forcing {
            Forcing::Zero => 0.0,
            Forcing::Power => self.m * u.abs().powf(self.q - 1.0) * u,
        }
    }

    /// Exact antiderivative `F(u) = ∫_0^u f`.
    #[allow(non_snake_case)]
    pub fn perturbation_F(&self, u: f64) -> f64 {
        match self.forcing {
            Forcing::Zero => 0.0,
            Forcing::Power => self.m * u.abs().powf(self.q + 1.0) / (self.q + 1.0),
        }
    }

    /// Damping perturbation `g(v)`.
    pub fn perturbation_g(&self, v: f64) -> f64 {
        match self.damping {
            Damping::Zero => 0.0,
            Damping::Linear { softening } => self.m * v / (1.0 + softening),
            Damping::Sine => self.m * v.sin(),
        }
    }

    /// `|u|^{p-1} u`.
    pub fn power_nonlinearity(&self, u: f64) -> f64 {
        u.abs().powf(self.p - 1.0) * u
    }

    /// Signed `|u|^{p+1}`-type helper used by the functionals.
    pub fn abs_pow_p1(&self, u: f64) -> f64 {
        u.abs().powf(self.p + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn critical_exponent_values() {
        assert_eq!(critical_exponent(2).unwrap(), 5.0);
        assert_eq!(critical_exponent(3).unwrap(), 3.0);
        assert_eq!(critical_exponent(5).unwrap(), 2.0);
        assert!(critical_exponent(1).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_exponent(3.0, 2.0).unwrap(), 0.5);
        assert_eq!(gamma_exponent(5.0, 1.5).unwrap(), 0.5);
        assert!((gamma_exponent(3.0, 2.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(gamma_exponent(3.0, 3.0).is_err());
        assert!(gamma_exponent(3.0, 4.0).is_err());
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha_exponent(3, 3.0).unwrap(), 0.0);
        assert_eq!(alpha_exponent(2, 5.0).unwrap(), 0.0);
        assert!((alpha_exponent(3, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(alpha_exponent(3, 1.0).is_err());
        for n in 2..=10 {
            assert_eq!(alpha_exponent(n, critical_exponent(n).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn kappa_values() {
        assert!((equilibrium_kappa(3.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!((equilibrium_kappa(5.0).unwrap() - 0.75f64.powf(0.25)).abs() < 1e-14);
        assert!((equilibrium_kappa(2.0).unwrap() - 6.0).abs() < 1e-13);
        // substitution check: kappa solves the constant-state equation of the similarity flow
        for p in [2.0, 3.0, 5.0, 7.0 / 3.0] {
            let k = equilibrium_kappa(p).unwrap();
            let residual = -(2.0 * p + 2.0) / ((p - 1.0) * (p - 1.0)) * k + k.powf(p);
            assert!(residual.abs() < 1e-12, "p = {p}: {residual}");
        }
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho_weight(0.0, 0.7).unwrap(), 1.0);
        assert_eq!(rho_weight(0.9, 0.0).unwrap(), 1.0);
        assert!((rho_weight(0.6, 0.5).unwrap() - 0.8).abs() < 1e-15);
        assert!(rho_weight(1.0, 0.5).is_err());
    }

    #[test]
    fn sphere_and_ball() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn perturbation_examples() {
        let zero = ModelParams::critical(3).unwrap();
        assert_eq!(zero.perturbation_f(7.0), 0.0);
        assert_eq!(zero.perturbation_F(7.0), 0.0);

        let power = ModelParams::critical(3)
            .unwrap()
            .with_perturbation(1.0, 2.0, Forcing::Power, Damping::Zero)
            .unwrap();
        assert!((power.perturbation_F(3.0) - 9.0).abs() < 1e-12);
        assert!((power.perturbation_F(-3.0) - 9.0).abs() < 1e-12);
        assert!((power.perturbation_f(-3.0) + 9.0).abs() < 1e-12);

        let sine = ModelParams::critical(3)
            .unwrap()
            .with_perturbation(2.0, 2.0, Forcing::Zero, Damping::Sine)
            .unwrap();
        for v in [-10.0, -1.0, 0.3, 5.0] {
            assert!(sine.perturbation_g(v).abs() <= 2.0 * (1.0 + f64::abs(v)));
        }
    }

    #[test]
    fn q_at_or_above_p_is_a_config_error() {
        let err = ModelParams::critical(3)
            .unwrap()
            .with_perturbation(0.1, 3.0, Forcing::Power, Damping::Zero)
            .unwrap_err();
        assert!(err.to_string().contains("(H_f)"), "{err}");
    }

    #[test]
    fn derived_constants_frozen() {
        let p = ModelParams::critical(3)
            .unwrap()
            .with_perturbation(0.1, 2.5, Forcing::Power, Damping::Sine)
            .unwrap();
        assert_eq!(p.gamma(), gamma_exponent(3.0, 2.5).unwrap());
        assert_eq!(p.kappa(), equilibrium_kappa(3.0).unwrap());
        assert_eq!(p.alpha(), 0.0);
        assert!(p.is_critical());
    }
}

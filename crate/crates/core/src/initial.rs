//! Enumerated initial-data families.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::fields::{Grid, RadialSnapshot};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialData {
    Zero,
    /// `u_0 ≡ amplitude`, `u_1 ≡ velocity`.
    Constant { amplitude: f64, velocity: f64 },
    /// `u_0 = A exp(-(x-c)^2/w^2)`, `u_1 = 0`.
    Gaussian { amplitude: f64, width: f64, center: f64 },
    /// Data of the ODE blow-up solution `κ (T - t)^{-2/(p-1)}` at `t = 0`.
    OdeProfile { t_blow: f64 },
    /// Gaussian envelope modulated by a random even cosine series.
    RandomSmooth { seed: u64, amplitude: f64, width: f64, modes: usize },
}

impl InitialData {
    /// Multiplies the data (position and velocity) by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Ok(match self.clone() {
            InitialData::Zero => InitialData::Zero,
            InitialData::Constant { amplitude, velocity } => InitialData::Constant {
                amplitude: lambda * amplitude,
                velocity: lambda * velocity,
            },
            InitialData::Gaussian { amplitude, width, center } => InitialData::Gaussian {
                amplitude: lambda * amplitude,
                width,
                center,
            },
            InitialData::RandomSmooth { seed, amplitude, width, modes } => InitialData::RandomSmooth {
                seed,
                amplitude: lambda * amplitude,
                width,
                modes,
            },
            InitialData::OdeProfile { .. } => return config("the ODE profile family cannot be rescaled"),
        })
    }

    pub fn sample(&self, grid: Arc<Grid>, params: &ModelParams) -> Result<RadialSnapshot> {
        let xs = grid.coords();
        let n = xs.len();
        let (u, ut) = match *self {
            InitialData::Zero => (vec![0.0; n], vec![0.0; n]),
            InitialData::Constant { amplitude, velocity } => (vec![amplitude; n], vec![velocity; n]),
            InitialData::Gaussian { amplitude, width, center } => {
                if !(width > 0.0) {
                    return config("Gaussian width must be positive");
                }
                let u = xs
                    .iter()
                    .map(|x| amplitude * (-((x - center) / width).powi(2)).exp())
                    .collect();
                (u, vec![0.0; n])
            }
            InitialData::OdeProfile { t_blow } => {
                if !(t_blow > 0.0) {
                    return config("ODE profile blow-up time must be positive");
                }
                let a = params.scaling_exponent();
                let u0 = params.kappa() * t_blow.powf(-a);
                (vec![u0; n], vec![a * u0 / t_blow; n])
            }
            InitialData::RandomSmooth { seed, amplitude, width, modes } => {
                if !(width > 0.0) {
                    return config("random-smooth width must be positive");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<f64> = (1..=modes)
                    .map(|k| rng.gen_range(-1.0..1.0) / (k * k) as f64)
                    .collect();
                let u = xs
                    .iter()
                    .map(|&x| {
                        let z = x / width;
                        let series: f64 = coeffs
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * ((k + 1) as f64 * z).cos())
                            .sum();
                        amplitude * (1.0 + 0.3 * series) * (-z * z).exp()
                    })
                    .collect();
                (u, vec![0.0; n])
            }
        };
        RadialSnapshot::new(grid, u, ut, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_smooth_is_seeded() {
        let params = ModelParams::critical(3).unwrap();
        let grid = Arc::new(Grid::radial(2.0, 40).unwrap());
        let d = InitialData::RandomSmooth { seed: 7, amplitude: 1.0, width: 0.5, modes: 4 };
        let a = d.sample(grid.clone(), &params).unwrap();
        let b = d.sample(grid.clone(), &params).unwrap();
        assert_eq!(a.u, b.u);
        let c = InitialData::RandomSmooth { seed: 8, amplitude: 1.0, width: 0.5, modes: 4 }
            .sample(grid, &params)
            .unwrap();
        assert_ne!(a.u, c.u);
    }

    #[test]
    fn ode_profile_matches_kappa() {
        let params = ModelParams::critical(3).unwrap();
        let grid = Arc::new(Grid::radial(1.0, 8).unwrap());
        let s = InitialData::OdeProfile { t_blow: 1.0 }.sample(grid, &params).unwrap();
        assert!((s.u[3] - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.ut[3] - 2f64.sqrt()).abs() < 1e-15);
    }
}

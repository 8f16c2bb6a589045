//! Weighted radial quadrature on the unit ball.
//!
//! Fields live on the cell-centred grid `y_j = (j + 1/2)/n`. The default rule is a product
//! midpoint rule `Σ_j f(y_j) W_j` whose cell weights
//! `W_j = |S^{N-1}| ∫_{cell j} r^{N-1} (1 - r^2)^β dr` are computed exactly, so the
//! geometric factor and the weight `(1-|y|^2)^β` (possibly singular at `|y| = 1`) carry
//! no discretisation error. Only the variation of `f` across a cell contributes, which is
//! second order. The plain midpoint rule (everything sampled at `y_j`) is kept for
//! comparison; with `β < 0` it loses accuracy in the last cell.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Exact cell moments of `r^{N-1}(1-r^2)^β`.
    #[default]
    CellMoments,
    /// Sample every factor at the cell centre.
    Midpoint,
}

/// Checks that `ygrid` is the cell-centred partition of `[0, 1)`.
pub fn validate_ygrid(ygrid: &[f64]) -> Result<()> {
    let n = ygrid.len();
    if n == 0 {
        return domain("empty y grid");
    }
    let dy = 1.0 / n as f64;
    for (j, &y) in ygrid.iter().enumerate() {
        if !(0.0..1.0).contains(&y) {
            return domain(format!("y grid touches or leaves the unit ball at index {j} (y = {y})"));
        }
        if (y - (j as f64 + 0.5) * dy).abs() > 1e-12 {
            return domain("y grid must be uniform and cell-centred");
        }
    }
    Ok(())
}

/// `∫_B field · (1-|y|^2)^η dy` for a radial field, with the extra factor `1/(1-|y|^2)` if `singular`.
pub fn ball_quadrature(ygrid: &[f64], field: &[f64], dim: usize, eta: f64, singular: bool) -> Result<f64> {
    ball_quadrature_with(ygrid, field, dim, eta, singular, QuadratureRule::CellMoments)
}

pub fn ball_quadrature_with(
    ygrid: &[f64],
    field: &[f64],
    dim: usize,
    eta: f64,
    singular: bool,
    rule: QuadratureRule,
) -> Result<f64> {
    validate_ygrid(ygrid)?;
    if field.len() != ygrid.len() {
        return domain("field length does not match the y grid");
    }
    let beta = if singular { eta - 1.0 } else { eta };
    if !(beta > -1.0) {
        return domain(format!("weight exponent {beta} is not integrable at |y| = 1"));
    }
    let w = cell_weights(ygrid.len(), dim, beta, rule);
    Ok(dot(field, &w))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

type WeightKey = (usize, usize, u64, QuadratureRule);

fn cache() -> &'static Mutex<HashMap<WeightKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<WeightKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cell weights `W_j` for `r^{N-1} (1-r^2)^β` times the sphere area (cached).
pub fn cell_weights(cells: usize, dim: usize, beta: f64, rule: QuadratureRule) -> Arc<Vec<f64>> {
    let key = (cells, dim, beta.to_bits(), rule);
    if let Some(w) = cache().lock().unwrap().get(&key) {
        return w.clone();
    }
    let area = sphere_area(dim);
    let dy = 1.0 / cells as f64;
    let w: Vec<f64> = (0..cells)
        .map(|j| match rule {
            QuadratureRule::CellMoments => {
                area * radial_moment(j as f64 * dy, (j + 1) as f64 * dy, dim, beta)
            }
            QuadratureRule::Midpoint => {
                let y = (j as f64 + 0.5) * dy;
                area * y.powi(dim as i32 - 1) * (1.0 - y * y).powf(beta) * dy
            }
        })
        .collect();
    let w = Arc::new(w);
    cache().lock().unwrap().insert(key, w.clone());
    w
}

/// `∫_a^b r^{N-1} (1 - r^2)^β dr` for `0 <= a < b <= 1`, `β > -1`.
pub fn radial_moment(a: f64, b: f64, dim: usize, beta: f64) -> f64 {
    const SPLIT: f64 = 0.5;
    let mut total = 0.0;
    if a < SPLIT {
        let hi = b.min(SPLIT);
        total += gauss_legendre_integral(|r| r.powi(dim as i32 - 1) * (1.0 - r * r).powf(beta), a, hi);
    }
    if b > SPLIT {
        let lo = a.max(SPLIT);
        // t = 1 - r: r^{N-1}(1-r^2)^β dr = t^β (1-t)^{N-1} (2-t)^β dt
        total += edge_series(1.0 - b, dim, beta, 1.0 - lo);
    }
    total
}

/// `∫_{t_lo}^{t_hi} t^β (1-t)^{N-1} (2-t)^β dt` by term-wise integration of the power series
/// of `(1-t)^{N-1}(2-t)^β`, valid for `0 <= t_lo < t_hi <= 1/2`.
fn edge_series(t_lo: f64, dim: usize, beta: f64, t_hi: f64) -> f64 {
    const TERMS: usize = 64;
    // (2-t)^β = 2^β Σ_j binom(β, j) (-t/2)^j
    let mut g = [0.0f64; TERMS];
    g[0] = 2f64.powf(beta);
    for j in 1..TERMS {
        g[j] = g[j - 1] * (beta - (j as f64 - 1.0)) / j as f64 * (-0.5);
    }
    // (1-t)^{N-1} = Σ_k binom(N-1, k) (-t)^k
    let m = dim - 1;
    let mut poly = vec![0.0f64; m + 1];
    poly[0] = 1.0;
    for k in 1..=m {
        poly[k] = -(poly[k - 1] * (m as f64 - (k as f64 - 1.0)) / k as f64);
    }
    let mut total = 0.0;
    for k in 0..TERMS {
        let mut c = 0.0;
        for (i, &pc) in poly.iter().enumerate() {
            if i <= k {
                c += pc * g[k - i];
            }
        }
        if c == 0.0 {
            continue;
        }
        let e = beta + k as f64 + 1.0;
        let lo = if t_lo > 0.0 { t_lo.powf(e) } else { 0.0 };
        total += c * (t_hi.powf(e) - lo) / e;
    }
    total
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(8))
}

/// Eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre_integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (x, w) = gl8();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

/// Composite trapezoid rule for samples `ys` at abscissas `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::cell_centres;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_exact_on_degree_15() {
        let v = gauss_legendre_integral(|x| x.powi(15) + 3.0 * x.powi(14), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 3.0 / 15.0)).abs() < 1e-15);
        let (_, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ball_volume_and_weighted_examples() {
        let y = cell_centres(1024);
        let one = vec![1.0; 1024];
        let v = ball_quadrature(&y, &one, 3, 0.0, false).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-4);
        let v = ball_quadrature(&y, &one, 2, 1.0, false).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-4);
        let r2: Vec<f64> = y.iter().map(|y| y * y).collect();
        let v = ball_quadrature(&y, &r2, 2, 0.0, false).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-4);
    }

    #[test]
    fn singular_moment_matches_beta_function() {
        // ∫_B (1-|y|^2)^{-1/2} dy in 2D = 2π ∫ r (1-r^2)^{-1/2} dr = 2π
        for cells in [8usize, 100, 1024] {
            let y = cell_centres(cells);
            let one = vec![1.0; cells];
            let v = ball_quadrature(&y, &one, 2, 0.5, true).unwrap();
            assert!((v - 2.0 * PI).abs() < 1e-12, "{cells}: {v}");
        }
        // 3D: 4π ∫ r^2 (1-r^2)^{-1/2} dr = 4π · π/4
        let y = cell_centres(64);
        let v = ball_quadrature(&y, &vec![1.0; 64], 3, 0.5, true).unwrap();
        assert!((v - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn second_order_on_smooth_integrand() {
        let exact = 2.0 * PI * (0.5 * (1.0 - (-1.0f64).exp()));
        let err = |cells: usize| {
            let y = cell_centres(cells);
            let f: Vec<f64> = y.iter().map(|y| (-y * y).exp()).collect();
            (ball_quadrature(&y, &f, 2, 0.0, false).unwrap() - exact).abs()
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(ball_quadrature(&[0.25, 1.0], &[1.0, 1.0], 2, 0.5, false).is_err());
        assert!(ball_quadrature(&[0.1, 0.6], &[1.0, 1.0], 2, 0.5, false).is_err());
    }

    #[test]
    fn midpoint_rule_is_available() {
        let y = cell_centres(512);
        let one = vec![1.0; 512];
        let v = ball_quadrature_with(&y, &one, 3, 0.0, false, QuadratureRule::Midpoint).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-4);
    }
}

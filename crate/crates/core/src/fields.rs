//! Grid and field containers shared by the solver, the similarity transform and the functionals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Outer boundary treatment of a one-dimensional line grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// First-order outgoing (Sommerfeld) condition.
    Outgoing,
    /// Periodic wrap; used for spatially homogeneous (ODE-mode) runs.
    Periodic,
}

/// Spatial geometry of a physical grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Geometry {
    /// Radially symmetric field in `R^N` sampled on `r ∈ [0, R]`, outgoing condition at `R`.
    Radial,
    /// One space dimension on `x ∈ [-L, L]`.
    Line { boundary: Boundary },
}

/// Uniform grid `x_j = start + j dx`, `j = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub geometry: Geometry,
    pub start: f64,
    pub dx: f64,
    pub len: usize,
}

impl Grid {
    /// Vertex-centred radial grid on `[0, radius]` with `cells` intervals.
    pub fn radial(radius: f64, cells: usize) -> Result<Self> {
        if !(radius > 0.0) || cells < 4 {
            return domain(format!("radial grid needs radius > 0 and >= 4 cells, got {radius}, {cells}"));
        }
        Ok(Grid {
            geometry: Geometry::Radial,
            start: 0.0,
            dx: radius / cells as f64,
            len: cells + 1,
        })
    }

    /// Line grid on `[-half_width, half_width]`.
    ///
    /// Periodic grids drop the right endpoint (it is identified with the left one).
    pub fn line(half_width: f64, cells: usize, boundary: Boundary) -> Result<Self> {
        if !(half_width > 0.0) || cells < 4 {
            return domain(format!("line grid needs L > 0 and >= 4 cells, got {half_width}, {cells}"));
        }
        let dx = 2.0 * half_width / cells as f64;
        let len = match boundary {
            Boundary::Periodic => cells,
            Boundary::Outgoing => cells + 1,
        };
        Ok(Grid {
            geometry: Geometry::Line { boundary },
            start: -half_width,
            dx,
            len,
        })
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.start + j as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.x(j)).collect()
    }

    pub fn last(&self) -> f64 {
        self.x(self.len - 1)
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.geometry, Geometry::Radial)
    }

    /// Nearest grid index to `x` (clamped).
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x - self.start) / self.dx).round();
        j.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// Four-point cubic Lagrange interpolation of `values` at `x`.
    ///
    /// Radial grids starting at the origin use the even reflection `u(-r) = u(r)`.
    /// Periodic line grids wrap. Elsewhere the stencil is shifted inward at the ends.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Result<f64> {
        debug_assert_eq!(values.len(), self.len);
        let xi = (x - self.start) / self.dx;
        let periodic = matches!(self.geometry, Geometry::Line { boundary: Boundary::Periodic });
        let reflect = self.is_radial() && self.start == 0.0;
        let n = self.len as isize;
        if !periodic {
            let lo = if reflect { -(self.len as f64 - 1.0) } else { 0.0 };
            if xi < lo - 1e-9 || xi > (self.len - 1) as f64 + 1e-9 {
                return domain(format!(
                    "interpolation point {x} outside grid [{}, {}]",
                    self.start,
                    self.last()
                ));
            }
        }
        let mut base = xi.floor() as isize - 1;
        if !periodic && !reflect {
            base = base.clamp(0, n - 4);
        } else if reflect {
            base = base.min(n - 4);
        }
        let fetch = |k: isize| -> f64 {
            if periodic {
                values[k.rem_euclid(n) as usize]
            } else if reflect {
                values[k.unsigned_abs()]
            } else {
                values[k as usize]
            }
        };
        let mut acc = 0.0;
        for a in 0..4isize {
            let ka = base + a;
            let mut l = 1.0;
            for b in 0..4isize {
                if a != b {
                    let kb = (base + b) as f64;
                    l *= (xi - kb) / (ka as f64 - kb);
                }
            }
            acc += l * fetch(ka);
        }
        Ok(acc)
    }
}

/// Physical-space state `(u, u_t)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSnapshot {
    pub grid: Arc<Grid>,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub t: f64,
}

impl RadialSnapshot {
    pub fn new(grid: Arc<Grid>, u: Vec<f64>, ut: Vec<f64>, t: f64) -> Result<Self> {
        if u.len() != grid.len || ut.len() != grid.len {
            return domain("snapshot field length does not match grid");
        }
        if !u.iter().chain(ut.iter()).all(|v| v.is_finite()) {
            return domain(format!("snapshot at t = {t} holds non-finite values"));
        }
        Ok(RadialSnapshot { grid, u, ut, t })
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Similarity-variable state sampled on the cell-centred radial grid `y_j = (j + 1/2)/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WState {
    pub ygrid: Arc<Vec<f64>>,
    pub w: Vec<f64>,
    pub ws: Vec<f64>,
    pub wy: Vec<f64>,
    pub s: f64,
    pub x0: f64,
    pub t0: f64,
}

impl WState {
    pub fn new(
        ygrid: Arc<Vec<f64>>,
        w: Vec<f64>,
        ws: Vec<f64>,
        wy: Vec<f64>,
        s: f64,
        frame: (f64, f64),
    ) -> Result<Self> {
        let n = ygrid.len();
        if w.len() != n || ws.len() != n || wy.len() != n {
            return domain("WState field lengths do not match the y grid");
        }
        if ygrid.iter().any(|&y| !(0.0..1.0).contains(&y)) {
            return domain("WState y grid must lie in [0, 1)");
        }
        if !w.iter().chain(ws.iter()).chain(wy.iter()).all(|v| v.is_finite()) {
            return domain(format!("WState at s = {s} holds non-finite values"));
        }
        Ok(WState {
            ygrid,
            w,
            ws,
            wy,
            s,
            x0: frame.0,
            t0: frame.1,
        })
    }

    /// Constant fields, handy for closed-form checks.
    pub fn constant(cells: usize, w: f64, ws: f64, s: f64) -> Self {
        let ygrid = Arc::new(cell_centres(cells));
        WState {
            w: vec![w; cells],
            ws: vec![ws; cells],
            wy: vec![0.0; cells],
            ygrid,
            s,
            x0: 0.0,
            t0: 1.0,
        }
    }

    pub fn cells(&self) -> usize {
        self.ygrid.len()
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.ygrid.len() as f64
    }

    /// Value of `field` at `|y| = 1` by one-sided quadratic extrapolation from the last three cells.
    pub fn boundary_value(field: &[f64]) -> f64 {
        let n = field.len();
        if n < 3 {
            return field[n - 1];
        }
        1.875 * field[n - 1] - 1.25 * field[n - 2] + 0.375 * field[n - 3]
    }

    pub fn w_boundary(&self) -> f64 {
        Self::boundary_value(&self.w)
    }

    pub fn ws_boundary(&self) -> f64 {
        Self::boundary_value(&self.ws)
    }
}

/// Cell centres `(j + 1/2)/n` of a uniform partition of `[0, 1]`.
pub fn cell_centres(cells: usize) -> Vec<f64> {
    let dy = 1.0 / cells as f64;
    (0..cells).map(|j| (j as f64 + 0.5) * dy).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = Grid::line(1.0, 20, Boundary::Outgoing).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 3.0 * x * x * x;
        let vals: Vec<f64> = g.coords().into_iter().map(f).collect();
        for x in [-1.0, -0.97, -0.3, 0.0, 0.41, 0.999, 1.0] {
            assert!((g.interpolate(&vals, x).unwrap() - f(x)).abs() < 1e-12);
        }
        assert!(g.interpolate(&vals, 1.2).is_err());
    }

    #[test]
    fn radial_interpolation_uses_even_reflection() {
        let g = Grid::radial(1.0, 16).unwrap();
        let f = |r: f64| 2.0 + r * r - r.powi(4) * 0.0;
        let vals: Vec<f64> = g.coords().into_iter().map(f).collect();
        for r in [0.0, 0.01, 0.06, 0.5] {
            assert!((g.interpolate(&vals, r).unwrap() - f(r)).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn periodic_interpolation_wraps() {
        let g = Grid::line(1.0, 64, Boundary::Periodic).unwrap();
        let f = |x: f64| (std::f64::consts::PI * x).sin();
        let vals: Vec<f64> = g.coords().into_iter().map(f).collect();
        let x = 0.995;
        assert!((g.interpolate(&vals, x).unwrap() - f(x)).abs() < 1e-5);
    }

    #[test]
    fn boundary_extrapolation_is_exact_on_quadratics() {
        let ys = cell_centres(10);
        let f: Vec<f64> = ys.iter().map(|y| 3.0 - y + 2.0 * y * y).collect();
        assert!((WState::boundary_value(&f) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn wstate_rejects_bad_grid() {
        let y = Arc::new(vec![0.5, 1.0]);
        assert!(WState::new(y, vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], 0.0, (0.0, 1.0)).is_err());
    }
}

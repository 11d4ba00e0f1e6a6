//! Finite-difference plate stiffness `beta u'''' - tau u''` on the interior
//! nodes, with `u = 0` at both ends and, for `beta > 0`, the clamped closure
//! `u'(0) = u'(1) = 0` through reflected ghost nodes.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::SymBanded;
use crate::params::ModelParams;

#[derive(Debug, Clone)]
pub struct PlateOperator {
    /// Interior stiffness, `n_x x n_x`.
    pub stiffness: SymBanded,
    pub h: f64,
    pub nodes: usize,
}

impl PlateOperator {
    pub fn new(params: &ModelParams, grid: &Grid) -> Self {
        let m = grid.n_x;
        let h = grid.h_x();
        let (b, t) = (params.beta / h.powi(4), params.tau / (h * h));
        let mut a = SymBanded::zeros(m, 2);
        for i in 0..m {
            a.add(i, i, 6.0 * b + 2.0 * t);
            if i >= 1 {
                a.add(i, i - 1, -4.0 * b - t);
            }
            if i >= 2 {
                a.add(i, i - 2, b);
            }
        }
        // reflected ghosts u_{-1} = u_1 and u_{n+1} = u_{n-1}
        a.add(0, 0, b);
        a.add(m - 1, m - 1, b);
        Self {
            stiffness: a,
            h,
            nodes: grid.nodes_x(),
        }
    }

    pub fn interior(&self, u: &[f64]) -> Vec<f64> {
        u[1..self.nodes - 1].to_vec()
    }

    pub fn embed(&self, interior: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.nodes);
        v.push(0.0);
        v.extend_from_slice(interior);
        v.push(0.0);
        v
    }

    /// `A u` on all nodes, zero at the ends.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.embed(&self.stiffness.mul_vec(&self.interior(u)))
    }

    /// `h/2 u'A u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let ui = self.interior(u);
        let au = self.stiffness.mul_vec(&ui);
        0.5 * self.h * ui.iter().zip(&au).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Rescaled mechanical energy of a pinned (or clamped, `beta > 0`) plate.
pub fn mechanical_energy(u: &[f64], params: &ModelParams, grid: &Grid) -> Result<f64> {
    if u.len() != grid.nodes_x() {
        return Err(Error::arg("deflection does not match the grid"));
    }
    if u[0] != 0.0 || u[u.len() - 1] != 0.0 {
        return Err(Error::arg("mechanical energy needs a pinned deflection"));
    }
    Ok(PlateOperator::new(params, grid).energy(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = grid.nodes_x();
        (0..n)
            .map(|i| if i == 0 || i + 1 == n { 0.0 } else { f(grid.x(i)) })
            .collect()
    }

    #[test]
    fn zero_deflection_has_zero_energy() {
        let g = Grid::new(15, 4, 4).unwrap();
        let p = ModelParams { beta: 1.0, ..Default::default() };
        assert_eq!(mechanical_energy(&vec![0.0; 17], &p, &g).unwrap(), 0.0);
    }

    #[test]
    fn tension_energy_of_a_sine() {
        let a = 0.3;
        let p = ModelParams { beta: 0.0, tau: 1.0, ..Default::default() };
        let exact = a * a * PI * PI / 4.0;
        let mut errs = Vec::new();
        for n in [63, 127] {
            let g = Grid::new(n, 4, 4).unwrap();
            let e = mechanical_energy(&sample(&g, |x| a * (PI * x).sin()), &p, &g).unwrap();
            errs.push((e - exact).abs());
        }
        assert!(errs[1] < 1e-4 && errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn bending_energy_of_a_clamped_bump() {
        // a sin^2(pi x) satisfies u = u' = 0 at both ends; int u''^2 = 2 pi^4 a^2
        let a = 0.2;
        let p = ModelParams { beta: 1.0, tau: 0.0, ..Default::default() };
        let exact = PI.powi(4) * a * a;
        let mut errs = Vec::new();
        for n in [63, 127, 255] {
            let g = Grid::new(n, 4, 4).unwrap();
            let e = mechanical_energy(&sample(&g, |x| a * (PI * x).sin().powi(2)), &p, &g).unwrap();
            errs.push((e - exact).abs() / exact);
        }
        assert!(errs[2] < 1e-3 && errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn operator_is_symmetric_positive() {
        let g = Grid::new(20, 4, 4).unwrap();
        let p = ModelParams { beta: 1.0, tau: 0.5, ..Default::default() };
        let op = PlateOperator::new(&p, &g);
        assert!(op.stiffness.cholesky().is_ok());
    }
}

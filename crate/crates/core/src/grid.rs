use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform tensor grids for the plate and the two mapped layers.
///
/// The plate interval `D = (0, 1)` carries `n_x` interior nodes plus the two
/// endpoints, so `h_x = 1 / (n_x + 1)`. The layer below the plate is mapped
/// to `R1 = D x (0, 1)` through `eta = (1 + z) / (1 + u(x))` and carries
/// `n_z1` vertical nodes; the plate itself is mapped to `R2 = D x (0, 1)`
/// through `zeta = (z - u(x)) / delta` with `n_z2` vertical nodes. The
/// interface row `eta = 1` of `R1` is the row `zeta = 0` of `R2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n_x: usize,
    pub n_z1: usize,
    pub n_z2: usize,
}

impl Grid {
    pub fn new(n_x: usize, n_z1: usize, n_z2: usize) -> Result<Self> {
        if n_x < 4 || n_z1 < 4 || n_z2 < 4 {
            return Err(Error::arg(format!(
                "grid counts must all be >= 4, got ({n_x}, {n_z1}, {n_z2})"
            )));
        }
        Ok(Self { n_x, n_z1, n_z2 })
    }

    /// Plate nodes including both endpoints.
    pub fn nodes_x(&self) -> usize {
        self.n_x + 2
    }

    pub fn h_x(&self) -> f64 {
        1.0 / (self.n_x + 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h_x()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nodes_x()).map(|i| self.x(i)).collect()
    }

    pub fn h_eta(&self) -> f64 {
        1.0 / (self.n_z1 - 1) as f64
    }

    pub fn h_zeta(&self) -> f64 {
        1.0 / (self.n_z2 - 1) as f64
    }

    pub fn eta(&self, j: usize) -> f64 {
        j as f64 * self.h_eta()
    }

    pub fn zeta(&self, k: usize) -> f64 {
        k as f64 * self.h_zeta()
    }

    /// Trapezoid weights over the plate nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.h_x();
        let n = self.nodes_x();
        (0..n)
            .map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h })
            .collect()
    }

    /// Same grid with every spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            n_x: 2 * self.n_x + 1,
            n_z1: 2 * self.n_z1 - 1,
            n_z2: 2 * self.n_z2 - 1,
        }
    }
}

/// Trapezoid rule over uniformly spaced nodal values on `[0, 1]`.
pub fn trapezoid(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let h = 1.0 / (n - 1) as f64;
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_from_interior_count() {
        let g = Grid::new(8, 8, 4).unwrap();
        assert!((g.h_x() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(g.nodes_x(), 10);
        assert!((g.x(9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smallest_legal_grid() {
        let g = Grid::new(4, 4, 4).unwrap();
        assert_eq!(g.nodes_x(), 6);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(matches!(Grid::new(3, 8, 8), Err(Error::InvalidArgument(_))));
        assert!(Grid::new(8, 3, 8).is_err());
        assert!(Grid::new(8, 8, 3).is_err());
    }

    #[test]
    fn refinement_nests_nodes() {
        let g = Grid::new(63, 65, 17).unwrap();
        let r = g.refined();
        assert_eq!(r.nodes_x(), 2 * g.nodes_x() - 1);
        assert!((r.h_x() - 0.5 * g.h_x()).abs() < 1e-15);
        assert!((r.h_eta() - 0.5 * g.h_eta()).abs() < 1e-15);
        assert!((r.h_zeta() - 0.5 * g.h_zeta()).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let v: Vec<f64> = (0..11).map(|i| 2.0 + 3.0 * i as f64 / 10.0).collect();
        assert!((trapezoid(&v) - 3.5).abs() < 1e-14);
    }
}

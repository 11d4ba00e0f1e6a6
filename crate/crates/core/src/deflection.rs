use crate::error::{Error, Result};
use crate::grid::Grid;

/// Nodal plate deflection on `[0, 1]`, endpoints included, in units of the
/// gap height. The ground plate sits at `u = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionField {
    values: Vec<f64>,
}

impl DeflectionField {
    /// Checked constructor: pinned endpoints, `-1 <= u < u_max`.
    pub fn new(values: Vec<f64>, u_max: f64) -> Result<Self> {
        if values.len() < 6 {
            return Err(Error::arg(format!(
                "deflection needs at least 6 nodes, got {}",
                values.len()
            )));
        }
        let n = values.len();
        if values[0] != 0.0 || values[n - 1] != 0.0 {
            return Err(Error::arg("deflection must vanish at both endpoints"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::arg(format!("u[{i}] is not finite")));
            }
            if v < -1.0 {
                return Err(Error::arg(format!("u[{i}] = {v} penetrates the ground plate")));
            }
            if v >= u_max {
                return Err(Error::arg(format!("u[{i}] = {v} exceeds u_max = {u_max}")));
            }
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.nodes_x()],
        }
    }

    /// Samples `f` at the plate nodes; the endpoints are forced to zero.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64, u_max: f64) -> Result<Self> {
        let n = grid.nodes_x();
        let values = (0..n)
            .map(|i| if i == 0 || i + 1 == n { 0.0 } else { f(grid.x(i)) })
            .collect();
        Self::new(values, u_max)
    }

    /// A rigidly displaced plate, `u = u0` at every node including the ends.
    ///
    /// Only the electrostatic solvers accept it; it realises the
    /// x-independent parallel-plate configuration.
    pub fn flat(grid: &Grid, u0: f64) -> Result<Self> {
        if !(u0 >= -1.0 && u0.is_finite()) {
            return Err(Error::arg(format!("flat deflection {u0} below -1")));
        }
        Ok(Self {
            values: vec![u0; grid.nodes_x()],
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_pinned(&self) -> bool {
        self.values[0] == 0.0 && self.values[self.values.len() - 1] == 0.0
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    /// `u + s v`, with the result checked like [`DeflectionField::new`]
    /// except that the endpoint values are carried over from `self`.
    pub fn perturbed(&self, v: &[f64], s: f64) -> Result<Self> {
        if v.len() != self.values.len() {
            return Err(Error::arg("perturbation length mismatch"));
        }
        let values: Vec<f64> = self.values.iter().zip(v).map(|(a, b)| a + s * b).collect();
        if let Some(&w) = values.iter().find(|&&w| w < -1.0 || !w.is_finite()) {
            return Err(Error::DegenerateDomain {
                min_u: w,
                gap_tol: 0.0,
            });
        }
        Ok(Self { values })
    }

    /// Nodal slope: centered inside, second-order one-sided at the ends.
    pub fn slopes(&self) -> Vec<f64> {
        nodal_derivative(&self.values, self.h())
    }

    /// Checks that the constrained solvers can work on this field.
    pub(crate) fn require_gap(&self, gap_tol: f64) -> Result<()> {
        let m = self.min();
        if m < -1.0 + gap_tol {
            return Err(Error::DegenerateDomain { min_u: m, gap_tol });
        }
        Ok(())
    }
}

/// Second-order nodal derivative of uniformly spaced samples.
pub fn nodal_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i + 1 == n {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(15, 8, 4).unwrap()
    }

    #[test]
    fn constructor_enforces_invariants() {
        let g = grid();
        assert!(DeflectionField::from_fn(&g, |x| -0.3 * (std::f64::consts::PI * x).sin(), 4.0).is_ok());
        let mut v = vec![0.0; g.nodes_x()];
        v[0] = 0.1;
        assert!(DeflectionField::new(v.clone(), 4.0).is_err());
        v[0] = 0.0;
        v[3] = -1.1;
        assert!(DeflectionField::new(v.clone(), 4.0).is_err());
        v[3] = 5.0;
        assert!(DeflectionField::new(v.clone(), 4.0).is_err());
        v[3] = -1.0;
        assert!(DeflectionField::new(v, 4.0).is_ok());
    }

    #[test]
    fn slopes_are_exact_for_quadratics() {
        let g = grid();
        let u = DeflectionField::from_fn(&g, |x| x * (1.0 - x), 4.0).unwrap();
        for (i, s) in u.slopes().iter().enumerate() {
            assert!((s - (1.0 - 2.0 * g.x(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_check() {
        let g = grid();
        let u = DeflectionField::flat(&g, -1.0 + 1e-9).unwrap();
        assert!(matches!(u.require_gap(1e-6), Err(Error::DegenerateDomain { .. })));
        assert!(!u.is_pinned());
    }
}

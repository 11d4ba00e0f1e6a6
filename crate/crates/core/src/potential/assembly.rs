//! Ritz assembly on the mapped tensor grids.
//!
//! Unknowns are numbered column by column, `g = i * ncol + r`, where `i` is
//! the plate node and `r` counts vertical nodes from the ground plate up
//! through both layers. The discrete functional is
//! `J(psi) = psi'K psi / 2 - b'psi + c`.
//!
//! Terms without `eps` are integrated with the trapezoid rule in `x` and
//! exactly in the vertical direction, so at `eps = 0` the columns decouple
//! into one-dimensional series capacitors. Terms carrying `eps^2` use 2x2
//! Gauss points.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::linalg::{self, SolveStats, SymBanded};
use crate::params::LinearBackend;

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

pub(crate) struct System {
    ncol: usize,
    triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub constant: f64,
    pub fixed: Vec<bool>,
    pub x: Vec<f64>,
}

impl System {
    pub fn new(nodes_x: usize, ncol: usize) -> Self {
        let n = nodes_x * ncol;
        Self {
            ncol,
            triplets: Vec::with_capacity(16 * n),
            rhs: vec![0.0; n],
            constant: 0.0,
            fixed: vec![false; n],
            x: vec![0.0; n],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, r: usize) -> usize {
        i * self.ncol + r
    }

    pub fn fix(&mut self, i: usize, r: usize, value: f64) {
        let g = self.index(i, r);
        self.fixed[g] = true;
        self.x[g] = value;
    }

    fn push_pair(&mut self, a: usize, b: usize, v: f64) {
        self.triplets.push((a, b, v));
        if a != b {
            self.triplets.push((b, a, v));
        }
    }

    /// Adds `c * (psi[g1] - psi[g0])^2 / 2`.
    pub fn add_spring(&mut self, g0: usize, g1: usize, c: f64) {
        self.push_pair(g0, g0, c);
        self.push_pair(g1, g1, c);
        self.push_pair(g0, g1, -c);
    }

    /// Adds `c * (psi[g] - 1)^2 / 2`.
    pub fn add_unit_pull(&mut self, g: usize, c: f64) {
        self.push_pair(g, g, c);
        self.rhs[g] += c;
        self.constant += 0.5 * c;
    }

    /// Adds `(phi - 1)' m (phi - 1) / 2` for a symmetric 2x2 block on `(g0, g1)`.
    pub fn add_unit_pull_pair(&mut self, g0: usize, g1: usize, m: [[f64; 2]; 2]) {
        self.push_pair(g0, g0, m[0][0]);
        self.push_pair(g1, g1, m[1][1]);
        self.push_pair(g0, g1, m[0][1]);
        self.rhs[g0] += m[0][0] + m[0][1];
        self.rhs[g1] += m[1][0] + m[1][1];
        self.constant += 0.5 * (m[0][0] + 2.0 * m[0][1] + m[1][1]);
    }

    /// Adds `int grad' M grad / 2` over the bilinear element with lower-left
    /// node `(i, r)` and spacings `(hx, hy)`. `metric(xi, nu)` receives the
    /// local coordinates in `[0, 1]^2`.
    pub fn add_gauss_element(
        &mut self,
        i: usize,
        r: usize,
        hx: f64,
        hy: f64,
        metric: impl Fn(f64, f64) -> [[f64; 2]; 2],
    ) {
        let nodes = [
            self.index(i, r),
            self.index(i + 1, r),
            self.index(i, r + 1),
            self.index(i + 1, r + 1),
        ];
        let mut k = [[0.0; 4]; 4];
        let wq = 0.25 * hx * hy;
        for &xi in &GAUSS {
            for &nu in &GAUSS {
                let m = metric(xi, nu);
                let grads = [
                    [-(1.0 - nu) / hx, -(1.0 - xi) / hy],
                    [(1.0 - nu) / hx, -xi / hy],
                    [-nu / hx, (1.0 - xi) / hy],
                    [nu / hx, xi / hy],
                ];
                for a in 0..4 {
                    let ma = [
                        m[0][0] * grads[a][0] + m[0][1] * grads[a][1],
                        m[1][0] * grads[a][0] + m[1][1] * grads[a][1],
                    ];
                    for b in a..4 {
                        k[a][b] += wq * (ma[0] * grads[b][0] + ma[1] * grads[b][1]);
                    }
                }
            }
        }
        for a in 0..4 {
            for b in a..4 {
                if k[a][b] != 0.0 {
                    self.push_pair(nodes[a], nodes[b], k[a][b]);
                }
            }
        }
    }

    /// Solves for the free values and returns the functional at the optimum.
    pub fn solve(&mut self, backend: LinearBackend, tol: f64) -> Result<(f64, SolveStats)> {
        let n = self.x.len();
        let mut coo = CooMatrix::new(n, n);
        for &(a, b, v) in &self.triplets {
            coo.push(a, b, v);
        }
        let k = CsrMatrix::from(&coo);
        let stats = match backend {
            LinearBackend::Pcg => {
                let free = self.fixed.iter().filter(|f| !**f).count();
                let cap = ((50.0 * (free as f64).sqrt()).ceil() as usize).max(50);
                linalg::pcg_masked(&k, &self.rhs, &mut self.x, &self.fixed, tol, cap)?
            }
            LinearBackend::BandedCholesky => {
                let mut band = SymBanded::zeros(n, self.ncol + 1);
                for (a, b, v) in k.triplet_iter() {
                    if a >= b {
                        band.add(a, b, *v);
                    }
                }
                linalg::solve_dirichlet_banded(&band, &self.rhs, &mut self.x, &self.fixed)?;
                SolveStats {
                    iterations: 1,
                    relative_residual: relative_residual(&k, &self.rhs, &self.x, &self.fixed),
                }
            }
        };
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure {
                iterations: stats.iterations,
                residual: f64::NAN,
            });
        }
        let kx = &k * &nalgebra::DVector::from_column_slice(&self.x);
        let quad: f64 = self.x.iter().zip(kx.iter()).map(|(a, b)| a * b).sum();
        let lin: f64 = self.x.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        Ok((0.5 * quad - lin + self.constant, stats))
    }
}

fn relative_residual(k: &CsrMatrix<f64>, b: &[f64], x: &[f64], fixed: &[bool]) -> f64 {
    let kx = k * &nalgebra::DVector::from_column_slice(x);
    let data: Vec<f64> = x
        .iter()
        .zip(fixed)
        .map(|(v, f)| if *f { *v } else { 0.0 })
        .collect();
    let kd = k * &nalgebra::DVector::from_vec(data);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        if !fixed[i] {
            num += (b[i] - kx[i]).powi(2);
            den += (b[i] - kd[i]).powi(2);
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub(crate) fn gauss_points() -> [f64; 2] {
    GAUSS
}

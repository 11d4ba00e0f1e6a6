//! Electrostatic potential below and inside the deflected plate.
//!
//! The gap `-1 < z < u(x)` is mapped to the unit square by
//! `eta = (1 + z) / (1 + u)` and the plate `u < z < u + delta` by
//! `zeta = (z - u) / delta`. The potential minimizes
//! `1/2 int sigma (eps^2 psi_x^2 + psi_z^2)` over the physical domain; the
//! returned energy is minus that minimum.
//!
//! On the lateral edges `x = 0, 1` the potential is prescribed as the
//! one-dimensional layered capacitor profile of the edge column, which is
//! the exact `x`-independent solution whenever `u` and `sigma` do not vary
//! in `x`.

mod assembly;

use serde::{Deserialize, Serialize};

use crate::deflection::DeflectionField;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::permittivity::PermittivityProfile;

use assembly::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialModel {
    /// Two layers, permittivity jump across the bottom face of the plate.
    Transmission,
    /// Plate of vanishing thickness held at the full voltage.
    Membrane,
    /// Plate of vanishing thickness with a thin dielectric film; the film
    /// enters through a Robin condition on the bottom face.
    Robin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSolution {
    pub model: PotentialModel,
    pub grid: Grid,
    /// Gap layer, `psi1[i * n_z1 + j]` at `(x_i, eta_j)`.
    pub psi1: Vec<f64>,
    /// Plate layer, `psi2[i * n_z2 + k]` at `(x_i, zeta_k)`; transmission only.
    pub psi2: Option<Vec<f64>>,
    pub energy: f64,
    pub delta: f64,
    pub eps: f64,
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// One exported potential sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub z: f64,
    pub layer: u8,
    pub psi: f64,
}

impl PotentialSolution {
    pub fn psi1_at(&self, i: usize, j: usize) -> f64 {
        self.psi1[i * self.grid.n_z1 + j]
    }

    pub fn psi2_at(&self, i: usize, k: usize) -> Option<f64> {
        self.psi2.as_ref().map(|p| p[i * self.grid.n_z2 + k])
    }

    /// Potential on the bottom face of the plate.
    pub fn interface_values(&self) -> Vec<f64> {
        let top = self.grid.n_z1 - 1;
        (0..self.grid.nodes_x()).map(|i| self.psi1_at(i, top)).collect()
    }

    /// Samples in physical coordinates, gap layer first. The shared
    /// interface row is reported once, as part of layer 1.
    pub fn samples(&self) -> Vec<FieldSample> {
        let g = &self.grid;
        let mut out = Vec::new();
        for i in 0..g.nodes_x() {
            let x = g.x(i);
            let w = 1.0 + self.u[i];
            for j in 0..g.n_z1 {
                out.push(FieldSample {
                    x,
                    z: -1.0 + g.eta(j) * w,
                    layer: 1,
                    psi: self.psi1_at(i, j),
                });
            }
        }
        if let Some(p2) = &self.psi2 {
            for i in 0..g.nodes_x() {
                let x = g.x(i);
                for k in 1..g.n_z2 {
                    out.push(FieldSample {
                        x,
                        z: self.u[i] + self.delta * g.zeta(k),
                        layer: 2,
                        psi: p2[i * g.n_z2 + k],
                    });
                }
            }
        }
        out
    }

    pub fn min_max(&self) -> (f64, f64) {
        let all = self.psi1.iter().chain(self.psi2.iter().flatten());
        all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// Difference of the conormal fluxes `sigma (psi_z - eps^2 u' psi_x)`
    /// computed from each side of the bottom face of the plate, at the
    /// interior plate nodes. Transmission solutions only.
    pub fn interface_flux_mismatch(&self, profile: &PermittivityProfile) -> Result<Vec<f64>> {
        let p2 = self
            .psi2
            .as_ref()
            .ok_or_else(|| Error::arg("flux mismatch needs a two-layer solution"))?;
        let g = &self.grid;
        let n = g.nodes_x();
        let (he, hz, h) = (g.h_eta(), g.h_zeta(), g.h_x());
        let eps2 = self.eps * self.eps;
        let slopes = crate::deflection::nodal_derivative(&self.u, h);
        let trace = self.interface_values();
        let trace_x = crate::deflection::nodal_derivative(&trace, h);
        let n1 = g.n_z1;
        let n2 = g.n_z2;
        Ok((1..n - 1)
            .map(|i| {
                let w = 1.0 + self.u[i];
                let up = slopes[i];
                let p1 = |j: usize| self.psi1_at(i, j);
                let d_eta = (3.0 * p1(n1 - 1) - 4.0 * p1(n1 - 2) + p1(n1 - 3)) / (2.0 * he);
                let z1 = d_eta / w;
                let x1 = trace_x[i] - up / w * d_eta;
                let q = |k: usize| p2[i * n2 + k];
                let d_zeta = (-3.0 * q(0) + 4.0 * q(1) - q(2)) / (2.0 * hz);
                let z2 = d_zeta / self.delta;
                let x2 = trace_x[i] - up / self.delta * d_zeta;
                let s = profile.value(g.x(i), 0.0);
                (z1 - eps2 * up * x1) - s * (z2 - eps2 * up * x2)
            })
            .collect())
    }
}

fn check_inputs(u: &DeflectionField, params: &ModelParams, grid: &Grid) -> Result<()> {
    params.validate()?;
    if u.len() != grid.nodes_x() {
        return Err(Error::arg(format!(
            "deflection has {} nodes, grid has {}",
            u.len(),
            grid.nodes_x()
        )));
    }
    u.require_gap(params.gap_tol)
}

/// Element means of `sigma*(x, delta * zeta)` over the plate layer at column `x`.
fn layer_means(profile: &PermittivityProfile, x: f64, delta: f64, grid: &Grid) -> Vec<f64> {
    let hz = grid.h_zeta();
    let gp = assembly::gauss_points();
    (0..grid.n_z2 - 1)
        .map(|k| {
            let z0 = grid.zeta(k);
            0.5 * gp
                .iter()
                .map(|t| profile.value(x, delta * (z0 + t * hz)))
                .sum::<f64>()
        })
        .collect()
}

pub fn solve_transmission(
    u: &DeflectionField,
    profile: &PermittivityProfile,
    params: &ModelParams,
    grid: &Grid,
) -> Result<PotentialSolution> {
    if params.delta == 0.0 {
        return solve_membrane(u, params, grid);
    }
    check_inputs(u, params, grid)?;
    profile.validate(params.delta)?;

    let nx = grid.nodes_x();
    let (n1, n2) = (grid.n_z1, grid.n_z2);
    let ncol = n1 + n2 - 1;
    let (hx, he, hz) = (grid.h_x(), grid.h_eta(), grid.h_zeta());
    let delta = params.delta;
    let eps2 = params.eps * params.eps;
    let uv = u.values();
    let omega = grid.trapezoid_weights();

    let mut sys = System::new(nx, ncol);
    let mut means = Vec::with_capacity(nx);
    for i in 0..nx {
        let w = 1.0 + uv[i];
        for j in 0..n1 - 1 {
            sys.add_spring(sys.index(i, j), sys.index(i, j + 1), omega[i] / (w * he));
        }
        let m = layer_means(profile, grid.x(i), delta, grid);
        for (k, s) in m.iter().enumerate() {
            let r = n1 - 1 + k;
            sys.add_spring(sys.index(i, r), sys.index(i, r + 1), omega[i] * s / (delta * hz));
        }
        means.push(m);
    }
    if eps2 > 0.0 {
        for i in 0..nx - 1 {
            let (u0, u1) = (uv[i], uv[i + 1]);
            let slope = (u1 - u0) / hx;
            let x0 = grid.x(i);
            for j in 0..n1 - 1 {
                sys.add_gauss_element(i, j, hx, he, |xi, nu| {
                    let w = 1.0 + u0 + xi * (u1 - u0);
                    let eta = (j as f64 + nu) * he;
                    let c = -eta * slope;
                    [[eps2 * w, eps2 * c], [eps2 * c, eps2 * c * c / w]]
                });
            }
            for k in 0..n2 - 1 {
                sys.add_gauss_element(i, n1 - 1 + k, hx, hz, |xi, nu| {
                    let s = profile.value(x0 + xi * hx, delta * (k as f64 + nu) * hz);
                    let a = eps2 * s;
                    [[a * delta, -a * slope], [-a * slope, a * slope * slope / delta]]
                });
            }
        }
    }
    for i in 0..nx {
        sys.fix(i, 0, 0.0);
        sys.fix(i, ncol - 1, 1.0);
    }
    for i in [0, nx - 1] {
        let w = 1.0 + uv[i];
        let res: Vec<f64> = means[i].iter().map(|s| delta * hz / s).collect();
        let a = 1.0 / (w + res.iter().sum::<f64>());
        for j in 0..n1 {
            sys.fix(i, j, a * w * grid.eta(j));
        }
        let mut acc = w;
        for (k, r) in res.iter().enumerate() {
            acc += r;
            sys.fix(i, n1 + k, a * acc);
        }
        sys.fix(i, ncol - 1, 1.0);
    }

    let (j, stats) = sys.solve(params.linear_backend, params.tol_linear)?;
    let mut psi1 = Vec::with_capacity(nx * n1);
    let mut psi2 = Vec::with_capacity(nx * n2);
    for i in 0..nx {
        let col = &sys.x[i * ncol..(i + 1) * ncol];
        psi1.extend_from_slice(&col[..n1]);
        psi2.extend_from_slice(&col[n1 - 1..]);
    }
    Ok(PotentialSolution {
        model: PotentialModel::Transmission,
        grid: *grid,
        psi1,
        psi2: Some(psi2),
        energy: -j,
        delta,
        eps: params.eps,
        u: uv.to_vec(),
        iterations: stats.iterations,
        residual: stats.relative_residual,
    })
}

/// Single-layer assembly shared by the membrane and Robin problems.
fn gap_layer(u: &[f64], eps2: f64, grid: &Grid) -> System {
    let nx = grid.nodes_x();
    let n1 = grid.n_z1;
    let (hx, he) = (grid.h_x(), grid.h_eta());
    let omega = grid.trapezoid_weights();
    let mut sys = System::new(nx, n1);
    for i in 0..nx {
        let w = 1.0 + u[i];
        for j in 0..n1 - 1 {
            sys.add_spring(sys.index(i, j), sys.index(i, j + 1), omega[i] / (w * he));
        }
    }
    if eps2 > 0.0 {
        for i in 0..nx - 1 {
            let (u0, u1) = (u[i], u[i + 1]);
            let slope = (u1 - u0) / hx;
            for j in 0..n1 - 1 {
                sys.add_gauss_element(i, j, hx, he, |xi, nu| {
                    let w = 1.0 + u0 + xi * (u1 - u0);
                    let eta = (j as f64 + nu) * he;
                    let c = -eta * slope;
                    [[eps2 * w, eps2 * c], [eps2 * c, eps2 * c * c / w]]
                });
            }
        }
    }
    for i in 0..nx {
        sys.fix(i, 0, 0.0);
    }
    sys
}

fn single_layer_solution(
    model: PotentialModel,
    mut sys: System,
    u: &[f64],
    params: &ModelParams,
    grid: &Grid,
) -> Result<PotentialSolution> {
    let (j, stats) = sys.solve(params.linear_backend, params.tol_linear)?;
    Ok(PotentialSolution {
        model,
        grid: *grid,
        psi1: sys.x,
        psi2: None,
        energy: -j,
        delta: 0.0,
        eps: params.eps,
        u: u.to_vec(),
        iterations: stats.iterations,
        residual: stats.relative_residual,
    })
}

pub fn solve_membrane(
    u: &DeflectionField,
    params: &ModelParams,
    grid: &Grid,
) -> Result<PotentialSolution> {
    check_inputs(u, params, grid)?;
    let uv = u.values();
    let nx = grid.nodes_x();
    let n1 = grid.n_z1;
    let mut sys = gap_layer(uv, params.eps * params.eps, grid);
    for i in 0..nx {
        sys.fix(i, n1 - 1, 1.0);
    }
    for i in [0, nx - 1] {
        for j in 0..n1 {
            sys.fix(i, j, grid.eta(j));
        }
    }
    single_layer_solution(PotentialModel::Membrane, sys, uv, params, grid)
}

/// The film enters as `1/2 int sigma*(x, 0) (psi - 1)^2 (1 + eps^2 u'^2) dx`
/// on the bottom face of the plate, discretized with the same quadrature as
/// the plate layer of [`solve_transmission`] so that a transmission solve
/// with permittivity `delta * sigma*` approaches it as `delta -> 0`.
pub fn solve_robin(
    u: &DeflectionField,
    profile: &PermittivityProfile,
    params: &ModelParams,
    grid: &Grid,
) -> Result<PotentialSolution> {
    check_inputs(u, params, grid)?;
    profile.validate(0.0)?;
    let uv = u.values();
    let nx = grid.nodes_x();
    let n1 = grid.n_z1;
    let hx = grid.h_x();
    let eps2 = params.eps * params.eps;
    let omega = grid.trapezoid_weights();
    let mut sys = gap_layer(uv, eps2, grid);
    for i in 0..nx {
        let s = profile.value(grid.x(i), 0.0);
        let g = sys.index(i, n1 - 1);
        sys.add_unit_pull(g, omega[i] * s);
    }
    if eps2 > 0.0 {
        let gp = assembly::gauss_points();
        for i in 0..nx - 1 {
            let slope = (uv[i + 1] - uv[i]) / hx;
            if slope == 0.0 {
                continue;
            }
            let mut m = [[0.0; 2]; 2];
            for t in gp {
                let s = profile.value(grid.x(i) + t * hx, 0.0);
                let c = 0.5 * hx * eps2 * slope * slope * s;
                let phi = [1.0 - t, t];
                for a in 0..2 {
                    for b in 0..2 {
                        m[a][b] += c * phi[a] * phi[b];
                    }
                }
            }
            let (g0, g1) = (sys.index(i, n1 - 1), sys.index(i + 1, n1 - 1));
            sys.add_unit_pull_pair(g0, g1, m);
        }
    }
    for i in [0, nx - 1] {
        let w = 1.0 + uv[i];
        let s = profile.value(grid.x(i), 0.0);
        let a = 1.0 / (w + 1.0 / s);
        for j in 0..n1 {
            sys.fix(i, j, a * w * grid.eta(j));
        }
    }
    single_layer_solution(PotentialModel::Robin, sys, uv, params, grid)
}

/// Dispatches on the model tag.
pub fn solve(
    model: PotentialModel,
    u: &DeflectionField,
    profile: &PermittivityProfile,
    params: &ModelParams,
    grid: &Grid,
) -> Result<PotentialSolution> {
    match model {
        PotentialModel::Transmission => solve_transmission(u, profile, params, grid),
        PotentialModel::Membrane => solve_membrane(u, params, grid),
        PotentialModel::Robin => solve_robin(u, profile, params, grid),
    }
}

#[cfg(test)]
mod tests;

//! Electrostatic force densities `g = dE_e/du`; the plate equation carries
//! `-lambda g` on its right-hand side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deflection::{nodal_derivative, DeflectionField};
use crate::error::{Error, Result};
use crate::grid::{trapezoid, Grid};
use crate::params::ModelParams;
use crate::permittivity::{n_delta, PermittivityProfile};
use crate::potential::{self, PotentialModel, PotentialSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForceKind {
    Transmission,
    Pelesko,
    Membrane,
    Robin,
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    pub values: Vec<f64>,
    pub kind: ForceKind,
}

/// The four groups of the two-layer force, nodewise.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionTerms {
    /// `1/2 int d_s sigma* (eps^2 psi_x^2 + psi_z^2)` across the plate.
    pub heterogeneity: Vec<f64>,
    /// Field pressure on the top face.
    pub top: Vec<f64>,
    /// Permittivity jump acting on the tangential field at the bottom face.
    pub jump_tangential: Vec<f64>,
    /// Permittivity jump acting on the normal displacement at the bottom face.
    pub jump_normal: Vec<f64>,
}

impl TransmissionTerms {
    pub fn total(&self) -> Vec<f64> {
        (0..self.top.len())
            .map(|i| {
                self.heterogeneity[i] + self.top[i] + self.jump_tangential[i] + self.jump_normal[i]
            })
            .collect()
    }
}

fn check_solution(
    sol: &PotentialSolution,
    u: &DeflectionField,
    params: &ModelParams,
    model: PotentialModel,
) -> Result<()> {
    if sol.model != model {
        return Err(Error::arg(format!(
            "expected a {model:?} solution, got {:?}",
            sol.model
        )));
    }
    if sol.u != u.values() {
        return Err(Error::arg("potential was solved for a different deflection"));
    }
    if sol.eps != params.eps || (model == PotentialModel::Transmission && sol.delta != params.delta) {
        return Err(Error::arg("potential was solved with different constants"));
    }
    Ok(())
}

pub fn transmission_terms(
    sol: &PotentialSolution,
    u: &DeflectionField,
    profile: &PermittivityProfile,
    params: &ModelParams,
) -> Result<TransmissionTerms> {
    check_solution(sol, u, params, PotentialModel::Transmission)?;
    let psi2 = sol.psi2.as_ref().expect("two-layer solution");
    let g = &sol.grid;
    let (nx, n2) = (g.nodes_x(), g.n_z2);
    let (hx, hz) = (g.h_x(), g.h_zeta());
    let delta = sol.delta;
    let eps2 = params.eps * params.eps;
    let slopes = u.slopes();

    // d/dx along each plate-layer row, d/dzeta along each column
    let mut px = vec![0.0; nx * n2];
    for k in 0..n2 {
        let row: Vec<f64> = (0..nx).map(|i| psi2[i * n2 + k]).collect();
        for (i, d) in nodal_derivative(&row, hx).into_iter().enumerate() {
            px[i * n2 + k] = d;
        }
    }
    let mut pz = vec![0.0; nx * n2];
    for i in 0..nx {
        let d = nodal_derivative(&psi2[i * n2..(i + 1) * n2], hz);
        pz[i * n2..(i + 1) * n2].copy_from_slice(&d);
    }

    let mut t = TransmissionTerms {
        heterogeneity: vec![0.0; nx],
        top: vec![0.0; nx],
        jump_tangential: vec![0.0; nx],
        jump_normal: vec![0.0; nx],
    };
    for i in 0..nx {
        let x = g.x(i);
        let up = slopes[i];
        let grad = |k: usize| {
            let z = pz[i * n2 + k] / delta;
            let xd = px[i * n2 + k] - up * z;
            (xd, z)
        };
        let integrand: Vec<f64> = (0..n2)
            .map(|k| {
                let (xd, z) = grad(k);
                profile.ds(x, delta * g.zeta(k)) * (eps2 * xd * xd + z * z)
            })
            .collect();
        t.heterogeneity[i] = 0.5 * delta * trapezoid(&integrand);

        let (xd, z) = grad(n2 - 1);
        t.top[i] = 0.5 * profile.value(x, delta) * (eps2 * xd * xd + z * z);

        let (xd, z) = grad(0);
        let s0 = profile.value(x, 0.0);
        let metric = 1.0 + eps2 * up * up;
        let tang = z * up + xd;
        t.jump_tangential[i] = 0.5 * (s0 - 1.0) / metric * eps2 * tang * tang;
        let norm = z - eps2 * up * xd;
        t.jump_normal[i] = 0.5 * (s0 - 1.0) * s0 / metric * norm * norm;
    }
    Ok(t)
}

pub fn force_transmission(
    sol: &PotentialSolution,
    u: &DeflectionField,
    profile: &PermittivityProfile,
    params: &ModelParams,
) -> Result<ForceField> {
    Ok(ForceField {
        values: transmission_terms(sol, u, profile, params)?.total(),
        kind: ForceKind::Transmission,
    })
}

/// Top-face pressure alone, the force used when the field inside the
/// plate is ignored.
pub fn force_pelesko(
    sol: &PotentialSolution,
    u: &DeflectionField,
    profile: &PermittivityProfile,
    params: &ModelParams,
) -> Result<ForceField> {
    Ok(ForceField {
        values: transmission_terms(sol, u, profile, params)?.top,
        kind: ForceKind::Pelesko,
    })
}

/// `d psi / d eta` at the top of every gap column, with the trace slope.
fn gap_top(sol: &PotentialSolution) -> (Vec<f64>, Vec<f64>) {
    let g = &sol.grid;
    let n1 = g.n_z1;
    let he = g.h_eta();
    let d_eta = (0..g.nodes_x())
        .map(|i| {
            let p = |j: usize| sol.psi1_at(i, j);
            (3.0 * p(n1 - 1) - 4.0 * p(n1 - 2) + p(n1 - 3)) / (2.0 * he)
        })
        .collect();
    let trace_x = nodal_derivative(&sol.interface_values(), g.h_x());
    (d_eta, trace_x)
}

pub fn force_membrane(
    sol: &PotentialSolution,
    u: &DeflectionField,
    params: &ModelParams,
) -> Result<ForceField> {
    check_solution(sol, u, params, PotentialModel::Membrane)?;
    let eps2 = params.eps * params.eps;
    let (d_eta, _) = gap_top(sol);
    let slopes = u.slopes();
    let values = u
        .values()
        .iter()
        .zip(&d_eta)
        .zip(&slopes)
        .map(|((v, d), up)| {
            let z = d / (1.0 + v);
            0.5 * z * z * (1.0 + eps2 * up * up)
        })
        .collect();
    Ok(ForceField {
        values,
        kind: ForceKind::Membrane,
    })
}

pub fn force_robin(
    sol: &PotentialSolution,
    u: &DeflectionField,
    profile: &PermittivityProfile,
    params: &ModelParams,
) -> Result<ForceField> {
    check_solution(sol, u, params, PotentialModel::Robin)?;
    let g = &sol.grid;
    let eps2 = params.eps * params.eps;
    let (d_eta, trace_x) = gap_top(sol);
    let trace = sol.interface_values();
    let slopes = u.slopes();
    let uv = u.values();
    let film: Vec<f64> = (0..g.nodes_x()).map(|i| profile.value(g.x(i), 0.0)).collect();
    let flux: Vec<f64> = (0..g.nodes_x())
        .map(|i| film[i] * (trace[i] - 1.0).powi(2) * slopes[i])
        .collect();
    let div = nodal_derivative(&flux, g.h_x());
    let values = (0..g.nodes_x())
        .map(|i| {
            let w = 1.0 + uv[i];
            let z = d_eta[i] / w;
            let xd = trace_x[i] - slopes[i] / w * d_eta[i];
            -0.5 * (eps2 * xd * xd + z * z)
                - film[i] * (1.0 + eps2 * slopes[i] * slopes[i]) * (trace[i] - 1.0) * z
                + eps2 * div[i]
        })
        .collect();
    Ok(ForceField {
        values,
        kind: ForceKind::Robin,
    })
}

/// Explicit force of the vanishing aspect ratio models,
/// `g = 1/2 (1 + u + N)^-2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReducedForce {
    /// `N = N_delta`, nodal values.
    Transmission { n_delta: Vec<f64> },
    /// `N = 1 / sigma*(x, 0)`, nodal film permittivity.
    Robin { film: Vec<f64> },
    /// `N = 0`; singular at touchdown.
    Classical,
}

impl ReducedForce {
    /// Transmission variant with a constant offset `N = c`.
    pub fn uniform(grid: &Grid, c: f64) -> Self {
        ReducedForce::Transmission {
            n_delta: vec![c; grid.nodes_x()],
        }
    }

    pub fn from_profile(
        profile: &PermittivityProfile,
        params: &ModelParams,
        grid: &Grid,
    ) -> Result<Self> {
        Ok(ReducedForce::Transmission {
            n_delta: n_delta(profile, params.delta, &grid.xs(), params.quad_points)?,
        })
    }

    pub fn robin(profile: &PermittivityProfile, grid: &Grid) -> Result<Self> {
        profile.validate(0.0)?;
        Ok(ReducedForce::Robin {
            film: grid.xs().iter().map(|&x| profile.value(x, 0.0)).collect(),
        })
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, ReducedForce::Classical)
    }

    /// Nodal offsets `N`.
    pub fn offsets(&self, n: usize) -> Result<Vec<f64>> {
        let v = match self {
            ReducedForce::Transmission { n_delta } => n_delta.clone(),
            ReducedForce::Robin { film } => film.iter().map(|s| 1.0 / s).collect(),
            ReducedForce::Classical => vec![0.0; n],
        };
        if v.len() != n {
            return Err(Error::arg(format!(
                "force offsets have {} nodes, deflection has {n}",
                v.len()
            )));
        }
        if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidProfile("force offsets must be finite and >= 0".into()));
        }
        Ok(v)
    }
}

/// Nodewise reduced force for raw nodal values.
pub(crate) fn reduced_values(u: &[f64], offsets: &[f64]) -> Result<Vec<f64>> {
    u.iter()
        .zip(offsets)
        .enumerate()
        .map(|(i, (v, n))| {
            let d = 1.0 + v + n;
            if d <= 0.0 {
                Err(Error::SingularForce { node: i, u: *v })
            } else {
                Ok(0.5 / (d * d))
            }
        })
        .collect()
}

pub fn force_reduced(
    u: &DeflectionField,
    variant: &ReducedForce,
    _params: &ModelParams,
) -> Result<ForceField> {
    let offsets = variant.offsets(u.len())?;
    Ok(ForceField {
        values: reduced_values(u.values(), &offsets)?,
        kind: ForceKind::Reduced,
    })
}

/// `-1/2 int dx / (1 + u + N)` by the trapezoid rule over plate nodes.
pub fn reduced_energy(u: &[f64], offsets: &[f64]) -> f64 {
    let vals: Vec<f64> = u
        .iter()
        .zip(offsets)
        .map(|(v, n)| -0.5 / (1.0 + v + n))
        .collect();
    trapezoid(&vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeDerivativeReport {
    /// `int g v dx`.
    pub analytic: f64,
    /// Centered difference quotient of the energy.
    pub fd: f64,
    pub fd_forward: f64,
    pub fd_backward: f64,
    pub rel_err: f64,
}

/// Compares `int g(u) v` with difference quotients of the discrete energy
/// from fresh potential solves at `u`, `u + s v` and `u - s v`.
pub fn validate_shape_derivative(
    u: &DeflectionField,
    v: &[f64],
    model: PotentialModel,
    profile: &PermittivityProfile,
    params: &ModelParams,
    grid: &Grid,
    s: f64,
) -> Result<ShapeDerivativeReport> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::arg(format!("difference step must be finite and nonzero, got {s}")));
    }
    if v.len() != u.len() {
        return Err(Error::arg("test field length mismatch"));
    }
    let up = u.perturbed(v, s)?;
    let um = u.perturbed(v, -s)?;
    let sol = potential::solve(model, u, profile, params, grid)?;
    let g = match model {
        PotentialModel::Transmission => force_transmission(&sol, u, profile, params)?,
        PotentialModel::Membrane => force_membrane(&sol, u, params)?,
        PotentialModel::Robin => force_robin(&sol, u, profile, params)?,
    };
    let ep = potential::solve(model, &up, profile, params, grid)?.energy;
    let em = potential::solve(model, &um, profile, params, grid)?.energy;
    let gv: Vec<f64> = g.values.iter().zip(v).map(|(a, b)| a * b).collect();
    let analytic = trapezoid(&gv);
    let fd = (ep - em) / (2.0 * s);
    Ok(ShapeDerivativeReport {
        analytic,
        fd,
        fd_forward: (ep - sol.energy) / s,
        fd_backward: (sol.energy - em) / s,
        rel_err: (analytic - fd).abs() / fd.abs().max(f64::EPSILON),
    })
}

/// Seeded test field `sum_k a_k sin(k pi x)`, `k = 1..=4`, with
/// `a_1 in [0.5, 1]` and the other amplitudes in `[-0.5, 0.5]`.
pub fn test_field(grid: &Grid, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let a: Vec<f64> = (0..4)
        .map(|k| {
            if k == 0 {
                rng.gen_range(0.5..=1.0)
            } else {
                rng.gen_range(-0.5..=0.5)
            }
        })
        .collect();
    let n = grid.nodes_x();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return 0.0;
            }
            let x = grid.x(i);
            a.iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).sin())
                .sum()
        })
        .collect()
}

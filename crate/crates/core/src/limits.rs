//! Convergence studies of the electrostatic energy in the thin-plate and
//! small-aspect-ratio limits.

use serde::{Deserialize, Serialize};

use crate::deflection::DeflectionField;
use crate::error::{Error, Result};
use crate::forces::{reduced_energy, ReducedForce};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::permittivity::PermittivityProfile;
use crate::potential::{solve_membrane, solve_robin, solve_transmission, PotentialModel};

/// How the plate permittivity scales with its thickness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThinPlateScaling {
    /// Permittivity fixed; the plate disappears and the membrane remains.
    O1,
    /// Permittivity `delta * sigma*`; the plate leaves a film on the lower face.
    Od,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    /// `delta` or `eps`.
    pub parameter: f64,
    pub energy: f64,
    pub limit: f64,
    pub gap: f64,
    /// Empirical order against the previous row, when both gaps are resolved.
    pub order: Option<f64>,
    pub n_x: usize,
    pub n_z1: usize,
    pub n_z2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
}

impl LimitTable {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap).collect()
    }

    /// Fills the order column from consecutive rows. Orders are left out
    /// where either gap is at most `resolved`.
    pub fn with_orders(mut rows: Vec<LimitRow>, resolved: f64) -> Self {
        for k in 1..rows.len() {
            let (prev, cur) = (rows[k - 1], rows[k]);
            rows[k].order = (prev.gap > resolved && cur.gap > resolved)
                .then(|| (prev.gap / cur.gap).ln() / (prev.parameter / cur.parameter).ln());
        }
        LimitTable { rows }
    }
}

fn check_decreasing(seq: &[f64], name: &str) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::arg(format!("{name} sequence is empty")));
    }
    if seq.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::arg(format!("{name} sequence must be strictly decreasing")));
    }
    Ok(())
}

fn table(
    seq: &[f64],
    energies: Vec<(f64, f64)>,
    resolved: f64,
    grid: &Grid,
) -> LimitTable {
    let rows = seq
        .iter()
        .zip(energies)
        .map(|(&p, (energy, limit))| LimitRow {
            parameter: p,
            energy,
            limit,
            gap: (energy - limit).abs(),
            order: None,
            n_x: grid.n_x,
            n_z1: grid.n_z1,
            n_z2: grid.n_z2,
        })
        .collect();
    LimitTable::with_orders(rows, resolved)
}

/// Energy gap between the two-layer problem and its `delta -> 0` limit.
/// The plate layer keeps `grid.n_z2` nodes at every `delta`.
pub fn thin_plate_study(
    u: &DeflectionField,
    profile: &PermittivityProfile,
    scaling: ThinPlateScaling,
    deltas: &[f64],
    params: &ModelParams,
    grid: &Grid,
) -> Result<LimitTable> {
    check_decreasing(deltas, "delta")?;
    if deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::arg("thin-plate study needs delta > 0"));
    }
    let limit = match scaling {
        ThinPlateScaling::O1 => solve_membrane(u, params, grid)?.energy,
        ThinPlateScaling::Od => solve_robin(u, profile, params, grid)?.energy,
    };
    let energies = deltas
        .iter()
        .map(|&d| {
            let layer = match scaling {
                ThinPlateScaling::O1 => *profile,
                ThinPlateScaling::Od => profile.scaled(d),
            };
            let e = solve_transmission(u, &layer, &params.with_delta(d), grid)?.energy;
            Ok((e, limit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table(deltas, energies, 10.0 * params.tol_linear, grid))
}

/// Energy gap between the full solve at aspect ratio `eps` and the explicit
/// `eps = 0` energy `-1/2 int dx / (1 + u + N)`.
pub fn aspect_ratio_study(
    u: &DeflectionField,
    profile: &PermittivityProfile,
    model: PotentialModel,
    epss: &[f64],
    params: &ModelParams,
    grid: &Grid,
) -> Result<LimitTable> {
    check_decreasing(epss, "eps")?;
    let reduced = match model {
        PotentialModel::Transmission => ReducedForce::from_profile(profile, params, grid)?,
        PotentialModel::Robin => ReducedForce::robin(profile, grid)?,
        PotentialModel::Membrane => ReducedForce::Classical,
    };
    let limit = reduced_energy(u.values(), &reduced.offsets(u.len())?);
    let energies = epss
        .iter()
        .map(|&e| {
            let p = params.with_eps(e);
            let sol = match model {
                PotentialModel::Transmission => solve_transmission(u, profile, &p, grid)?,
                PotentialModel::Robin => solve_robin(u, profile, &p, grid)?,
                PotentialModel::Membrane => solve_membrane(u, &p, grid)?,
            };
            Ok((sol.energy, limit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table(epss, energies, 10.0 * params.tol_linear, grid))
}

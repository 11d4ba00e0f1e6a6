//! Time integration of
//! `gamma^2 u_tt + u_t + beta u'''' - tau u'' + zeta = -lambda g(u)`
//! with the unilateral constraint `u >= -1`.

use serde::{Deserialize, Serialize};

use crate::deflection::DeflectionField;
use crate::error::{Error, Result};
use crate::forces::{self, ReducedForce};
use crate::grid::Grid;
use crate::linalg::{solve_lower_bound, BandedCholesky, SymBanded};
use crate::params::{ModelParams, ObstacleMode};
use crate::permittivity::PermittivityProfile;
use crate::plate::PlateOperator;
use crate::potential::{self, PotentialModel};

/// Electrostatic force driving the plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForceModel {
    /// Explicit force of the vanishing aspect ratio limit.
    Reduced { force: ReducedForce },
    /// Force from a fresh potential solve at the current deflection.
    Potential {
        model: PotentialModel,
        profile: PermittivityProfile,
    },
}

impl ForceModel {
    pub fn classical() -> Self {
        ForceModel::Reduced {
            force: ReducedForce::Classical,
        }
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, ForceModel::Reduced { force } if force.is_classical())
    }

    /// Nodal force `g` and electrostatic energy `E_e` at `u`.
    pub fn evaluate(&self, u: &[f64], params: &ModelParams, grid: &Grid) -> Result<(Vec<f64>, f64)> {
        match self {
            ForceModel::Reduced { force } => {
                let n = force.offsets(u.len())?;
                Ok((
                    forces::reduced_values(u, &n)?,
                    forces::reduced_energy(u, &n),
                ))
            }
            ForceModel::Potential { model, profile } => {
                let field = DeflectionField::new(u.to_vec(), params.u_max)?;
                let sol = potential::solve(*model, &field, profile, params, grid)?;
                let g = match model {
                    PotentialModel::Transmission => {
                        forces::force_transmission(&sol, &field, profile, params)?
                    }
                    PotentialModel::Membrane => forces::force_membrane(&sol, &field, params)?,
                    PotentialModel::Robin => forces::force_robin(&sol, &field, profile, params)?,
                };
                Ok((g.values, sol.energy))
            }
        }
    }

    /// Reduced offsets `N`, if the model has an explicit force.
    pub fn offsets(&self, n: usize) -> Option<Result<Vec<f64>>> {
        match self {
            ForceModel::Reduced { force } => Some(force.offsets(n)),
            ForceModel::Potential { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateState {
    /// Nodal deflection including both pinned ends.
    pub u: Vec<f64>,
    /// Velocity; present iff `gamma2 > 0`.
    pub w: Option<Vec<f64>>,
    pub t: f64,
}

impl PlateState {
    pub fn at_rest(u: &DeflectionField, params: &ModelParams) -> Self {
        Self {
            u: u.values().to_vec(),
            w: (params.gamma2 > 0.0).then(|| vec![0.0; u.len()]),
            t: 0.0,
        }
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeStepping {
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot interval in steps.
    pub sample_every: usize,
    pub contact_tol: f64,
    /// Threshold on `max |u_{n+1} - u_n| / dt`.
    pub steady_tol: f64,
    /// Stop as soon as the steady criterion holds.
    pub stop_at_steady: bool,
    /// Ledger interval in steps.
    pub ledger_every: usize,
}

impl Default for TimeStepping {
    fn default() -> Self {
        Self {
            dt: 0.0,
            t_end: 1.0,
            sample_every: 100,
            contact_tol: 1e-9,
            steady_tol: 1e-8,
            stop_at_steady: true,
            ledger_every: 1,
        }
    }
}

impl TimeStepping {
    /// `h_x^2 / 4`.
    pub fn reference_dt(grid: &Grid) -> f64 {
        0.25 * grid.h_x() * grid.h_x()
    }

    /// Fills in the reference step when `dt` is zero.
    pub fn resolved(&self, grid: &Grid) -> Self {
        let mut s = *self;
        if s.dt == 0.0 {
            s.dt = Self::reference_dt(grid);
        }
        s
    }
}

/// One row of the energy ledger, recorded after every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub min_u: f64,
    pub e_m: f64,
    /// `lambda * E_e`.
    pub e_e_scaled: f64,
    /// `gamma^2/2 int w^2`; zero without inertia.
    pub e_kin: f64,
    pub total: f64,
    pub zipped_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    EndTime,
    Steady,
    /// The singular force model cannot continue past contact.
    Touchdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub ledger: Vec<LedgerRow>,
    pub touchdown_time: Option<f64>,
    /// Nodes in contact at the final state.
    pub zipped_mask: Vec<bool>,
    pub steady: bool,
    pub termination: Termination,
    pub final_state: PlateState,
    /// Obstacle reaction of the last step.
    pub reaction: ReactionField,
    pub steps: usize,
}

/// Nodal obstacle reaction `zeta`; nonpositive, supported on the contact set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReactionField {
    pub values: Vec<f64>,
}

impl ReactionField {
    /// `max |zeta_i (u_i + 1)|`.
    pub fn complementarity(&self, u: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(u)
            .fold(0.0, |m, (z, v)| m.max((z * (v + 1.0)).abs()))
    }
}

pub use crate::plate::mechanical_energy;

/// Time stepper holding the factor-independent data of a run.
pub struct Stepper<'a> {
    op: PlateOperator,
    force: &'a ForceModel,
    params: &'a ModelParams,
    grid: &'a Grid,
    dt: f64,
    matrix: SymBanded,
    factor: BandedCholesky,
    active: Vec<bool>,
    cache: Option<(Vec<f64>, Vec<f64>, f64)>,
}

/// Outcome of one step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: PlateState,
    /// Reaction on all nodes (zero at the ends).
    pub reaction: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(force: &'a ForceModel, params: &'a ModelParams, grid: &'a Grid, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg(format!("time step must be positive, got {dt}")));
        }
        params.validate()?;
        let op = PlateOperator::new(params, grid);
        let matrix = if params.gamma2 > 0.0 {
            op.stiffness.shifted(0.25 * dt * dt, params.gamma2 + 0.5 * dt)
        } else {
            op.stiffness.shifted(dt, 1.0)
        };
        let factor = matrix.cholesky()?;
        Ok(Self {
            active: vec![false; grid.n_x],
            factor,
            op,
            force,
            params,
            grid,
            dt,
            matrix,
            cache: None,
        })
    }

    /// Force and energy at `u`, reusing the previous evaluation when the
    /// deflection has not changed.
    fn evaluate(&mut self, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        if let Some((cu, g, e)) = &self.cache {
            if cu.as_slice() == u {
                return Ok((g.clone(), *e));
            }
        }
        let (g, e) = self.force.evaluate(u, self.params, self.grid)?;
        self.cache = Some((u.to_vec(), g.clone(), e));
        Ok((g, e))
    }

    pub fn step(&mut self, state: &PlateState) -> Result<StepResult> {
        let p = self.params;
        let dt = self.dt;
        let n = self.op.nodes;
        if state.u.len() != n {
            return Err(Error::arg("state does not match the grid"));
        }
        let (g, _) = self.evaluate(&state.u)?;
        let mut f: Vec<f64> = g.iter().map(|v| -p.lambda * v).collect();
        if p.obstacle_mode == ObstacleMode::Penalty {
            for (fi, ui) in f.iter_mut().zip(&state.u) {
                if *ui < -1.0 {
                    *fi += p.penalty_s;
                }
            }
        }
        let u0 = self.op.interior(&state.u);
        let f = self.op.interior(&f);
        let inertial = p.gamma2 > 0.0;
        let w0 = if inertial {
            let w = state
                .w
                .as_ref()
                .ok_or_else(|| Error::arg("inertial step needs a velocity"))?;
            self.op.interior(w)
        } else {
            Vec::new()
        };

        let rhs: Vec<f64> = if inertial {
            let au = self.op.stiffness.mul_vec(&u0);
            let c = 0.25 * dt * dt;
            (0..u0.len())
                .map(|i| {
                    let acc = if self.active[i] {
                        0.0
                    } else {
                        (f[i] - w0[i] - au[i]) / p.gamma2
                    };
                    p.gamma2 * (u0[i] + dt * w0[i] + c * acc) + 0.5 * dt * u0[i] + c * (w0[i] + f[i])
                })
                .collect()
        } else {
            u0.iter().zip(&f).map(|(u, fi)| u + dt * fi).collect()
        };

        let (u1, mult) = match p.obstacle_mode {
            ObstacleMode::Projection => {
                let free = self.factor.solve(&rhs);
                if !self.active.iter().any(|&a| a) && free.iter().all(|&v| v >= -1.0) {
                    let zero = vec![0.0; free.len()];
                    (free, zero)
                } else {
                    let sol = solve_lower_bound(&self.matrix, &rhs, -1.0, Some(&self.active))?;
                    self.active = sol.active;
                    (sol.x, sol.multiplier)
                }
            }
            ObstacleMode::Penalty => (self.factor.solve(&rhs), vec![0.0; rhs.len()]),
        };
        let t1 = state.t + dt;
        if u1.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                t: t1,
                state: self.op.embed(&u1),
            });
        }
        let scale = if inertial { 4.0 / (dt * dt) } else { 1.0 / dt };
        let reaction: Vec<f64> = mult.iter().map(|m| -scale * m).collect();
        let w1 = inertial.then(|| {
            let w: Vec<f64> = (0..u1.len())
                .map(|i| {
                    if self.active[i] {
                        0.0
                    } else {
                        2.0 / dt * (u1[i] - u0[i]) - w0[i]
                    }
                })
                .collect();
            self.op.embed(&w)
        });
        Ok(StepResult {
            state: PlateState {
                u: self.op.embed(&u1),
                w: w1,
                t: t1,
            },
            reaction: self.op.embed(&reaction),
        })
    }

    /// `E_m`, `lambda E_e` and their sum.
    pub fn energies(&mut self, u: &[f64]) -> Result<(f64, f64)> {
        let (_, ee) = self.evaluate(u)?;
        Ok((self.op.energy(u), self.params.lambda * ee))
    }
}

/// Single step from `state`.
pub fn step(
    state: &PlateState,
    dt: f64,
    force_model: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
) -> Result<PlateState> {
    Ok(Stepper::new(force_model, params, grid, dt)?.step(state)?.state)
}

fn ledger_row(stepper: &mut Stepper, state: &PlateState, contact_tol: f64) -> Result<LedgerRow> {
    let (e_m, e_e) = stepper.energies(&state.u)?;
    let e_kin = state.w.as_ref().map_or(0.0, |w| {
        0.5 * stepper.params.gamma2 * stepper.op.h * w.iter().map(|v| v * v).sum::<f64>()
    });
    Ok(LedgerRow {
        t: state.t,
        min_u: state.min_u(),
        e_m,
        e_e_scaled: e_e,
        e_kin,
        total: e_m + e_e + e_kin,
        zipped_count: state.u.iter().filter(|&&v| v <= -1.0 + contact_tol).count(),
    })
}

pub fn simulate(
    init: &PlateState,
    force_model: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    stepping: &TimeStepping,
) -> Result<Trajectory> {
    let ts = stepping.resolved(grid);
    if !(ts.t_end > init.t) {
        return Err(Error::arg("t_end must exceed the initial time"));
    }
    if ts.sample_every == 0 || ts.ledger_every == 0 {
        return Err(Error::arg("sampling intervals must be >= 1"));
    }
    if init.u.len() != grid.nodes_x() || init.u[0] != 0.0 || init.u[init.u.len() - 1] != 0.0 {
        return Err(Error::arg("initial deflection must be pinned and match the grid"));
    }
    if init.u.iter().any(|&v| v < -1.0) {
        return Err(Error::arg("initial deflection penetrates the ground plate"));
    }
    if (params.gamma2 > 0.0) != init.w.is_some() {
        return Err(Error::arg("velocity must be given exactly when gamma2 > 0"));
    }
    let classical = force_model.is_classical();
    let touching = |s: &PlateState| s.min_u() <= -1.0 + ts.contact_tol;

    let mut stepper = Stepper::new(force_model, params, grid, ts.dt)?;
    let mut state = init.clone();
    let mut traj = Trajectory {
        times: vec![state.t],
        snapshots: vec![state.u.clone()],
        ledger: Vec::new(),
        touchdown_time: None,
        zipped_mask: Vec::new(),
        steady: false,
        termination: Termination::EndTime,
        final_state: state.clone(),
        reaction: ReactionField {
            values: vec![0.0; state.u.len()],
        },
        steps: 0,
    };
    if classical && touching(&state) {
        traj.touchdown_time = Some(state.t);
        traj.termination = Termination::Touchdown;
    } else {
        traj.ledger.push(ledger_row(&mut stepper, &state, ts.contact_tol)?);
        let n_steps = ((ts.t_end - init.t) / ts.dt - 1e-9).ceil() as usize;
        for k in 1..=n_steps {
            let r = stepper.step(&state)?;
            let change = r
                .state
                .u
                .iter()
                .zip(&state.u)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / ts.dt;
            state = r.state;
            traj.reaction = ReactionField { values: r.reaction };
            traj.steps = k;
            let contact = touching(&state);
            if contact && traj.touchdown_time.is_none() {
                traj.touchdown_time = Some(state.t);
            }
            if classical && contact {
                traj.termination = Termination::Touchdown;
                traj.times.push(state.t);
                traj.snapshots.push(state.u.clone());
                break;
            }
            let steady = change <= ts.steady_tol;
            if k % ts.ledger_every == 0 || k == n_steps || steady {
                traj.ledger.push(ledger_row(&mut stepper, &state, ts.contact_tol)?);
            }
            if steady {
                traj.steady = true;
            }
            if k % ts.sample_every == 0 || k == n_steps || (steady && ts.stop_at_steady) {
                traj.times.push(state.t);
                traj.snapshots.push(state.u.clone());
            }
            if steady && ts.stop_at_steady {
                traj.termination = Termination::Steady;
                break;
            }
        }
    }
    traj.zipped_mask = state.u.iter().map(|&v| v <= -1.0 + ts.contact_tol).collect();
    traj.final_state = state;
    Ok(traj)
}

/// Steady residual `-lambda g - A u`: the reaction that balances the plate
/// equation at rest.
pub fn extract_reaction(
    u_steady: &[f64],
    force_model: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
) -> Result<ReactionField> {
    if u_steady.len() != grid.nodes_x() {
        return Err(Error::arg("deflection does not match the grid"));
    }
    let op = PlateOperator::new(params, grid);
    let (g, _) = force_model.evaluate(u_steady, params, grid)?;
    let au = op.apply(u_steady);
    let n = u_steady.len();
    let values = (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                0.0
            } else {
                -params.lambda * g[i] - au[i]
            }
        })
        .collect();
    Ok(ReactionField { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(31, 4, 4).unwrap()
    }

    fn membrane(lambda: f64) -> ModelParams {
        ModelParams {
            beta: 0.0,
            tau: 1.0,
            lambda,
            ..Default::default()
        }
    }

    #[test]
    fn equilibrium_stays_put() {
        let g = grid();
        let p = membrane(0.0);
        let s = PlateState::at_rest(&DeflectionField::zeros(&g), &p);
        let s1 = step(&s, 1e-3, &ForceModel::classical(), &p, &g).unwrap();
        assert!(s1.u.iter().all(|&v| v == 0.0));
        let p2 = ModelParams { gamma2: 0.5, ..p };
        let s = PlateState::at_rest(&DeflectionField::zeros(&g), &p2);
        let s1 = step(&s, 1e-3, &ForceModel::classical(), &p2, &g).unwrap();
        assert!(s1.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nonpositive_step_rejected() {
        let g = grid();
        let p = membrane(1.0);
        let s = PlateState::at_rest(&DeflectionField::zeros(&g), &p);
        assert!(matches!(
            step(&s, 0.0, &ForceModel::classical(), &p, &g),
            Err(Error::InvalidArgument(_))
        ));
        assert!(step(&s, -1.0, &ForceModel::classical(), &p, &g).is_err());
    }

    #[test]
    fn zero_voltage_is_steady_at_once() {
        let g = grid();
        let p = membrane(0.0);
        let s = PlateState::at_rest(&DeflectionField::zeros(&g), &p);
        let tr = simulate(&s, &ForceModel::classical(), &p, &g, &TimeStepping::default()).unwrap();
        assert!(tr.steady);
        assert_eq!(tr.steps, 1);
        assert!(tr.final_state.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn classical_touchdown_terminates() {
        let g = grid();
        let p = membrane(10.0);
        let s = PlateState::at_rest(&DeflectionField::zeros(&g), &p);
        let ts = TimeStepping {
            t_end: 5.0,
            ..Default::default()
        };
        let tr = simulate(&s, &ForceModel::classical(), &p, &g, &ts).unwrap();
        assert_eq!(tr.termination, Termination::Touchdown);
        assert!(tr.touchdown_time.is_some());
        assert!(tr.final_state.min_u() >= -1.0);
    }

    #[test]
    fn inertial_free_vibration_loses_energy() {
        let g = grid();
        let p = ModelParams {
            gamma2: 0.2,
            ..membrane(0.0)
        };
        let u = DeflectionField::from_fn(&g, |x| 0.2 * (PI * x).sin(), 4.0).unwrap();
        let s = PlateState::at_rest(&u, &p);
        let ts = TimeStepping {
            dt: 1e-3,
            t_end: 0.5,
            stop_at_steady: false,
            ..Default::default()
        };
        let tr = simulate(&s, &ForceModel::classical(), &p, &g, &ts).unwrap();
        let e: Vec<f64> = tr.ledger.iter().map(|r| r.total).collect();
        assert!(e.last().unwrap() < &(0.5 * e[0]));
        for pair in e.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn penalty_overshoot_is_bounded() {
        let g = grid();
        let p = ModelParams {
            obstacle_mode: ObstacleMode::Penalty,
            penalty_s: 1e3,
            ..membrane(30.0)
        };
        let s = PlateState::at_rest(&DeflectionField::zeros(&g), &p);
        let force = ForceModel::Reduced {
            force: ReducedForce::uniform(&g, 0.25),
        };
        let ts = TimeStepping {
            dt: 1e-4,
            t_end: 0.5,
            ..Default::default()
        };
        let tr = simulate(&s, &force, &p, &g, &ts).unwrap();
        let gmax = 0.5 / 0.25f64.powi(2);
        let bound = p.lambda * gmax / p.penalty_s;
        let lowest = tr.ledger.iter().fold(f64::INFINITY, |m, r| m.min(r.min_u));
        assert!(lowest < -1.0, "penalty should let the plate dip below the obstacle");
        assert!(lowest >= -1.0 - bound, "{lowest} {bound}");
    }
}

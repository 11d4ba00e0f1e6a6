//! Browser bindings: a potential solve on a sine-shaped plate, a steady
//! branch sweep, and a stepping simulation of the reduced model.

use std::f64::consts::PI;

use memsx_core::dynamics::{self, ForceModel, PlateState};
use memsx_core::forces::ReducedForce;
use memsx_core::potential::{self, PotentialModel};
use memsx_core::steady::{bifurcation_diagram, SteadyOptions};
use memsx_core::{DeflectionField, Grid, ModelParams, PermittivityProfile};
use wasm_bindgen::prelude::*;

fn model_from(name: &str) -> Result<PotentialModel, String> {
    match name {
        "transmission" => Ok(PotentialModel::Transmission),
        "membrane" => Ok(PotentialModel::Membrane),
        "robin" => Ok(PotentialModel::Robin),
        other => Err(format!("unknown model {other:?}")),
    }
}

fn reduced(grid: &Grid, offset: f64) -> ForceModel {
    if offset == 0.0 {
        ForceModel::classical()
    } else {
        ForceModel::Reduced {
            force: ReducedForce::uniform(grid, offset),
        }
    }
}

fn string_plate() -> ModelParams {
    ModelParams {
        beta: 0.0,
        tau: 1.0,
        ..Default::default()
    }
}

/// Potential samples on the physical domain, `(x, z, psi)` packed row-wise.
#[wasm_bindgen]
pub struct Field {
    energy: f64,
    points: Vec<f64>,
}

#[wasm_bindgen]
impl Field {
    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Flat `[x0, z0, psi0, x1, ...]`.
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
}

pub fn field(model: &str, amplitude: f64, delta: f64, eps: f64, sigma: f64) -> Result<Field, String> {
    let grid = Grid::new(47, 25, 9).map_err(|e| e.to_string())?;
    let params = ModelParams {
        delta,
        eps,
        ..Default::default()
    };
    let u = DeflectionField::from_fn(&grid, |x| amplitude * (PI * x).sin(), params.u_max)
        .map_err(|e| e.to_string())?;
    let profile = PermittivityProfile::constant(sigma);
    let sol = potential::solve(model_from(model)?, &u, &profile, &params, &grid).map_err(|e| e.to_string())?;
    let points = sol.samples().iter().flat_map(|s| [s.x, s.z, s.psi]).collect();
    Ok(Field {
        energy: sol.energy,
        points,
    })
}

/// `(lambda, min u, converged)` rows of a steady sweep, packed row-wise.
pub fn branch(offset: f64, lambda_max: f64, count: usize) -> Result<Vec<f64>, String> {
    if count < 2 {
        return Err("need at least two sweep points".into());
    }
    let grid = Grid::new(63, 4, 4).map_err(|e| e.to_string())?;
    let lambdas: Vec<f64> = (0..count)
        .map(|k| lambda_max * k as f64 / (count - 1) as f64)
        .collect();
    let t = bifurcation_diagram(&reduced(&grid, offset), &string_plate(), &grid, &lambdas, &SteadyOptions::default())
        .map_err(|e| e.to_string())?;
    Ok(t.rows
        .iter()
        .flat_map(|r| [r.lambda, r.min_u, if r.converged { 1.0 } else { 0.0 }])
        .collect())
}

/// Reduced-model plate released from rest.
#[wasm_bindgen]
pub struct Simulation {
    grid: Grid,
    params: ModelParams,
    force: ForceModel,
    state: PlateState,
    dt: f64,
    touched: bool,
}

impl Simulation {
    pub fn create(lambda: f64, offset: f64, gamma2: f64) -> Result<Simulation, String> {
        let grid = Grid::new(63, 4, 4).map_err(|e| e.to_string())?;
        let params = ModelParams {
            lambda,
            gamma2,
            ..string_plate()
        };
        params.validate().map_err(|e| e.to_string())?;
        let state = PlateState::at_rest(&DeflectionField::zeros(&grid), &params);
        Ok(Simulation {
            force: reduced(&grid, offset),
            grid,
            params,
            state,
            dt: 1e-3,
            touched: false,
        })
    }

    pub fn advance(&mut self, steps: usize) -> Result<(), String> {
        for _ in 0..steps {
            if self.touched && self.force.is_classical() {
                break;
            }
            self.state = dynamics::step(&self.state, self.dt, &self.force, &self.params, &self.grid)
                .map_err(|e| e.to_string())?;
            self.touched |= self.state.min_u() <= -1.0 + 1e-9;
        }
        Ok(())
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(lambda: f64, offset: f64, gamma2: f64) -> Result<Simulation, JsError> {
        Simulation::create(lambda, offset, gamma2).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, steps: usize) -> Result<(), JsError> {
        self.advance(steps).map_err(|e| JsError::new(&e))
    }

    pub fn deflection(&self) -> Vec<f64> {
        self.state.u.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.state.t
    }

    /// Contact with the ground plate has occurred.
    #[wasm_bindgen(getter)]
    pub fn touched(&self) -> bool {
        self.touched
    }
}

#[wasm_bindgen(js_name = solveField)]
pub fn solve_field(model: &str, amplitude: f64, delta: f64, eps: f64, sigma: f64) -> Result<Field, JsError> {
    field(model, amplitude, delta, eps, sigma).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = steadyBranch)]
pub fn steady_branch(offset: f64, lambda_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
    branch(offset, lambda_max, count).map_err(|e| JsError::new(&e))
}

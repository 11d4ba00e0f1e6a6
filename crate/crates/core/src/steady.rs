//! Steady states `beta u'''' - tau u'' + lambda g(u) + zeta = 0`, pull-in
//! thresholds and bifurcation sweeps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, ForceModel, PlateState, TimeStepping};
use crate::error::{Error, Result};
use crate::forces::reduced_values;
use crate::grid::Grid;
use crate::linalg::solve_lower_bound;
use crate::params::ModelParams;
use crate::plate::PlateOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyOptions {
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Relaxation of the frozen-force iteration used for potential forces.
    pub relaxation: f64,
    /// Iteration cap of the frozen-force iteration.
    pub max_fixed_point: usize,
    /// Nodes within this distance of -1 count as in contact.
    pub contact_tol: f64,
    /// Pseudo-time step, step cap and settling rate of the flow used when
    /// Newton stalls.
    pub flow_dt: f64,
    pub flow_steps: usize,
    pub flow_tol: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            max_halvings: 30,
            relaxation: 0.5,
            max_fixed_point: 400,
            contact_tol: 1e-9,
            flow_dt: 0.02,
            flow_steps: 50_000,
            flow_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    /// Nodal deflection including the pinned ends.
    pub u: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `max |min(F, c (u + 1))|` over interior nodes, `F = A u + lambda g`.
    pub residual: f64,
    /// Nodes held at -1.
    pub active: Vec<bool>,
}

impl SteadyReport {
    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn zipped_count(&self, contact_tol: f64) -> usize {
        self.u.iter().filter(|&&v| v <= -1.0 + contact_tol).count()
    }
}

struct Residual {
    f: Vec<f64>,
    phi: Vec<f64>,
    active: Vec<bool>,
}

/// Complementarity residual `min(F_i, c (u_i + 1))` on interior values.
fn residual(
    op: &PlateOperator,
    lambda: f64,
    offsets: &[f64],
    ui: &[f64],
    scale: f64,
) -> Result<Residual> {
    let full = op.embed(ui);
    let g = reduced_values(&full, offsets)?;
    let au = op.stiffness.mul_vec(ui);
    let f: Vec<f64> = (0..ui.len()).map(|i| au[i] + lambda * g[i + 1]).collect();
    let mut phi = Vec::with_capacity(ui.len());
    let mut active = Vec::with_capacity(ui.len());
    for i in 0..ui.len() {
        let c = scale * (ui[i] + 1.0);
        active.push(c < f[i]);
        phi.push(f[i].min(c));
    }
    Ok(Residual { f, phi, active })
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn admissible(ui: &[f64], offsets: &[f64], classical: bool) -> bool {
    ui.iter().zip(&offsets[1..]).all(|(u, n)| {
        u.is_finite() && if classical { *u > -1.0 } else { 1.0 + u + n > 0.0 }
    })
}

fn reduced_newton(
    lambda: f64,
    offsets: &[f64],
    classical: bool,
    params: &ModelParams,
    grid: &Grid,
    u_init: &[f64],
    opts: &SteadyOptions,
) -> Result<SteadyReport> {
    let op = PlateOperator::new(params, grid);
    let m = grid.n_x;
    let scale = op.stiffness.diag().iter().fold(1.0f64, |a, b| a.max(*b));
    let mut ui = op.interior(u_init);
    if classical {
        for v in ui.iter_mut() {
            if *v <= -1.0 {
                *v = -1.0 + 1e-3;
            }
        }
    } else {
        for v in ui.iter_mut() {
            *v = v.max(-1.0);
        }
    }
    if !admissible(&ui, offsets, classical) {
        return Err(Error::arg("initial guess makes the force singular"));
    }
    let mut r = residual(&op, lambda, offsets, &ui, scale)?;
    let mut res = norm_inf(&r.phi);
    let finish = |ui: Vec<f64>, converged, iterations, res, active: Vec<bool>| SteadyReport {
        u: op.embed(&ui),
        converged,
        iterations,
        residual: res,
        active: op.embed(&active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect::<Vec<_>>())
            .into_iter()
            .map(|v| v == 1.0)
            .collect(),
    };
    for it in 1..=opts.max_iter {
        if res <= params.tol_newton {
            return Ok(finish(ui, true, it, res, r.active));
        }
        // Newton system: active rows pin u to -1, the others linearize F.
        let mut jac = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for i in 0..m {
            if r.active[i] {
                jac[(i, i)] = 1.0;
                rhs[i] = -1.0 - ui[i];
                continue;
            }
            for j in i.saturating_sub(2)..(i + 3).min(m) {
                jac[(i, j)] = op.stiffness.get(i, j);
            }
            let d = 1.0 + ui[i] + offsets[i + 1];
            jac[(i, i)] -= lambda / (d * d * d);
            rhs[i] = -r.f[i];
        }
        let Some(step) = jac.lu().solve(&rhs) else {
            return Ok(finish(ui, false, it, res, r.active));
        };
        let merit = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
        let m0 = merit(&r.phi);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = ui.iter().zip(step.iter()).map(|(u, s)| u + t * s).collect();
            if admissible(&trial, offsets, classical) {
                let rt = residual(&op, lambda, offsets, &trial, scale)?;
                if merit(&rt.phi) < m0 || (t == 1.0 && norm_inf(&rt.phi) <= params.tol_newton) {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, rt)) => {
                ui = trial;
                r = rt;
                res = norm_inf(&r.phi);
            }
            None => return Ok(finish(ui, false, it, res, r.active)),
        }
    }
    let ok = res <= params.tol_newton;
    Ok(finish(ui, ok, opts.max_iter, res, r.active))
}

/// Relaxed frozen-force iteration: each pass solves the obstacle problem
/// for the plate under the force of the previous iterate.
fn frozen_force(
    lambda: f64,
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    u_init: &[f64],
    opts: &SteadyOptions,
) -> Result<SteadyReport> {
    let op = PlateOperator::new(params, grid);
    let p = params.clone();
    let mut u = u_init.to_vec();
    let tol = params.tol_newton.max(100.0 * params.tol_linear);
    let mut res = f64::INFINITY;
    let mut active = vec![false; grid.n_x];
    for it in 1..=opts.max_fixed_point {
        let (g, _) = force.evaluate(&u, &p, grid)?;
        let au = op.apply(&u);
        let f: Vec<f64> = (0..u.len()).map(|i| au[i] + lambda * g[i]).collect();
        res = (1..u.len() - 1)
            .map(|i| if active[i - 1] { 0.0 } else { f[i].abs() })
            .fold(0.0, f64::max);
        if res <= tol {
            return Ok(SteadyReport {
                u,
                converged: true,
                iterations: it,
                residual: res,
                active: op.embed(&active.iter().map(|&a| a as u8 as f64).collect::<Vec<_>>())
                    .iter()
                    .map(|&v| v == 1.0)
                    .collect(),
            });
        }
        let b: Vec<f64> = op.interior(&g).iter().map(|v| -lambda * v).collect();
        let sol = solve_lower_bound(&op.stiffness, &b, -1.0, Some(&active))?;
        active = sol.active;
        let target = op.embed(&sol.x);
        let w = opts.relaxation;
        for (ui, ti) in u.iter_mut().zip(&target) {
            *ui = (1.0 - w) * *ui + w * ti;
        }
        if u.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Ok(SteadyReport {
        u,
        converged: false,
        iterations: opts.max_fixed_point,
        residual: res,
        active: vec![false; grid.nodes_x()],
    })
}

/// Steady state reached from `u_init`. Non-convergence is reported in the
/// result, not as an error.
pub fn steady_solve(
    lambda: f64,
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    u_init: &[f64],
    opts: &SteadyOptions,
) -> Result<SteadyReport> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    params.validate()?;
    if u_init.len() != grid.nodes_x() || u_init[0] != 0.0 || u_init[u_init.len() - 1] != 0.0 {
        return Err(Error::arg("initial guess must be pinned and match the grid"));
    }
    let offsets = force.offsets(grid.nodes_x()).transpose()?;
    let solve = |start: &[f64]| match &offsets {
        Some(o) => reduced_newton(lambda, o, force.is_classical(), params, grid, start, opts),
        None => frozen_force(lambda, force, params, grid, start, opts),
    };
    let first = solve(u_init)?;
    if first.converged {
        return Ok(first);
    }
    // Newton can stall far from the contact set; relax with the gradient
    // flow and polish from where it settles.
    match relax_by_flow(lambda, force, params, grid, u_init, opts)? {
        Some(u) => {
            let mut r = solve(&u)?;
            r.iterations += first.iterations;
            Ok(r)
        }
        None => Ok(first),
    }
}

/// Implicit projected gradient flow from `u_init`. `None` if the classical
/// force touches down or the flow does not settle.
fn relax_by_flow(
    lambda: f64,
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    u_init: &[f64],
    opts: &SteadyOptions,
) -> Result<Option<Vec<f64>>> {
    let p = ModelParams {
        gamma2: 0.0,
        lambda,
        obstacle_mode: crate::params::ObstacleMode::Projection,
        ..params.clone()
    };
    let dt = opts.flow_dt;
    let mut stepper = crate::dynamics::Stepper::new(force, &p, grid, dt)?;
    let mut state = PlateState {
        u: u_init.iter().map(|v| v.max(-1.0)).collect(),
        w: None,
        t: 0.0,
    };
    for _ in 0..opts.flow_steps {
        let next = stepper.step(&state)?.state;
        let change = next
            .u
            .iter()
            .zip(&state.u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        state = next;
        if force.is_classical() && state.min_u() <= -1.0 + opts.contact_tol {
            return Ok(None);
        }
        if change / dt <= opts.flow_tol {
            return Ok(Some(state.u));
        }
    }
    Ok(None)
}

/// Steady residual at a converged reduced state: `max |F|` off the contact set.
pub fn steady_residual(
    u: &[f64],
    lambda: f64,
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    contact_tol: f64,
) -> Result<f64> {
    let op = PlateOperator::new(params, grid);
    let (g, _) = force.evaluate(u, params, grid)?;
    let au = op.apply(u);
    Ok((1..u.len() - 1)
        .filter(|&i| u[i] > -1.0 + contact_tol)
        .map(|i| (au[i] + lambda * g[i]).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PullInOptions {
    pub bracket: [f64; 2],
    pub tol_lambda: f64,
    /// Time stepping of the dynamic classification; runs start from rest.
    pub dynamics: TimeStepping,
    pub steady: SteadyOptions,
}

impl Default for PullInOptions {
    fn default() -> Self {
        Self {
            bracket: [1e-3, 50.0],
            tol_lambda: 1e-4,
            dynamics: TimeStepping {
                dt: 1e-3,
                t_end: 200.0,
                sample_every: usize::MAX,
                ledger_every: usize::MAX,
                ..TimeStepping::default()
            },
            steady: SteadyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PullInReport {
    pub lambda_star_steady: f64,
    pub lambda_star_dynamic: f64,
    /// `|a - b| / max(a, b)`.
    pub gap: f64,
}

/// Largest `lambda` with a steady state free of contact, by bisection on
/// warm-started steady solves.
pub fn pull_in_steady(
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    opts: &PullInOptions,
) -> Result<f64> {
    let [mut lo, mut hi] = opts.bracket;
    check_bracket(lo, hi, opts.tol_lambda)?;
    let ctol = opts.steady.contact_tol;
    let zero = vec![0.0; grid.nodes_x()];
    let classify = |lambda: f64, start: &[f64]| -> Result<Option<Vec<f64>>> {
        let r = steady_solve(lambda, force, params, grid, start, &opts.steady)?;
        Ok((r.converged && r.zipped_count(ctol) == 0).then_some(r.u))
    };
    let below = |lambda: f64, from: (f64, &[f64])| -> Result<Option<Vec<f64>>> {
        if let Some(u) = classify(lambda, from.1)? {
            return Ok(Some(u));
        }
        // retry through intermediate values before declaring failure
        let mut start = from.1.to_vec();
        const PIECES: usize = 8;
        for k in 1..=PIECES {
            let l = from.0 + (lambda - from.0) * k as f64 / PIECES as f64;
            match classify(l, &start)? {
                Some(u) => start = u,
                None => return Ok(None),
            }
        }
        Ok(Some(start))
    };
    let mut u_lo = match below(lo, (0.0, &zero))? {
        Some(u) => u,
        None => {
            return Err(Error::InvalidBracket {
                lo,
                hi,
                class: "without steady state",
            })
        }
    };
    if below(hi, (lo, &u_lo))?.is_some() {
        return Err(Error::InvalidBracket {
            lo,
            hi,
            class: "steady",
        });
    }
    while hi - lo > opts.tol_lambda {
        let mid = 0.5 * (lo + hi);
        match below(mid, (lo, &u_lo))? {
            Some(u) => {
                lo = mid;
                u_lo = u;
            }
            None => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest `lambda` whose trajectory from rest touches the ground plate,
/// by bisection on the touchdown event.
pub fn pull_in_dynamic(
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    opts: &PullInOptions,
) -> Result<f64> {
    let [mut lo, mut hi] = opts.bracket;
    check_bracket(lo, hi, opts.tol_lambda)?;
    let rest = PlateState {
        u: vec![0.0; grid.nodes_x()],
        w: (params.gamma2 > 0.0).then(|| vec![0.0; grid.nodes_x()]),
        t: 0.0,
    };
    let touches = |lambda: f64| -> Result<bool> {
        let p = params.with_lambda(lambda);
        let tr = simulate(&rest, force, &p, grid, &opts.dynamics)?;
        Ok(tr.touchdown_time.is_some())
    };
    match (touches(lo)?, touches(hi)?) {
        (false, true) => {}
        (a, _) => {
            return Err(Error::InvalidBracket {
                lo,
                hi,
                class: if a { "touchdown" } else { "no touchdown" },
            })
        }
    }
    while hi - lo > opts.tol_lambda {
        let mid = 0.5 * (lo + hi);
        if touches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_bracket(lo: f64, hi: f64, tol: f64) -> Result<()> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::arg(format!("bracket [{lo}, {hi}] is not an interval in [0, inf)")));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tol_lambda must be positive"));
    }
    Ok(())
}

/// Both threshold estimates.
pub fn pull_in(
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    opts: &PullInOptions,
) -> Result<PullInReport> {
    let a = pull_in_steady(force, params, grid, opts)?;
    let b = pull_in_dynamic(force, params, grid, opts)?;
    Ok(PullInReport::new(a, b))
}

impl PullInReport {
    pub fn new(steady: f64, dynamic: f64) -> Self {
        Self {
            lambda_star_steady: steady,
            lambda_star_dynamic: dynamic,
            gap: (steady - dynamic).abs() / steady.max(dynamic),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationRow {
    pub lambda: f64,
    pub max_abs_u: f64,
    pub min_u: f64,
    /// `E_m + lambda E_e` at the returned state.
    pub energy: f64,
    pub converged: bool,
    pub zipped_count: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationTable {
    pub rows: Vec<BifurcationRow>,
}

/// Natural continuation over an increasing `lambda` grid. Each solve starts
/// from the last converged state; a failed row does not stop the sweep.
pub fn bifurcation_diagram(
    force: &ForceModel,
    params: &ModelParams,
    grid: &Grid,
    lambdas: &[f64],
    opts: &SteadyOptions,
) -> Result<BifurcationTable> {
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("lambda grid must be strictly increasing"));
    }
    let op = PlateOperator::new(params, grid);
    let mut start = vec![0.0; grid.nodes_x()];
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let r = steady_solve(lambda, force, params, grid, &start, opts)?;
        let energy = match force.evaluate(&r.u, params, grid) {
            Ok((_, ee)) => op.energy(&r.u) + lambda * ee,
            Err(_) => f64::NAN,
        };
        rows.push(BifurcationRow {
            lambda,
            max_abs_u: r.u.iter().fold(0.0, |m, v| m.max(v.abs())),
            min_u: r.min_u(),
            energy,
            converged: r.converged,
            zipped_count: r.zipped_count(opts.contact_tol),
            iterations: r.iterations,
        });
        if r.converged {
            start = r.u;
        }
    }
    Ok(BifurcationTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forces::ReducedForce;

    fn membrane() -> ModelParams {
        ModelParams {
            beta: 0.0,
            tau: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_voltage_is_flat() {
        let g = Grid::new(31, 4, 4).unwrap();
        let r = steady_solve(
            0.0,
            &ForceModel::classical(),
            &membrane(),
            &g,
            &vec![0.0; g.nodes_x()],
            &SteadyOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn classical_small_voltage_is_smooth() {
        let g = Grid::new(31, 4, 4).unwrap();
        let p = membrane();
        let r = steady_solve(
            1.0,
            &ForceModel::classical(),
            &p,
            &g,
            &vec![0.0; g.nodes_x()],
            &SteadyOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.min_u() > -0.5);
        let res = steady_residual(&r.u, 1.0, &ForceModel::classical(), &p, &g, 1e-9).unwrap();
        assert!(res <= p.tol_newton);
    }

    #[test]
    fn offset_force_zips() {
        let g = Grid::new(31, 4, 4).unwrap();
        let force = ForceModel::Reduced {
            force: ReducedForce::uniform(&g, 0.25),
        };
        let r = steady_solve(
            10.0,
            &force,
            &membrane(),
            &g,
            &vec![0.0; g.nodes_x()],
            &SteadyOptions::default(),
        )
        .unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.zipped_count(1e-9) > 0);
        assert!(r.u.iter().all(|&v| v >= -1.0));
    }

    #[test]
    fn bracket_without_transition_is_rejected() {
        let g = Grid::new(15, 4, 4).unwrap();
        let opts = PullInOptions {
            bracket: [0.1, 0.5],
            ..Default::default()
        };
        let r = pull_in_steady(&ForceModel::classical(), &membrane(), &g, &opts);
        assert!(matches!(r, Err(Error::InvalidBracket { .. })));
        let r = pull_in_dynamic(&ForceModel::classical(), &membrane(), &g, &opts);
        assert!(matches!(r, Err(Error::InvalidBracket { .. })));
    }

    #[test]
    fn sweep_from_zero() {
        let g = Grid::new(15, 4, 4).unwrap();
        let t = bifurcation_diagram(
            &ForceModel::classical(),
            &membrane(),
            &g,
            &[0.0],
            &SteadyOptions::default(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].max_abs_u, 0.0);
        assert!(bifurcation_diagram(
            &ForceModel::classical(),
            &membrane(),
            &g,
            &[1.0, 0.5],
            &SteadyOptions::default()
        )
        .is_err());
    }
}

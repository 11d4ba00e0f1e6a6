use memsx_core::dynamics::{simulate, ForceModel, PlateState, TimeStepping};
use memsx_core::steady::{bifurcation_diagram, steady_solve, SteadyOptions};
use memsx_core::*;

fn string_plate() -> ModelParams {
    ModelParams {
        beta: 0.0,
        tau: 1.0,
        ..Default::default()
    }
}

#[test]
fn warm_and_cold_starts_agree() {
    let g = Grid::new(31, 4, 4).unwrap();
    let p = string_plate();
    let f = ForceModel::classical();
    let opts = SteadyOptions::default();
    let zero = vec![0.0; g.nodes_x()];
    let warm = steady_solve(1.0, &f, &p, &g, &zero, &opts).unwrap();
    let a = steady_solve(1.5, &f, &p, &g, &warm.u, &opts).unwrap();
    let b = steady_solve(1.5, &f, &p, &g, &zero, &opts).unwrap();
    assert!(a.converged && b.converged);
    assert!(a.min_u() > -0.9);
    let diff = a.u.iter().zip(&b.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn steady_state_is_the_long_time_limit() {
    let g = Grid::new(31, 4, 4).unwrap();
    let p = string_plate().with_lambda(1.4);
    let f = ForceModel::classical();
    let s = steady_solve(p.lambda, &f, &p, &g, &vec![0.0; g.nodes_x()], &SteadyOptions::default()).unwrap();
    let ts = TimeStepping {
        dt: 1e-3,
        t_end: 60.0,
        steady_tol: 1e-9,
        sample_every: usize::MAX,
        ledger_every: usize::MAX,
        ..Default::default()
    };
    let rest = PlateState::at_rest(&DeflectionField::zeros(&g), &p);
    let tr = simulate(&rest, &f, &p, &g, &ts).unwrap();
    assert!(tr.steady);
    let diff = s.u.iter().zip(&tr.final_state.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn sweep_loses_the_smooth_branch_past_the_fold() {
    let g = Grid::new(31, 4, 4).unwrap();
    let lambdas: Vec<f64> = (0..8).map(|k| 0.5 * k as f64).collect();
    let t = bifurcation_diagram(&ForceModel::classical(), &string_plate(), &g, &lambdas, &SteadyOptions::default()).unwrap();
    let conv: Vec<bool> = t.rows.iter().map(|r| r.converged).collect();
    assert_eq!(conv, [true, true, true, true, true, true, false, false]);
    let mins: Vec<f64> = t.rows[..6].iter().map(|r| r.min_u).collect();
    assert!(mins.windows(2).all(|w| w[1] < w[0]));
}

use std::f64::consts::PI;

use super::*;
use crate::params::LinearBackend;

fn params(delta: f64, eps: f64) -> ModelParams {
    ModelParams {
        delta,
        eps,
        ..Default::default()
    }
}

fn bump(grid: &Grid, a: f64) -> DeflectionField {
    DeflectionField::from_fn(grid, |x| a * (PI * x).sin(), 4.0).unwrap()
}

#[test]
fn flat_transmission_is_the_layered_capacitor() {
    let g = Grid::new(15, 9, 5).unwrap();
    let u = DeflectionField::flat(&g, -0.2).unwrap();
    let sol = solve_transmission(&u, &PermittivityProfile::constant(2.0), &params(0.2, 0.3), &g).unwrap();
    let a = 1.0 / 0.9;
    for i in 0..g.nodes_x() {
        for j in 0..g.n_z1 {
            let z = -1.0 + g.eta(j) * 0.8;
            assert!((sol.psi1_at(i, j) - a * (1.0 + z)).abs() < 1e-8);
        }
        for k in 0..g.n_z2 {
            let z = -0.2 + 0.2 * g.zeta(k);
            let exact = 1.0 - a * (-0.2 + 0.2 - z) / 2.0;
            assert!((sol.psi2_at(i, k).unwrap() - exact).abs() < 1e-8);
        }
    }
    assert!((sol.interface_values()[3] - a * 0.8).abs() < 1e-8);
    assert!((sol.energy + 0.5 / 0.9).abs() < 1e-10);
}

#[test]
fn zero_thickness_delegates_to_membrane() {
    let g = Grid::new(7, 5, 5).unwrap();
    let u = DeflectionField::zeros(&g);
    let sol = solve_transmission(&u, &PermittivityProfile::constant(2.0), &params(0.0, 0.1), &g).unwrap();
    assert_eq!(sol.model, PotentialModel::Membrane);
    assert!((sol.energy + 0.5).abs() < 1e-10);
}

#[test]
fn flat_membrane_is_exact() {
    let g = Grid::new(9, 6, 4).unwrap();
    for u0 in [-0.5, 0.0, 0.7] {
        let u = DeflectionField::flat(&g, u0).unwrap();
        let sol = solve_membrane(&u, &params(0.0, 0.5), &g).unwrap();
        assert!((sol.energy + 0.5 / (1.0 + u0)).abs() < 1e-10);
        for (v, j) in sol.psi1[..g.n_z1].iter().zip(0..) {
            assert!((v - g.eta(j)).abs() < 1e-9);
        }
    }
}

#[test]
fn near_touchdown_is_degenerate() {
    let g = Grid::new(9, 6, 4).unwrap();
    let mut v = vec![0.0; g.nodes_x()];
    v[4] = -1.0 + 1e-9;
    let u = DeflectionField::new(v, 4.0).unwrap();
    let p = params(0.1, 0.1);
    let prof = PermittivityProfile::constant(2.0);
    for r in [
        solve_transmission(&u, &prof, &p, &g),
        solve_membrane(&u, &p, &g),
        solve_robin(&u, &prof, &p, &g),
    ] {
        assert!(matches!(r, Err(Error::DegenerateDomain { .. })));
    }
}

#[test]
fn flat_robin_matches_closed_form() {
    let g = Grid::new(9, 9, 4).unwrap();
    let u = DeflectionField::zeros(&g);
    for eps in [0.0, 0.4] {
        let sol = solve_robin(&u, &PermittivityProfile::constant(2.0), &params(0.1, eps), &g).unwrap();
        for v in sol.interface_values() {
            assert!((v - 2.0 / 3.0).abs() < 1e-9);
        }
        assert!((sol.energy + 1.0 / 3.0).abs() < 1e-10);
    }
    let u = DeflectionField::flat(&g, -0.4).unwrap();
    let sol = solve_robin(&u, &PermittivityProfile::constant(3.0), &params(0.1, 0.0), &g).unwrap();
    for j in 0..g.n_z1 {
        let z = -1.0 + 0.6 * g.eta(j);
        assert!((sol.psi1_at(4, j) - 3.0 * (1.0 + z) / (1.0 + 3.0 * 0.6)).abs() < 1e-9);
    }
}

#[test]
fn robin_rejects_nonpositive_film() {
    let g = Grid::new(9, 6, 4).unwrap();
    let u = DeflectionField::zeros(&g);
    let prof = PermittivityProfile {
        sigma0: 0.5,
        ..PermittivityProfile::constant(-1.0)
    };
    assert!(matches!(
        solve_robin(&u, &prof, &params(0.1, 0.1), &g),
        Err(Error::InvalidProfile(_))
    ));
}

#[test]
fn stiff_film_approaches_membrane() {
    let g = Grid::new(15, 9, 4).unwrap();
    let u = bump(&g, -0.3);
    let p = params(0.1, 0.3);
    let m = solve_membrane(&u, &p, &g).unwrap();
    let mut prev = f64::INFINITY;
    for s in [1e2, 1e4, 1e6] {
        let r = solve_robin(&u, &PermittivityProfile::constant(s), &p, &g).unwrap();
        let d = r
            .psi1
            .iter()
            .zip(&m.psi1)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(d < prev);
        prev = d;
    }
    assert!(prev < 1e-5);
}

#[test]
fn membrane_energy_close_to_reduced_for_small_eps() {
    let g = Grid::new(63, 17, 4).unwrap();
    let u = bump(&g, -0.3);
    let reduced: f64 = -0.5
        * g.trapezoid_weights()
            .iter()
            .zip(u.values())
            .map(|(w, v)| w / (1.0 + v))
            .sum::<f64>();
    let e = solve_membrane(&u, &params(0.0, 0.1), &g).unwrap().energy;
    assert!((e - reduced).abs() < 0.01 * 0.1 * 0.1 * 10.0);
    let e0 = solve_membrane(&u, &params(0.0, 0.0), &g).unwrap().energy;
    assert!((e0 - reduced).abs() < 1e-10);
}

#[test]
fn potential_stays_within_data_bounds() {
    let g = Grid::new(31, 9, 5).unwrap();
    let u = bump(&g, -0.6);
    let p = params(0.1, 0.5);
    let prof = PermittivityProfile::affine(1.5, 2.0);
    for sol in [
        solve_transmission(&u, &prof, &p, &g).unwrap(),
        solve_membrane(&u, &p, &g).unwrap(),
    ] {
        let (lo, hi) = sol.min_max();
        assert!(lo >= -0.05 && hi <= 1.05, "{lo} {hi}");
    }
}

#[test]
fn backends_agree() {
    let g = Grid::new(15, 9, 5).unwrap();
    let u = bump(&g, -0.4);
    let prof = PermittivityProfile::modulated(2.0, 1.0, 0.3, 1.0);
    let p = params(0.2, 0.3);
    let a = solve_transmission(&u, &prof, &p, &g).unwrap();
    let b = solve_transmission(
        &u,
        &prof,
        &ModelParams {
            linear_backend: LinearBackend::BandedCholesky,
            ..p
        },
        &g,
    )
    .unwrap();
    assert!((a.energy - b.energy).abs() < 1e-12);
    for (x, y) in a.psi1.iter().zip(&b.psi1) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn interface_flux_mismatch_shrinks_under_refinement() {
    let prof = PermittivityProfile::constant(2.0);
    let p = params(0.1, 0.3);
    let mut g = Grid::new(15, 9, 5).unwrap();
    let mut errs = Vec::new();
    for _ in 0..3 {
        let u = bump(&g, -0.3);
        let sol = solve_transmission(&u, &prof, &p, &g).unwrap();
        let m = sol.interface_flux_mismatch(&prof).unwrap();
        errs.push(m.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        g = g.refined();
    }
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    assert!(errs[1] / errs[2] > 1.8, "{errs:?}");
}

#[test]
fn samples_cover_both_layers() {
    let g = Grid::new(5, 4, 4).unwrap();
    let u = DeflectionField::zeros(&g);
    let sol = solve_transmission(&u, &PermittivityProfile::constant(1.0), &params(0.5, 0.1), &g).unwrap();
    let s = sol.samples();
    assert_eq!(s.len(), g.nodes_x() * (g.n_z1 + g.n_z2 - 1));
    let top = s.iter().filter(|v| v.layer == 2).fold(f64::NEG_INFINITY, |a, v| a.max(v.z));
    assert!((top - 0.5).abs() < 1e-15);
}

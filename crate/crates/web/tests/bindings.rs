use memsx_web::{branch, field, Simulation};

#[test]
fn field_stays_within_the_electrode_potentials() {
    let f = field("transmission", -0.3, 0.2, 0.3, 2.0).unwrap();
    let pts = f.points();
    assert_eq!(pts.len() % 3, 0);
    assert!(pts.chunks(3).all(|p| (-1e-9..=1.0 + 1e-9).contains(&p[2])));
    assert!(f.energy() < 0.0);
    assert!(field("nope", 0.0, 0.1, 0.1, 2.0).is_err());
}

#[test]
fn branch_ends_past_the_fold() {
    let rows = branch(0.0, 3.5, 8).unwrap();
    assert_eq!(rows.len(), 24);
    assert_eq!(rows[2], 1.0);
    assert_eq!(rows[23], 0.0);
}

#[test]
fn simulation_touches_down_above_threshold() {
    let mut s = Simulation::create(10.0, 0.0, 0.0).unwrap();
    s.advance(5000).unwrap();
    assert!(s.touched());
    let mut s = Simulation::create(1.0, 0.0, 0.0).unwrap();
    s.advance(200).unwrap();
    assert!(!s.touched() && s.time() > 0.19);
    assert!(s.deflection()[32] < 0.0);
}

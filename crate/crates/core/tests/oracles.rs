use std::f64::consts::PI;

use approx::assert_relative_eq;
use charnum::atlas::grid::GridMetric;
use charnum::atlas::spec_io::load_manifold;
use charnum::atlas::builtin_manifold;
use charnum::chern_weil::{integrate_characteristic_number, volume_lower_bound, InvariantPolynomial};
use charnum::connections::ConnectionChoice;
use charnum::forms::pfaffian;
use charnum::holder::{holder_seminorm, Lattice, SampledFunction};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn number(name: &str, poly: &str, connection: ConnectionChoice, h: f64) -> f64 {
    let m = builtin_manifold(name).unwrap();
    integrate_characteristic_number(&m, &poly.parse::<InvariantPolynomial>().unwrap(), connection, h)
        .unwrap()
        .value
}

#[test]
fn round_sphere_euler_number_and_area() {
    let m = builtin_manifold("s2").unwrap();
    let res = integrate_characteristic_number(&m, &InvariantPolynomial::euler(), ConnectionChoice::LeviCivita, 1.0 / 32.0)
        .unwrap();
    assert_relative_eq!(res.value, 2.0, epsilon = 1e-3);
    assert_relative_eq!(res.volume, 4.0 * PI, epsilon = 1e-2);
}

#[test]
fn flat_tori_have_vanishing_numbers() {
    assert_eq!(number("t2_flat", "euler", ConnectionChoice::LeviCivita, 0.25), 0.0);
    assert_eq!(number("t4_flat", "p1", ConnectionChoice::PiecewiseEuclidean, 0.5), 0.0);
}

#[test]
fn projective_plane_signature_from_first_pontryagin_number() {
    let p1 = number("cp2", "p1", ConnectionChoice::LeviCivita, 1.0 / 16.0);
    assert!((p1 - 3.0).abs() < 0.15, "{p1}");
    let c2 = number("cp2", "c2", ConnectionChoice::LeviCivita, 1.0 / 16.0);
    assert_relative_eq!(c2, -p1, epsilon = 1e-10);
}

#[test]
fn four_sphere_has_zero_first_pontryagin_number() {
    assert!(number("s4", "p1", ConnectionChoice::LeviCivita, 0.125).abs() < 1e-10);
}

#[test]
fn volume_bound_reference_values() {
    assert_relative_eq!(volume_lower_bound(2, 1.0, 0.0, 0.3).unwrap(), PI * 0.09, max_relative = 1e-14);
    // Q = 1, ρ = e⁻¹ r in two dimensions: ω₂ (e⁻² r)² e⁻¹ = π e⁻⁵ r²
    let r = 2.0;
    let v = volume_lower_bound(2, r, 1.0, r / 1f64.exp()).unwrap();
    assert_relative_eq!(v, PI * (-5f64).exp() * r * r, max_relative = 1e-14);
    assert!(volume_lower_bound(2, 1.0, 1.0, 0.5).is_err());
}

#[test]
fn holder_seminorm_of_linear_and_root_functions() {
    let lattice = Lattice::new(vec![0.5], 0.5, 33).unwrap();
    let linear = SampledFunction::sample(lattice.clone(), 1, |x, out| {
        out[0] = 3.0 * x[0];
        Ok(())
    })
    .unwrap();
    assert_relative_eq!(holder_seminorm(&linear, 1.0).unwrap(), 3.0, max_relative = 1e-12);
    // |x|^α has α-seminorm exactly 1, attained at the pair (0, y)
    let root = SampledFunction::sample(lattice, 1, |x, out| {
        out[0] = x[0].sqrt();
        Ok(())
    })
    .unwrap();
    assert_relative_eq!(holder_seminorm(&root, 0.5).unwrap(), 1.0, max_relative = 1e-12);
}

#[test]
fn grid_sampled_sphere_chart_keeps_the_euler_number() {
    let (n, radius) = (161, 2.5);
    let mut data = Vec::with_capacity(n * n * 4);
    for i in 0..n {
        for j in 0..n {
            let x = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
            let y = -radius + 2.0 * radius * j as f64 / (n - 1) as f64;
            let c = 4.0 / (1.0 + x * x + y * y).powi(2);
            data.extend([c, 0.0, 0.0, c]);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    GridMetric::new(2, n, radius, data).unwrap().save(&dir.path().join("north.chgrid")).unwrap();
    let spec = dir.path().join("sphere.json");
    std::fs::write(
        &spec,
        r#"{
  "name": "grid_sphere",
  "dim": 2,
  "charts": [
    {"radius": 2.5, "support": 1.25, "metric": {"grid": "north.chgrid"}},
    {"radius": 2.5, "support": 1.25, "orientation": -1, "metric": "round_sphere"}
  ],
  "transitions": [
    {"from": 0, "to": 1, "kind": "inversion"},
    {"from": 1, "to": 0, "kind": "inversion"}
  ]
}"#,
    )
    .unwrap();
    let m = load_manifold(&spec).unwrap();
    let res = integrate_characteristic_number(&m, &InvariantPolynomial::euler(), ConnectionChoice::LeviCivita, 1.0 / 32.0)
        .unwrap();
    assert!((res.value - 2.0).abs() < 5e-2, "{res:?}");
}

proptest! {
    #[test]
    fn pfaffian_squares_to_determinant(entries in proptest::collection::vec(-2.0f64..2.0, 15)) {
        let n = 6;
        let mut a = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                a[(i, j)] = entries[k];
                a[(j, i)] = -entries[k];
                k += 1;
            }
        }
        let pf = pfaffian(&a).unwrap();
        let det = a.determinant();
        prop_assert!((pf * pf - det).abs() <= 1e-9 * (1.0 + det.abs()));
    }

    #[test]
    fn four_by_four_pfaffian_formula(a in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let m = DMatrix::from_row_slice(4, 4, &[
            0.0, a[0], a[1], a[2],
            -a[0], 0.0, a[3], a[4],
            -a[1], -a[3], 0.0, a[5],
            -a[2], -a[4], -a[5], 0.0,
        ]);
        let want = a[0] * a[5] - a[1] * a[4] + a[2] * a[3];
        prop_assert!((pfaffian(&m).unwrap() - want).abs() < 1e-12);
    }
}

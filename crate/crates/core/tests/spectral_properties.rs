use fracburgers::dynamics::nonlinearity;
use fracburgers::spectral::{
    apply_fractional_power, grid_l2_norm, make_basis, min_grid_size, sobolev_norm, to_coeffs, to_grid,
    SpectralField,
};
use proptest::prelude::*;

fn field(max_modes: usize) -> impl Strategy<Value = Vec<f64>> {
    (1..=max_modes).prop_flat_map(|n| prop::collection::vec(-2.0f64..2.0, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn round_trip_and_parseval(c in field(64), extra in 0usize..16) {
        let n = c.len();
        let b = make_basis(n, min_grid_size(n) + extra).unwrap();
        let v = SpectralField::new(c).unwrap();
        let g = to_grid(&v, &b).unwrap();
        prop_assert!(to_coeffs(&g, &b).unwrap().sub(&v).norm() <= 1e-10);
        prop_assert!((grid_l2_norm(&g, &b) - v.norm()).abs() <= 1e-10);
    }

    #[test]
    fn advection_conserves_energy(c in field(48)) {
        let n = c.len();
        let b = make_basis(n, min_grid_size(n)).unwrap();
        let u = SpectralField::new(c).unwrap();
        let e = nonlinearity(&u, &b).unwrap().dot(&u);
        prop_assert!(e.abs() <= 1e-9 * (1.0 + u.norm().powi(3)), "<B(u),u> = {}", e);
    }

    #[test]
    fn advection_is_even(c in field(32)) {
        let n = c.len();
        let b = make_basis(n, min_grid_size(n)).unwrap();
        let u = SpectralField::new(c).unwrap();
        let d = nonlinearity(&u, &b).unwrap().sub(&nonlinearity(&u.scale(-1.0), &b).unwrap()).norm();
        prop_assert!(d <= 1e-12 * (1.0 + u.norm().powi(2)));
    }

    #[test]
    fn fractional_powers_compose(c in field(32), s in -2.0f64..2.0) {
        let n = c.len();
        let b = make_basis(n, min_grid_size(n)).unwrap();
        let v = SpectralField::new(c).unwrap();
        let w = apply_fractional_power(&v, s, &b).unwrap();
        let lhs = sobolev_norm(&v, s, &b).unwrap();
        prop_assert!((w.norm() - lhs).abs() <= 1e-12 * (1.0 + lhs));
        let back = apply_fractional_power(&w, -s, &b).unwrap();
        prop_assert!(back.sub(&v).norm() <= 1e-10 * (1.0 + v.norm()));
    }
}

#[test]
fn modes_are_orthonormal_on_the_grid() {
    let b = make_basis(12, 18).unwrap();
    for i in 1..=12 {
        for j in 1..=12 {
            let gi = to_grid(&SpectralField::mode(12, i), &b).unwrap();
            let gj = to_grid(&SpectralField::mode(12, j), &b).unwrap();
            let ip: f64 = gi.iter().zip(&gj).map(|(a, c)| a * c).sum::<f64>() / 19.0;
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((ip - expect).abs() < 1e-12, "({i},{j}) -> {ip}");
        }
    }
}

#[test]
fn undersized_grid_is_rejected() {
    assert!(make_basis(16, 23).is_err());
    assert!(make_basis(0, 10).is_err());
    assert!(make_basis(16, 24).is_ok());
}

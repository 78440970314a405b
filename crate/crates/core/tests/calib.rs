use proptest::prelude::*;

use quatcal::calib::{calibration, coisotropic_coordinate_planes, coordinate_plane, evaluate, max_on_random_frames};
use quatcal::linalg::Matrix;
use quatcal::quatspace::{InducedStructure, QuaternionSpace, Unit};
use quatcal::twistor::equivariance_residual;
use quatcal::Rational;

/// Right multiplication by the unit quaternion `q` on each line of `H^n`.
fn right_mult(n: usize, q: [f64; 4]) -> Matrix<f64> {
    let [a, b, c, d] = q;
    // Columns: images of 1, i, j, k under x ↦ x q.
    let block = [[a, b, c, d], [-b, a, -d, c], [-c, d, a, -b], [-d, -c, b, a]];
    let mut m = Matrix::zeros(4 * n, 4 * n);
    for line in 0..n {
        for (r, col) in block.iter().enumerate() {
            for (s, x) in col.iter().enumerate() {
                m[(4 * line + s, 4 * line + r)] = *x;
            }
        }
    }
    m
}

fn unit_vec<const N: usize>() -> impl Strategy<Value = [f64; N]> {
    prop::collection::vec(-1.0f64..1.0, N)
        .prop_filter("away from the origin", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| {
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            std::array::from_fn(|k| v[k] / r)
        })
}

#[test]
fn exact_and_float_calibrations_agree() {
    let space = QuaternionSpace::new(2).unwrap();
    let q = |a: i64| Rational::new(a.into(), 7.into());
    let exact = InducedStructure::new(q(2), q(-3), q(6)).unwrap();
    let float = InducedStructure::new(2.0 / 7.0, -3.0 / 7.0, 6.0 / 7.0).unwrap();
    for i in 0..=2 {
        let e = calibration::<Rational>(&space, &exact, i).unwrap().form.to_f64();
        let f = calibration::<f64>(&space, &float, i).unwrap().form;
        assert!(e.sub(&f).max_abs() < 1e-12, "i={i}");
    }
}

#[test]
fn coisotropic_planes_of_other_axes_are_calibrated() {
    let space = QuaternionSpace::new(2).unwrap();
    for unit in [Unit::J, Unit::K] {
        let l = InducedStructure::unit(unit);
        // Ad-rotation taking I to `unit`: left multiplication by a unit quaternion.
        let g = match unit {
            Unit::J => [0.5f64.sqrt(), 0.0, 0.0, 0.5f64.sqrt()],
            _ => [0.5f64.sqrt(), 0.0, -(0.5f64.sqrt()), 0.0],
        };
        let gm = space.quaternion_matrix(&g);
        for i in 0..=2 {
            let v = calibration::<f64>(&space, &l, i).unwrap();
            let best = coisotropic_coordinate_planes(&space, i)
                .iter()
                .map(|lines| evaluate(&v.form, &gm.matmul(&coordinate_plane(&space, lines).unwrap())))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((best - 1.0).abs() < 1e-12, "{unit:?} i={i}: {best}");
        }
    }
}

#[test]
fn calibrations_are_sp1_equivariant() {
    for n in 1..=2 {
        let space = QuaternionSpace::new(n).unwrap();
        for i in 0..=n {
            assert!(equivariance_residual(&space, i, 8, 11).unwrap() < 1e-10, "n={n} i={i}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn right_multiplication_preserves_calibrations(l in unit_vec::<3>(), q in unit_vec::<4>(), i in 0usize..=2) {
        let space = QuaternionSpace::new(2).unwrap();
        let v = calibration::<f64>(&space, &InducedStructure::from_array(l).unwrap(), i).unwrap().form;
        prop_assert!(v.pullback(&right_mult(2, q)).sub(&v).max_abs() < 1e-10);
    }

    #[test]
    fn calibrations_are_bounded_on_random_frames(l in unit_vec::<3>(), i in 0usize..=1, seed in any::<u64>()) {
        let space = QuaternionSpace::new(1).unwrap();
        let v = calibration::<f64>(&space, &InducedStructure::from_array(l).unwrap(), i).unwrap().form;
        prop_assert!(max_on_random_frames(&v, 2000, seed) <= 1.0 + 1e-9);
    }
}

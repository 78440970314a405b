use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quatcal::calib::phi;
use quatcal::qdc::{holomorphic_symplectic, is_j_real, type_basis, VMap};
use quatcal::quatspace::{InducedStructure, QuaternionSpace, Unit};
use quatcal::verify::random_poly_form;
use quatcal::{Cx, Rational, Scalar};

type Q = Rational;

fn unit_i() -> InducedStructure<Q> {
    InducedStructure::unit(Unit::I)
}

#[test]
fn holomorphic_symplectic_form_is_j_real() {
    for n in 1..=2 {
        let space = QuaternionSpace::new(n).unwrap();
        let omega = holomorphic_symplectic(&space, &unit_i()).unwrap();
        assert!(is_j_real(&space, &omega));
        assert!(is_j_real(&space, &omega.power(n).unwrap()));
        assert!(!is_j_real(&space, &omega.scale(&Cx::new(Q::from_int(0), Q::from_int(1)))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn dolbeault_operators_form_a_double_complex(seed in any::<u64>(), n in 1usize..=2, m in 0usize..=1) {
        let space = QuaternionSpace::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = random_poly_form::<Q>(&space, m, 3, &mut rng).unwrap();
        let (del, del_bar) = eta.dolbeault(&space, &unit_i()).unwrap();
        prop_assert!(eta.d().unwrap().sub(&del.add(&del_bar)).is_zero());
        prop_assert!(del.partial(&space, &unit_i()).unwrap().is_zero());
        let dj = eta.partial_j(&space).unwrap();
        prop_assert!(dj.partial_j(&space).unwrap().is_zero());
        let anti = del.partial_j(&space).unwrap().add(&dj.partial(&space, &unit_i()).unwrap());
        prop_assert!(anti.is_zero());
    }

    #[test]
    fn v_maps_are_complex_linear(
        n in 1usize..=2,
        p in 0usize..=2,
        q in 0usize..=2,
        a in (-5i64..=5, -5i64..=5),
        b in (-5i64..=5, -5i64..=5),
        picks in (0usize..64, 0usize..64),
    ) {
        prop_assume!(p <= n && q <= n);
        let space = QuaternionSpace::new(n).unwrap();
        let v = VMap::new(&space, p, q, &phi::<Q>(&space, &unit_i()).unwrap()).unwrap();
        let basis = type_basis(&space, &unit_i(), p + q, 0).unwrap();
        let (x, y) = (&basis[picks.0 % basis.len()], &basis[picks.1 % basis.len()]);
        let ca = Cx::new(Q::from_int(a.0), Q::from_int(a.1));
        let cb = Cx::new(Q::from_int(b.0), Q::from_int(b.1));
        let combined = v.apply(&x.scale(&ca).add(&y.scale(&cb))).unwrap();
        let separate = v.apply(x).unwrap().scale(&ca).add(&v.apply(y).unwrap().scale(&cb));
        prop_assert!(combined.sub(&separate).is_zero());
    }
}

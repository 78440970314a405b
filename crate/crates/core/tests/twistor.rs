use proptest::prelude::*;

use quatcal::extalg::{pairing, ComplexSubspace, Polyvector};
use quatcal::linalg::Matrix;
use quatcal::quatspace::{invariance_residual, InducedStructure, QuaternionSpace, Unit};
use quatcal::twistor::torus::brute_force_invariant;
use quatcal::twistor::{
    coordinate_catalog, direct_calibration, intersection_rank, oriented_volume, pairing_polynomial, psi, scan_subtori, Classification, ScanOptions,
};

fn unit_triple() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0)
        .prop_filter("away from the origin", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| {
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / r)
        })
}

fn subspace(n: usize, unit: Unit, generators: &[Vec<f64>]) -> ComplexSubspace {
    ComplexSubspace::from_generators(QuaternionSpace::new(n).unwrap(), InducedStructure::unit(unit), generators).unwrap()
}

fn e(d: usize, r: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[r] = 1.0;
    v
}

#[test]
fn dichotomy_on_h2() {
    // A quaternionic line: k = 1 > i = 0.
    let w = subspace(2, Unit::I, &[e(8, 0), e(8, 2)]);
    assert_eq!(intersection_rank(&w).unwrap(), 1);
    assert_eq!(psi(&w, 3000).unwrap().classification, Classification::IdenticallyZero);
    // One complex line from each quaternionic line: k = 0.
    let w = subspace(2, Unit::I, &[e(8, 0), e(8, 4)]);
    assert_eq!(intersection_rank(&w).unwrap(), 0);
    let s = psi(&w, 3000).unwrap();
    assert_eq!(s.classification, Classification::StrictExtremumAtAxis);
    assert!(s.margin > 0.0);
}

#[test]
fn rational_structure_has_invariant_subtori() {
    // L = (3/5)I + (4/5)J has rational entries, so rational L-planes exist.
    let space = QuaternionSpace::new(1).unwrap();
    let l = InducedStructure::new(0.6, 0.8, 0.0).unwrap();
    let opts = ScanOptions { height: 2, ..ScanOptions::default() };
    let scan = scan_subtori(&space, &l, 0, &opts).unwrap();
    assert!(!scan.truncated);
    assert!(!scan.subtori.is_empty());
    let brute = brute_force_invariant(&space, &l, 2, 2, 1e-9).unwrap();
    let mut found: Vec<_> = scan.subtori.iter().map(|t| t.basis.clone()).collect();
    let mut expected = brute.clone();
    found.sort();
    expected.sort();
    assert_eq!(found, expected);
    let lm = l.matrix(&space);
    for basis in &brute {
        let cols: Vec<Vec<f64>> = basis.iter().map(|row| row.iter().map(|&x| x as f64).collect()).collect();
        let m = Matrix::from_columns(&cols);
        let orth = quatcal::extalg::orthonormalize(&m).unwrap();
        assert!(invariance_residual(&lm, &orth) < 1e-9);
    }
    assert_eq!(scan.non_quaternionic(), scan.subtori.len());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pairing_polynomial_matches_direct_evaluation(l in unit_triple(), i in 0usize..=2, pick in 0usize..64) {
        let space = QuaternionSpace::new(2).unwrap();
        let catalog = coordinate_catalog(&space, i).unwrap();
        let w = &catalog[pick % catalog.len()].subspace;
        let xi: Polyvector<f64> = oriented_volume(w).unwrap();
        let poly = pairing_polynomial(&space, i, &xi).unwrap();
        let direct = pairing(&direct_calibration(&space, &InducedStructure::from_array(l).unwrap(), i).unwrap(), &xi).unwrap().re;
        prop_assert!((poly.eval(&l) - direct).abs() < 1e-10);
    }
}

use proptest::prelude::*;

use quatcal::extalg::{subsets, Form, Polyvector};
use quatcal::linalg::Matrix;
use quatcal::{Cx, Rational, Scalar};

type Q = Rational;

const DIM: usize = 4;

fn form(degree: usize, coefs: &[(i64, i64)]) -> Form<Q> {
    let terms = subsets(DIM, degree)
        .into_iter()
        .zip(coefs)
        .map(|(m, &(re, im))| (m, Cx::new(Q::from_int(re), Q::from_int(im))));
    Form::from_terms(DIM, degree, terms).unwrap()
}

fn random_form(degree: usize) -> impl Strategy<Value = Form<Q>> {
    prop::collection::vec((-3i64..=3, -3i64..=3), 6).prop_map(move |c| form(degree, &c))
}

fn int_matrix() -> impl Strategy<Value = Matrix<Q>> {
    prop::collection::vec(-3i64..=3, DIM * DIM)
        .prop_map(|v| Matrix::from_rows(v.chunks(DIM).map(|r| r.iter().map(|&x| Q::from_int(x)).collect()).collect()))
}

/// Leibniz expansion over all permutations of four indices.
fn leibniz_det(m: &Matrix<Q>) -> Q {
    let mut total = Q::from_int(0);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| p[i] != p[j]));
                    if !distinct {
                        continue;
                    }
                    let inversions = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
                    let term = (0..4).fold(Q::from_int(1), |acc, i| acc * m[(i, p[i])].clone());
                    total = if inversions % 2 == 0 { total + term } else { total - term };
                }
            }
        }
    }
    total
}

fn sign(k: usize) -> Cx<Q> {
    Cx::new(Q::from_int(if k % 2 == 0 { 1 } else { -1 }), Q::from_int(0))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn wedge_is_graded_commutative(
        p in 0usize..=2,
        q in 0usize..=2,
        ca in prop::collection::vec((-3i64..=3, -3i64..=3), 6),
        cb in prop::collection::vec((-3i64..=3, -3i64..=3), 6),
    ) {
        let (a, b) = (form(p, &ca), form(q, &cb));
        prop_assert_eq!(a.wedge(&b).unwrap(), b.wedge(&a).unwrap().scale(&sign(p * q)));
    }

    #[test]
    fn wedge_is_associative_and_bilinear(a in random_form(1), b in random_form(1), c in random_form(2)) {
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        let sum = a.add(&b).wedge(&c).unwrap();
        prop_assert_eq!(sum, a.wedge(&c).unwrap().add(&b.wedge(&c).unwrap()));
    }

    #[test]
    fn pullback_respects_wedge(a in random_form(1), b in random_form(2), m in int_matrix()) {
        let lhs = a.wedge(&b).unwrap().pullback(&m);
        let rhs = a.pullback(&m).wedge(&b.pullback(&m)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pullback_of_volume_is_determinant(m in int_matrix()) {
        let vol = Form::<Q>::volume(DIM);
        let det = Cx::new(leibniz_det(&m), Q::from_int(0));
        prop_assert_eq!(vol.pullback(&m), vol.scale(&det));
    }

    #[test]
    fn hodge_star_squares_to_sign(k in 0usize..=4, coefs in prop::collection::vec((-3i64..=3, -3i64..=3), 6)) {
        let f = form(k, &coefs);
        prop_assert_eq!(f.hodge_star().hodge_star(), f.scale(&sign(k * (DIM - k))));
    }

    #[test]
    fn evaluation_on_frames_is_multilinear_alternating(f in random_form(2), m in int_matrix()) {
        let frame = Matrix::from_columns(&[m.column(0), m.column(1)]);
        let swapped = Matrix::from_columns(&[m.column(1), m.column(0)]);
        prop_assert_eq!(f.evaluate(&frame), -f.evaluate(&swapped));
        let xi = Polyvector::from_vectors(&frame);
        prop_assert_eq!(quatcal::extalg::pairing(&f, &xi).unwrap(), f.evaluate(&frame));
    }
}

use quatcal::linalg::Matrix;
use quatcal::quatspace::QuaternionSpace;
use quatcal::su2rep::{generators, isotypic_exact};
use quatcal::{Rational, Scalar};

type Q = Rational;

/// Number of `I`-weights equal to `±w` on `Λ^k`, from ranks of `A_I` and `A_I² + w²`.
fn weight_count(a_i: &Matrix<Q>, w: usize) -> usize {
    let size = a_i.rows;
    if w == 0 {
        return size - a_i.rank();
    }
    let shifted = a_i.matmul(a_i).shift(&Q::from_int((w * w) as i64));
    (size - shifted.rank()) / 2
}

#[test]
fn multiplicities_match_eigenspace_ranks() {
    for (n, max_k) in [(1, 4), (2, 4)] {
        let space = QuaternionSpace::new(n).unwrap();
        for k in 0..=max_k {
            let a_i = &generators::<Q>(&space, k).unwrap().a[0];
            let dec = isotypic_exact(&space, k).unwrap();
            for s in (0..=k).filter(|s| (k - s) % 2 == 0) {
                let expected = weight_count(a_i, s) - weight_count(a_i, s + 2);
                let found = dec.block(s).map_or(0, |b| b.multiplicity);
                assert_eq!(found, expected, "n={n} k={k} s={s}");
            }
        }
    }
}

#[test]
fn casimir_is_scalar_on_each_block() {
    let space = QuaternionSpace::new(1).unwrap();
    for k in 0..=4 {
        let g = generators::<Q>(&space, k).unwrap();
        let dec = isotypic_exact(&space, k).unwrap();
        let mut eigenvalues = Vec::new();
        for b in &dec.blocks {
            // C = s(s+2) on the weight-s block.
            let c = Q::from_int((b.weight * (b.weight + 2)) as i64);
            assert_eq!(g.casimir.matmul(&b.projector), b.projector.scale(&c), "k={k} s={}", b.weight);
            eigenvalues.push(c);
        }
        eigenvalues.dedup();
        assert_eq!(eigenvalues.len(), dec.blocks.len());
    }
}

#[test]
fn middle_degree_of_h2() {
    // Weight counts N(4), N(2), N(0) = 1, 16, 36 on Λ^4(R^8).
    let dec = isotypic_exact(&QuaternionSpace::new(2).unwrap(), 4).unwrap();
    assert_eq!(dec.table(), vec![[4, 0, 20, 20], [4, 2, 15, 45], [4, 4, 1, 5]]);
}

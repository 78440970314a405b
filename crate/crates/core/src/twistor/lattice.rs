//! Integer lattices in `Z^d`: Hermite normal form, integer kernels, saturation.
//!
//! Rows are lattice generators. Arithmetic is checked `i128`; overflow is an error,
//! never a silent wrap.

use crate::error::{Error, Result};

pub type Row = Vec<i128>;

fn overflow() -> Error {
    Error::Inconsistent("integer overflow in lattice reduction".into())
}

fn sub_mul(a: &mut Row, b: &Row, q: i128) -> Result<()> {
    for (x, y) in a.iter_mut().zip(b) {
        *x = x.checked_sub(q.checked_mul(*y).ok_or_else(overflow)?).ok_or_else(overflow)?;
    }
    Ok(())
}

/// Row Hermite normal form of the lattice spanned by `rows` (zero rows dropped):
/// positive pivots, strictly increasing pivot columns, entries above a pivot in `[0, pivot)`.
pub fn hnf(rows: &[Row], d: usize) -> Result<Vec<Row>> {
    let mut m: Vec<Row> = rows.iter().filter(|r| r.iter().any(|&x| x != 0)).cloned().collect();
    let mut out: Vec<Row> = Vec::new();
    for col in 0..d {
        loop {
            // Euclid on column `col` among the remaining rows.
            let Some(pivot) = (0..m.len()).filter(|&r| m[r][col] != 0).min_by_key(|&r| m[r][col].unsigned_abs()) else {
                break;
            };
            let mut done = true;
            for r in 0..m.len() {
                if r != pivot && m[r][col] != 0 {
                    let q = m[r][col].div_euclid(m[pivot][col]);
                    let p = m[pivot].clone();
                    sub_mul(&mut m[r], &p, q)?;
                    if m[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                let mut row = m.swap_remove(pivot);
                if row[col] < 0 {
                    row.iter_mut().for_each(|x| *x = -*x);
                }
                out.push(row);
                m.retain(|r| r.iter().any(|&x| x != 0));
                break;
            }
        }
    }
    // Reduce entries above each pivot.
    for k in 0..out.len() {
        let col = out[k].iter().position(|&x| x != 0).expect("nonzero row");
        let p = out[k].clone();
        for r in 0..k {
            let q = out[r][col].div_euclid(p[col]);
            if q != 0 {
                sub_mul(&mut out[r], &p, q)?;
            }
        }
    }
    Ok(out)
}

/// Basis of `{x ∈ Z^d : ⟨row, x⟩ = 0 for every row}`.
pub fn integer_kernel(rows: &[Row], d: usize) -> Result<Vec<Row>> {
    // Row-reduce [Aᵀ | I]; rows whose Aᵀ part vanishes span the kernel, and
    // being rows of a unimodular matrix they span a saturated lattice.
    let m = rows.len();
    let mut aug: Vec<Row> = (0..d)
        .map(|c| {
            let mut r: Row = rows.iter().map(|row| row[c]).collect();
            r.extend((0..d).map(|k| i128::from(k == c)));
            r
        })
        .collect();
    let mut next = 0;
    for col in 0..m {
        loop {
            let Some(pivot) =
                (next..aug.len()).filter(|&r| aug[r][col] != 0).min_by_key(|&r| aug[r][col].unsigned_abs())
            else {
                break;
            };
            let mut done = true;
            for r in next..aug.len() {
                if r != pivot && aug[r][col] != 0 {
                    let q = aug[r][col].div_euclid(aug[pivot][col]);
                    let p = aug[pivot].clone();
                    sub_mul(&mut aug[r], &p, q)?;
                    if aug[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                aug.swap(next, pivot);
                next += 1;
                break;
            }
        }
    }
    Ok(aug[next..].iter().map(|r| r[m..].to_vec()).collect())
}

/// `span_Q(rows) ∩ Z^d` in Hermite normal form.
pub fn saturate(rows: &[Row], d: usize) -> Result<Vec<Row>> {
    let nonzero: Vec<Row> = rows.iter().filter(|r| r.iter().any(|&x| x != 0)).cloned().collect();
    if nonzero.is_empty() {
        return Ok(Vec::new());
    }
    let perp = integer_kernel(&nonzero, d)?;
    let back = integer_kernel(&perp, d)?;
    hnf(&back, d)
}

/// Largest absolute entry.
pub fn height(rows: &[Row]) -> i128 {
    rows.iter().flat_map(|r| r.iter()).map(|x| x.abs()).max().unwrap_or(0)
}

pub fn apply(m: &[Row], v: &Row) -> Result<Row> {
    m.iter()
        .map(|row| {
            row.iter().zip(v).try_fold(0i128, |acc, (a, b)| acc.checked_add(a.checked_mul(*b).ok_or_else(overflow)?).ok_or_else(overflow))
        })
        .collect()
}

/// Rank of the lattice spanned by `rows`.
pub fn rank(rows: &[Row], d: usize) -> Result<usize> {
    Ok(hnf(rows, d)?.len())
}

/// Whether `span(basis)` is mapped into itself by every matrix in `maps`.
pub fn is_invariant(basis: &[Row], maps: &[Vec<Row>], d: usize) -> Result<bool> {
    let r = rank(basis, d)?;
    for m in maps {
        let mut rows = basis.to_vec();
        for b in basis {
            rows.push(apply(m, b)?);
        }
        if rank(&rows, d)? != r {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest saturated lattice containing `seed` and stable under `maps`.
pub fn closure(seed: &[Row], maps: &[Vec<Row>], d: usize) -> Result<Vec<Row>> {
    let mut basis = hnf(seed, d)?;
    loop {
        let mut rows = basis.clone();
        for m in maps {
            for b in &basis {
                rows.push(apply(m, b)?);
            }
        }
        let next = hnf(&rows, d)?;
        if next.len() == basis.len() {
            return saturate(&basis, d);
        }
        basis = next;
    }
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_of_simple_lattice() {
        let rows = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        let h = hnf(&rows, 3).unwrap();
        // Determinant is ±144 and the lattice is full rank.
        assert_eq!(h.len(), 3);
        let det: i128 = (0..3).map(|k| h[k][k]).product();
        assert_eq!(det, 144);
        for k in 0..3 {
            for r in 0..k {
                assert!(h[r][k] >= 0 && h[r][k] < h[k][k]);
            }
        }
    }

    #[test]
    fn kernel_and_saturation() {
        let k = integer_kernel(&[vec![1, 2, 3]], 3).unwrap();
        assert_eq!(k.len(), 2);
        assert!(k.iter().all(|v| v[0] + 2 * v[1] + 3 * v[2] == 0));
        let s = saturate(&[vec![2, 4, 0], vec![0, 0, 3]], 3).unwrap();
        assert_eq!(s, vec![vec![1, 2, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn closure_under_rotation() {
        // Rotation by π/2 in the first two coordinates.
        let rot = vec![vec![0, -1, 0], vec![1, 0, 0], vec![0, 0, 1]];
        let c = closure(&[vec![1, 1, 0]], &[rot.clone()], 3).unwrap();
        assert_eq!(c, vec![vec![1, 0, 0], vec![0, 1, 0]]);
        assert!(is_invariant(&c, &[rot.clone()], 3).unwrap());
        assert!(!is_invariant(&[vec![1, 0, 1]], &[rot], 3).unwrap());
    }

    #[test]
    fn overflow_is_reported() {
        let big = i128::MAX / 2;
        assert!(apply(&[vec![big, big]], &vec![3, 3]).is_err());
    }
}
